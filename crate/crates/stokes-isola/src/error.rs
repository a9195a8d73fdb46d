use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("root solver did not converge; last bracket [{lo}, {hi}]")]
    Solver { lo: f64, hi: f64 },

    #[error("no sign change on bracket [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("amplitude {eps} exceeds the series guard {guard}")]
    Range { eps: f64, guard: f64 },

    #[error("fixed-point iteration failed to converge after {iterations} sweeps (last update {last_update:e})")]
    Convergence { iterations: usize, last_update: f64 },

    #[error("resolvent pole at mode k={k}")]
    Pole { k: i32 },

    #[error("contour quadrature not converged: change {change:e} at {nodes} nodes")]
    Quadrature { nodes: usize, change: f64 },

    #[error("rate collision at order {order}, mode {k}: {detail}")]
    RateCollision { order: usize, k: i32, detail: String },

    #[error("singular collocation system (pivot {pivot:e}); increase Nz")]
    Resolution { pivot: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("degenerate isola: |b30| = {b30:e} is below the threshold (depth near h_crit)")]
    Degenerate { b30: f64 },

    #[error("eigenvalue pairing ambiguous: distances {d1:e} and {d2:e}")]
    Pairing { d1: f64, d2: f64 },

    #[error("eigensolver failed: {0}")]
    Eigen(String),
}

pub type Result<T> = std::result::Result<T, Error>;
