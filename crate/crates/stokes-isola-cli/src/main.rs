//! Command-line front end for the resonance, coefficient, isola and validation
//! computations.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use stokes_isola::isola::{default_grid, ScanQuantity};

use commands::{log_grid, Emitted};
use config::{Format, RunConfig};

#[derive(Parser)]
#[command(name = "stokes-isola", version, about = "Transverse high-frequency instabilities of Stokes waves")]
struct Cli {
    /// Read defaults from a key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Mean depth.
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Wave amplitude.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Scaled detuning.
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Fourier truncation of the validator.
    #[arg(long, visible_alias = "K", global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    nx: Option<usize>,
    #[arg(long, global = true)]
    nz: Option<usize>,
    #[arg(long, global = true)]
    contour_nodes: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Directory for written files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Format printed to stdout: csv, json or svg.
    #[arg(long, global = true)]
    format: Option<Format>,
    /// Run the command's invariant checks instead of its computation.
    #[arg(long, global = true)]
    seed_check: bool,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resonant transverse wavenumber at one depth or over a log-spaced range.
    Resonance {
        #[arg(long)]
        h_min: Option<f64>,
        #[arg(long)]
        h_max: Option<f64>,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Coefficients of the reduced 2x2 matrix.
    Coeffs,
    /// Taylor coefficients of the Dirichlet-Neumann multipliers.
    DnoDump(DnoArgs),
    /// Dirichlet-Neumann utilities.
    Dno {
        #[command(subcommand)]
        action: DnoAction,
    },
    /// Predicted isola of unstable eigenvalues.
    Isola {
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
    /// Tabulate a quantity over depth.
    Scan {
        /// One of beta_star, b30, kappa0, kappa1.
        #[arg(long, default_value = "b30")]
        quantity: String,
        #[arg(long)]
        h_min: Option<f64>,
        #[arg(long)]
        h_max: Option<f64>,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Bisection steps at each sign change.
        #[arg(long, default_value_t = 0)]
        refine: usize,
    },
    /// Compare the predicted isola with eigenvalues of the truncated operator.
    Validate {
        #[arg(long, default_value_t = 41)]
        thetas: usize,
    },
    /// Critical depth at which the leading growth rate vanishes.
    Hcrit {
        #[arg(long, default_value_t = 0.2)]
        lo: f64,
        #[arg(long, default_value_t = 0.3)]
        hi: f64,
    },
}

#[derive(Subcommand)]
enum DnoAction {
    /// Taylor coefficients of the Dirichlet-Neumann multipliers.
    Dump(DnoArgs),
}

#[derive(Args)]
struct DnoArgs {
    #[arg(long, default_value_t = -6, allow_hyphen_values = true)]
    kmin: i32,
    #[arg(long, default_value_t = 6, allow_hyphen_values = true)]
    kmax: i32,
    /// Transverse wavenumber; defaults to the resonant value.
    #[arg(long)]
    beta: Option<f64>,
    /// Use the direct elliptic solver instead of the recursion.
    #[arg(long)]
    oracle: bool,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Resonance { .. } => "resonance",
            Self::Coeffs => "coeffs",
            Self::DnoDump(_) | Self::Dno { .. } => "dno-dump",
            Self::Isola { .. } => "isola",
            Self::Scan { .. } => "scan",
            Self::Validate { .. } => "validate",
            Self::Hcrit { .. } => "hcrit",
        }
    }
}

fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfig::from_kv(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    cfg.h = cli.h.unwrap_or(cfg.h);
    cfg.eps = cli.eps.unwrap_or(cfg.eps);
    cfg.theta = cli.theta.unwrap_or(cfg.theta);
    cfg.k = cli.k.unwrap_or(cfg.k);
    cfg.nx = cli.nx.unwrap_or(cfg.nx);
    cfg.nz = cli.nz.unwrap_or(cfg.nz);
    cfg.contour_nodes = cli.contour_nodes.unwrap_or(cfg.contour_nodes);
    cfg.tol = cli.tol.unwrap_or(cfg.tol);
    cfg.out_dir = cli.out.clone().unwrap_or(cfg.out_dir);
    cfg.format = cli.format.unwrap_or(cfg.format);
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("STOKES_ISOLA_THREADS") {
        let n: usize = v.parse().with_context(|| format!("STOKES_ISOLA_THREADS='{v}' is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    Ok(())
}

fn depth_grid(h_min: Option<f64>, h_max: Option<f64>, points: usize) -> Result<Vec<f64>> {
    match (h_min, h_max) {
        (None, None) => Ok(default_grid()),
        (lo, hi) => log_grid(lo.unwrap_or(0.1), hi.unwrap_or(10.0), points),
    }
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<Emitted> {
    match &cli.command {
        Command::Resonance { h_min: None, h_max: None, .. } => commands::resonance_single(cfg.h, cfg.tol),
        Command::Resonance { h_min, h_max, points } => commands::resonance_range(&depth_grid(*h_min, *h_max, *points)?),
        Command::Coeffs => commands::coeffs(cfg),
        Command::DnoDump(a) | Command::Dno { action: DnoAction::Dump(a) } => commands::dno_dump(cfg, a.kmin, a.kmax, a.beta, a.oracle),
        Command::Isola { samples } => commands::isola_cmd(cfg, *samples),
        Command::Scan { quantity, h_min, h_max, points, refine } => {
            commands::scan(&depth_grid(*h_min, *h_max, *points)?, ScanQuantity::parse(quantity)?, *refine)
        }
        Command::Validate { thetas } => commands::validate(cfg, *thetas),
        Command::Hcrit { lo, hi } => commands::hcrit(*lo, *hi, cfg.tol.min(1e-6)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> Result<ExitCode> {
        configure_threads()?;
        let cfg = effective_config(&cli)?;
        if cli.dump_config {
            print!("{}", cfg.to_kv());
            return Ok(ExitCode::SUCCESS);
        }
        if cli.seed_check {
            let tally = commands::seed_check(cli.command.name(), &cfg);
            for line in &tally.lines {
                println!("{line}");
            }
            println!("{} passed, {} failed", tally.passed, tally.failed);
            return Ok(if tally.failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
        let emitted = run(&cli, &cfg)?;
        print!("{}", emitted.write_all(&cfg)?);
        Ok(ExitCode::SUCCESS)
    })();
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
