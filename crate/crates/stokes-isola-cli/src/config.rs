//! Run configuration stored as a flat `key=value` file.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            _ => bail!("unknown output format '{s}' (expected csv, json or svg)"),
        }
    }
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
            Self::Svg => "svg",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub h: f64,
    pub eps: f64,
    pub theta: f64,
    pub k: usize,
    pub nx: usize,
    pub nz: usize,
    pub contour_nodes: usize,
    pub tol: f64,
    pub out_dir: PathBuf,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            h: 1.0,
            eps: 0.01,
            theta: 0.0,
            k: 20,
            nx: 32,
            nz: 64,
            contour_nodes: 64,
            tol: 1e-5,
            out_dir: PathBuf::from("."),
            format: Format::Csv,
        }
    }
}

const KEYS: [&str; 10] = ["contour_nodes", "eps", "format", "h", "k", "nx", "nz", "out_dir", "theta", "tol"];

impl RunConfig {
    /// Keys in sorted order, floats in shortest round-trip form.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let v = match key {
                "contour_nodes" => self.contour_nodes.to_string(),
                "eps" => format!("{:?}", self.eps),
                "format" => self.format.as_str().to_string(),
                "h" => format!("{:?}", self.h),
                "k" => self.k.to_string(),
                "nx" => self.nx.to_string(),
                "nz" => self.nz.to_string(),
                "out_dir" => self.out_dir.display().to_string(),
                "theta" => format!("{:?}", self.theta),
                _ => format!("{:?}", self.tol),
            };
            let _ = writeln!(s, "{key}={v}");
        }
        s
    }

    /// Parses `key=value` lines; blank lines and `#` comments are skipped and
    /// missing keys keep their defaults.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').with_context(|| format!("line {}: expected key=value", n + 1))?;
            c.set(key.trim(), value.trim()).with_context(|| format!("line {}", n + 1))?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let float = |v: &str| v.parse::<f64>().with_context(|| format!("'{v}' is not a number"));
        let int = |v: &str| v.parse::<usize>().with_context(|| format!("'{v}' is not a non-negative integer"));
        match key {
            "h" => self.h = float(value)?,
            "eps" => self.eps = float(value)?,
            "theta" => self.theta = float(value)?,
            "k" => self.k = int(value)?,
            "nx" => self.nx = int(value)?,
            "nz" => self.nz = int(value)?,
            "contour_nodes" => self.contour_nodes = int(value)?,
            "tol" => self.tol = float(value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "format" => self.format = value.parse()?,
            _ => bail!("unknown key '{key}'"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            bail!("h must be positive, got {}", self.h);
        }
        if !(self.eps >= 0.0 && self.eps <= 0.05) {
            bail!("eps must lie in [0, 0.05], got {}", self.eps);
        }
        if !self.theta.is_finite() {
            bail!("theta must be finite");
        }
        if self.k < 16 {
            bail!("K must be at least 16, got {}", self.k);
        }
        if self.nx < 8 || self.nz < 8 {
            bail!("nx and nz must be at least 8");
        }
        if self.contour_nodes < 32 || self.contour_nodes % 2 != 0 {
            bail!("contour_nodes must be even and at least 32, got {}", self.contour_nodes);
        }
        if !(self.tol > 0.0) {
            bail!("tol must be positive, got {}", self.tol);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let c = RunConfig {
            h: 1.2345678901234567,
            eps: 0.0125,
            theta: -3.3e-3,
            k: 24,
            nx: 48,
            nz: 80,
            contour_nodes: 128,
            tol: 1e-7,
            out_dir: PathBuf::from("out/run 1"),
            format: Format::Json,
        };
        let text = c.to_kv();
        assert_eq!(RunConfig::from_kv(&text).unwrap(), c);
        assert_eq!(RunConfig::from_kv(&text).unwrap().to_kv(), text);
    }

    #[test]
    fn defaults_fill_missing_keys() {
        let c = RunConfig::from_kv("# partial\nh=2\n\neps = 0.02\n").unwrap();
        assert_eq!(c.h, 2.0);
        assert_eq!(c.eps, 0.02);
        assert_eq!(c.k, RunConfig::default().k);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::from_kv("h=-1").is_err());
        assert!(RunConfig::from_kv("k=8").is_err());
        assert!(RunConfig::from_kv("colour=red").is_err());
        assert!(RunConfig::from_kv("h").is_err());
        assert!(RunConfig::from_kv("format=png").is_err());
    }
}
