//! Run configuration: a TOML file of key-value pairs, overridden by flags.
//!
//! Recognised keys (all optional): `bits`, `q`, `t`, `theta0`, `theta_t`,
//! `theta1`, `theta_inf`, `sigma`, `s`, `weight_cap`, `window`, `cutoff`,
//! `k_eta`, `tol`. Complex values are written `"re,im"`.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::CliError;

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Common {
    /// TOML file with default values for the flags below
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Write the output here instead of stdout
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    /// Mantissa bits: 128, 192 or 256
    #[arg(long)]
    pub bits: Option<u32>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub t: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_t: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta1: Option<String>,
    /// Shifted value for the eight-member family, unshifted for check-riemann and the second family
    #[arg(long, allow_hyphen_values = true)]
    pub theta_inf: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    /// Instanton weight cap K
    #[arg(long)]
    pub weight_cap: Option<usize>,
    /// Fourier window N
    #[arg(long)]
    pub window: Option<usize>,
    /// Infinite-product cutoff P
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Cap on the inner partition sum of the braiding relation
    #[arg(long)]
    pub k_eta: Option<usize>,
    /// Pass threshold for numeric residuals
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Common {
    /// Flags first, then the config file.
    pub fn resolve(&self) -> Result<Common, CliError> {
        let Some(path) = &self.config else { return Ok(self.clone()) };
        let file = load(path)?;
        macro_rules! pick {
            ($($f:ident),*) => { Common { config: None, output: self.output.clone(), $($f: self.$f.clone().or(file.$f),)* } };
        }
        Ok(pick!(bits, q, t, theta0, theta_t, theta1, theta_inf, sigma, s, weight_cap, window, cutoff, k_eta, tol))
    }
}

fn load(path: &Path) -> Result<Common, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Per-command defaults, applied after flags and file.
pub struct Defaults {
    pub q: &'static str,
    pub t: &'static str,
    pub thetas: [&'static str; 6],
    pub weight_cap: usize,
    pub window: usize,
    pub tol: f64,
}

pub const CUTOFF: usize = 256;
pub const BITS: u32 = 128;

/// Generic point of the eight-member family used by the tau, bilinear and q-PVI checks.
pub const FAMILY: Defaults = Defaults {
    q: "0.3",
    t: "0.02",
    thetas: ["0.137", "0.211", "0.173", "0.291", "0.317", "0.83"],
    weight_cap: 8,
    window: 6,
    tol: 1e-8,
};

pub const QPVI: Defaults = Defaults { weight_cap: 6, window: 4, ..FAMILY };

pub const RIEMANN: Defaults = Defaults {
    q: "0.008",
    t: "0.2",
    thetas: ["0.137", "0.1", "0.05", "0.291", "0.317", "0.83"],
    weight_cap: 8,
    window: 6,
    tol: 1e-6,
};

/// Fully resolved numeric settings.
pub struct Resolved {
    pub bits: u32,
    pub q: String,
    pub t: String,
    pub thetas: [String; 6],
    pub weight_cap: usize,
    pub window: usize,
    pub cutoff: usize,
    pub k_eta: Option<usize>,
    pub tol: f64,
}

impl Common {
    pub fn with(&self, d: &Defaults) -> Result<Resolved, CliError> {
        let c = self.resolve()?;
        let or = |v: &Option<String>, i: usize| v.clone().unwrap_or_else(|| d.thetas[i].to_string());
        Ok(Resolved {
            bits: c.bits.unwrap_or(BITS),
            q: c.q.unwrap_or_else(|| d.q.to_string()),
            t: c.t.unwrap_or_else(|| d.t.to_string()),
            thetas: [
                or(&c.theta0, 0),
                or(&c.theta_t, 1),
                or(&c.theta1, 2),
                or(&c.theta_inf, 3),
                or(&c.sigma, 4),
                or(&c.s, 5),
            ],
            weight_cap: c.weight_cap.unwrap_or(d.weight_cap),
            window: c.window.unwrap_or(d.window),
            cutoff: c.cutoff.unwrap_or(CUTOFF),
            k_eta: c.k_eta,
            tol: c.tol.unwrap_or(d.tol),
        })
    }
}

/// Base point of the braiding checks; the relation itself runs at its own `--point`s.
pub const BRAID: Defaults = Defaults {
    q: "0.3",
    t: "0.02",
    thetas: ["0.137", "0.211", "0.173", "0.291", "0.317", "0.83"],
    weight_cap: 10,
    window: 4,
    tol: 1e-12,
};
