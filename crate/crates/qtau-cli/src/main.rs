//! `qtau`: batch driver for the verification suites and evaluators.
//!
//! Exit codes: 0 every check passed, 1 an identity failed, 2 bad input,
//! resonance or any other precondition failure. `QTAU_THREADS` sets the
//! worker thread count.

mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{BraidArgs, LemmaArgs, QpviArgs, TauArgs};
use config::Common;

pub const THREADS_VAR: &str = "QTAU_THREADS";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Qtau(qtau::Error),
}

impl From<qtau::Error> for CliError {
    fn from(e: qtau::Error) -> Self {
        CliError::Qtau(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "usage: {s}"),
            CliError::Qtau(e) => write!(f, "{e}"),
        }
    }
}

/// What a command produced, and whether every check in it passed.
pub struct Outcome {
    pub body: String,
    pub pass: bool,
}

#[derive(Parser)]
#[command(name = "qtau", version, about = "q-deformed conformal blocks and q-PVI tau functions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact Nekrasov-factor identities over the rationals
    CheckLemmas(LemmaArgs),
    /// Braiding matrix properties, degenerate blocks and the braiding relation
    CheckBraiding {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: BraidArgs,
    },
    /// Tau functions at t, qt and t/q, or on a geometric t-grid as CSV
    EvalTau {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: TauArgs,
    },
    /// The eight bilinear relations and the z-consistency relation
    CheckBilinear {
        #[command(flatten)]
        common: Common,
    },
    /// q-PVI equations along consecutive t-steps
    CheckQpvi {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: QpviArgs,
    },
    /// Structure of the Riemann problem on the mid-annulus circle
    CheckRiemann {
        #[command(flatten)]
        common: Common,
    },
}

macro_rules! by_bits {
    ($common:expr, $defaults:expr, $f:ident $(, $a:expr)*) => {{
        let r = $common.with(&$defaults)?;
        match r.bits {
            128 => commands::$f::<qtau::C128>(&r $(, $a)*),
            192 => commands::$f::<qtau::C192>(&r $(, $a)*),
            256 => commands::$f::<qtau::C256>(&r $(, $a)*),
            b => Err(CliError::Usage(format!("unsupported mantissa width {b}; use 128, 192 or 256"))),
        }
    }};
}

fn dispatch(cmd: &Cmd) -> Result<(Outcome, Option<std::path::PathBuf>), CliError> {
    use config::{BRAID, FAMILY, QPVI, RIEMANN};
    Ok(match cmd {
        Cmd::CheckLemmas(a) => (commands::check_lemmas(a)?, a.output.clone()),
        Cmd::CheckBraiding { common, args } => (by_bits!(common, BRAID, check_braiding, args)?, common.output.clone()),
        Cmd::EvalTau { common, args } => (by_bits!(common, FAMILY, eval_tau, args)?, common.output.clone()),
        Cmd::CheckBilinear { common } => (by_bits!(common, FAMILY, check_bilinear)?, common.output.clone()),
        Cmd::CheckQpvi { common, args } => (by_bits!(common, QPVI, check_qpvi, args)?, common.output.clone()),
        Cmd::CheckRiemann { common } => (by_bits!(common, RIEMANN, check_riemann)?, common.output.clone()),
    })
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| CliError::Usage(format!("{THREADS_VAR}={v} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("{THREADS_VAR}: {e}")))
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    init_threads()?;
    let (out, path) = dispatch(&cli.cmd)?;
    match path {
        Some(p) => std::fs::write(&p, &out.body).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(out.body.as_bytes()).and_then(|_| so.flush()).map_err(|e| CliError::Usage(e.to_string()))?;
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) if o.pass => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("qtau: {e}");
            ExitCode::from(2)
        }
    }
}
