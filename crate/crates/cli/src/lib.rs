//! Experiment runner for the piezoelectric beam lab: configuration loading,
//! subcommands, report files and SVG plots.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{load_config, parse_config, ExperimentConfig};
pub use error::{CliError, CliResult, Violation};

#[derive(Debug, Parser)]
#[command(
    name = "piezo-lab",
    version,
    about = "Piezoelectric beam with tip body: simulation and spectral lab"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config; omitted keys take their defaults.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time-step the configured initial data and write the energy ledger as CSV.
    Simulate(Common),
    /// Eigenvalues of the discrete generator with abscissa and branch fit (JSON).
    Spectrum(Common),
    /// Resolvent norm along the imaginary axis (CSV, or JSON for a .json path).
    Resolvent {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lmin: Option<f64>,
        #[arg(long)]
        lmax: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Spectral abscissa for each mesh size in n_list (JSON).
    AbscissaTrend(Common),
    /// Log-log fit of the energy over a time window (JSON).
    Decay {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 2, value_names = ["T0", "T1"], allow_negative_numbers = true)]
        window: Option<Vec<f64>>,
    },
    /// Multiplier inequality with q(x) = x/L on a simulated trajectory (JSON).
    MultiplierCheck(Common),
    /// Resolvent identity and estimate under refinement (JSON).
    ResolventIdentity(Common),
    /// Static problem A U = F under refinement (JSON).
    StaticSolve(Common),
    /// Invariant suites; exit status 0 iff all pass.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Render a report as SVG.
    Plot {
        #[arg(long)]
        kind: String,
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn resolve(common: &Common) -> CliResult<ExperimentConfig> {
    match &common.config {
        Some(path) => load_config(path),
        None => Ok(ExperimentConfig::default()),
    }
}

fn revalidate(cfg: ExperimentConfig) -> CliResult<ExperimentConfig> {
    let v = cfg.violations();
    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Config(v))
    }
}

/// Caps rayon's global pool at `PIEZO_LAB_THREADS` when set.
pub fn configure_threads(value: Option<&str>) -> CliResult<()> {
    let Some(raw) = value else { return Ok(()) };
    let n: usize = raw.trim().parse().ok().filter(|n| *n >= 1).ok_or_else(|| {
        CliError::Config(vec![Violation::new(
            "PIEZO_LAB_THREADS",
            format!("expected a positive integer, got {raw:?}"),
        )])
    })?;
    // A pool built earlier in the same process keeps its size.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(c) => commands::simulate(&resolve(&c)?, c.out.as_deref()),
        Command::Spectrum(c) => commands::spectrum(&resolve(&c)?, c.out.as_deref()),
        Command::Resolvent {
            common,
            lmin,
            lmax,
            points,
        } => {
            let mut cfg = resolve(&common)?;
            cfg.lambda_min = lmin.unwrap_or(cfg.lambda_min);
            cfg.lambda_max = lmax.unwrap_or(cfg.lambda_max);
            cfg.lambda_points = points.unwrap_or(cfg.lambda_points);
            commands::resolvent(&revalidate(cfg)?, common.out.as_deref())
        }
        Command::AbscissaTrend(c) => commands::abscissa_trend(&resolve(&c)?, c.out.as_deref()),
        Command::Decay { common, window } => {
            let mut cfg = resolve(&common)?;
            if let Some(w) = window {
                cfg.window = [w[0], w[1]];
            }
            commands::decay(&revalidate(cfg)?, common.out.as_deref())
        }
        Command::MultiplierCheck(c) => commands::multiplier(&resolve(&c)?, c.out.as_deref()),
        Command::ResolventIdentity(c) => {
            commands::resolvent_identity(&resolve(&c)?, c.out.as_deref())
        }
        Command::StaticSolve(c) => commands::static_study(&resolve(&c)?, c.out.as_deref()),
        Command::Verify { common, suite } => {
            commands::verify(&resolve(&common)?, &suite, common.out.as_deref())
        }
        Command::Plot { kind, input, out } => {
            let kind: plot::PlotKind = kind.parse()?;
            let text = std::fs::read_to_string(&input).map_err(|e| CliError::io(&input, e))?;
            let svg = plot::render(kind, &text)?;
            output::emit(out.as_deref(), &svg)
        }
    }
}

/// Parses `args`, runs the command and returns the process exit status.
/// Errors go to stderr as one JSON object.
pub fn main_with_args<I, T>(args: I, threads: Option<&str>) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let err = CliError::Input(e.to_string().trim().to_string());
            eprintln!("{}", output::to_json_line(&err.to_json()));
            return err.exit_code();
        }
    };
    match configure_threads(threads).and_then(|_| execute(cli)) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{}", output::to_json_line(&err.to_json()));
            err.exit_code()
        }
    }
}
