//! The `qim` command-line harness.
//!
//! Every subcommand resolves one [`ExperimentConfig`]: the preset of the
//! named experiment, then the `--config` file, then the flags.

mod commands;
pub mod error;
pub mod files;
pub mod plot;
pub mod svg;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qim_core::{ExperimentConfig, ExperimentId, NamedSet};

pub use error::{CliError, CliResult};

pub const OUT_DIR_ENV: &str = "QIM_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "qim", version, about = "Quantum information masking detection experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "qim-out")]
    pub out: PathBuf,

    /// Key/value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Training-set sizes, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub l: Option<Vec<usize>>,

    /// Number of groups.
    #[arg(long, global = true)]
    pub groups: Option<usize>,

    /// Restrict to these sets, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub sets: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate test sets and training sets or pools.
    Gen { experiment: Option<String> },
    /// Boosting on the training set (pure) or a random pool subset.
    Train { experiment: Option<String> },
    /// Active-learning boosting on each pool.
    Al { experiment: Option<String> },
    /// Random forest on a random pool subset.
    Rf { experiment: Option<String> },
    /// Check reduced-state invariance for all eight named sets.
    VerifyMasking {
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Offset added to the masker's beta or alpha.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        perturb: f64,
    },
    /// Render SVG charts from the output directory.
    Plot,
    /// Run an experiment end to end (fig2, fig3, fig6 .. fig10, custom).
    Reproduce { experiment: String },
}

impl Global {
    pub fn resolve(&self, experiment: Option<&str>) -> CliResult<ExperimentConfig> {
        let usage = |e: qim_core::Error| CliError::Usage(e.to_string());
        let id: Option<ExperimentId> = experiment.map(str::parse).transpose().map_err(usage)?;
        let mut cfg = match &self.config {
            Some(path) => {
                let mut text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                if let Some(id) = id {
                    text.push_str(&format!("\nexperiment={id}\n"));
                }
                ExperimentConfig::from_kv(&text).map_err(usage)?
            }
            None => ExperimentConfig::preset(id.unwrap_or(ExperimentId::Custom)),
        };
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(l) = &self.l {
            cfg.l_values = l.clone();
        }
        if let Some(g) = self.groups {
            cfg.groups = g;
        }
        if let Some(sets) = &self.sets {
            cfg.sets = sets
                .iter()
                .map(|s| s.parse::<NamedSet>())
                .collect::<qim_core::Result<_>>()
                .map_err(usage)?;
        }
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Gen { experiment } => commands::gen(&g.resolve(experiment.as_deref())?, &g.out),
        Command::Train { experiment } => commands::train(&g.resolve(experiment.as_deref())?, &g.out),
        Command::Al { experiment } => commands::al(&g.resolve(experiment.as_deref())?, &g.out),
        Command::Rf { experiment } => commands::rf(&g.resolve(experiment.as_deref())?, &g.out),
        Command::VerifyMasking { samples, tol, perturb } => {
            commands::verify_masking(*samples, *tol, *perturb, g.seed.unwrap_or(0))
        }
        Command::Plot => commands::plot(&g.out),
        Command::Reproduce { experiment } => commands::reproduce(&g.resolve(Some(experiment))?, &g.out),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
