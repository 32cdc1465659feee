//! Command-line driver: configuration, orchestration and report emission.

pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;

pub use commands::{run, Artifact, Command, Report};
pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "twistlab", version, about = "Twisted recurrence experiments with certified orbits")]
pub struct Cli {
    /// Config file with `[section]` headers and `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    pub samples: Option<u64>,
    /// Write reports into this directory instead of stdout.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, value_name = "K")]
    pub threads: Option<usize>,
    /// Starting precision in bits.
    #[arg(long, global = true, value_name = "BITS")]
    pub precision: Option<u32>,
    /// Precision cap in bits.
    #[arg(long, global = true, value_name = "BITS")]
    pub max_precision: Option<u32>,
    /// Override any key, e.g. `--set experiment.psi=power:0.5,1`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    /// Defaults, then the config file, then `--set`, then the dedicated flags.
    pub fn resolve(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        for kv in &self.overrides {
            cfg.apply_override(kv)?;
        }
        if let Some(s) = self.seed {
            cfg.experiment.seed = s;
        }
        if let Some(n) = self.samples {
            cfg.experiment.samples = n;
        }
        if let Some(p) = self.precision {
            cfg.precision.initial = Some(p);
        }
        if let Some(p) = self.max_precision {
            cfg.precision.max = Some(p);
        }
        if let Some(d) = &self.out {
            cfg.output.dir = Some(d.display().to_string());
        }
        Ok(cfg)
    }

    /// Resolves the config and runs the subcommand on the requested pool.
    pub fn execute(&self) -> CliResult<(ExperimentConfig, Report)> {
        let cfg = self.resolve()?;
        let report = match self.threads {
            Some(0) => {
                return Err(CliError::Config {
                    key: "threads".into(),
                    msg: "must be at least 1".into(),
                })
            }
            Some(k) => rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .expect("thread pool")
                .install(|| run(self.command, &cfg))?,
            None => run(self.command, &cfg)?,
        };
        Ok((cfg, report))
    }
}

/// Writes every artifact into `dir`.
pub fn write_report(report: &Report, dir: &Path) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths = Vec::new();
    for a in &report.artifacts {
        let p = dir.join(&a.file);
        std::fs::write(&p, &a.contents).map_err(|e| CliError::io(&p, e))?;
        paths.push(p);
    }
    Ok(paths)
}

/// Prints the primary report to `out` and the rest to `err`.
pub fn print_report(report: &Report, out: &mut impl Write, err: &mut impl Write) -> std::io::Result<()> {
    out.write_all(report.primary().contents.as_bytes())?;
    for a in &report.artifacts[1..] {
        writeln!(err, "# {}", a.file)?;
        err.write_all(a.contents.as_bytes())?;
    }
    Ok(())
}
