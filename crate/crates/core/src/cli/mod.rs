//! Command-line front end: `simulate`, `fit`, `select` and `evaluate`.
//!
//! Settings resolve as defaults, then `--config` file, then `--set key=value`
//! pairs, then dedicated flags. See [`config`] for every key. Exit codes: 0
//! success, 2 validation or parse error, 3 numerical failure (including a fit
//! that did not converge), 4 I/O error.

pub mod commands;
pub mod config;
pub mod io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_evaluate, cmd_fit, cmd_select, cmd_simulate};
pub use config::RunConfig;

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "ptmix", version, about = "Penalized Student-t mixture clustering with variable selection")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override any config key, e.g. `--set em.n_restarts=3`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every logical processor.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Simulate {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        q: Option<usize>,
        #[arg(long)]
        g: Option<usize>,
        /// `low` (ν = 3) or `high` (ν = 50).
        #[arg(long)]
        dof: Option<String>,
    },
    /// Fit one model at a fixed penalty.
    Fit {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        g: Option<usize>,
        #[arg(long)]
        lambda_mu: Option<f64>,
        #[arg(long)]
        lambda_sigma: Option<f64>,
        #[arg(long)]
        gaussian: bool,
    },
    /// Choose the penalty and the number of components, rank variables.
    Select {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Comma-separated candidates, e.g. `2,3,4`.
        #[arg(long)]
        g_candidates: Option<String>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        no_bootstrap: bool,
        #[arg(long)]
        gaussian: bool,
    },
    /// Score a fit or selection report against simulated truth.
    Evaluate {
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// `fit.json` or `report.json`.
        #[arg(long)]
        result: Option<PathBuf>,
    },
}

fn push<T: ToString>(pairs: &mut Vec<(String, String)>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        pairs.push((key.to_owned(), v.to_string()));
    }
}

fn path_str(p: Option<PathBuf>) -> Option<String> {
    p.map(|p| p.to_string_lossy().into_owned())
}

impl Cli {
    /// Resolves the effective configuration.
    pub fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.global.config {
            cfg.load_file(path)?;
        }
        for kv in &self.global.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k.trim(), v)?;
        }
        let mut pairs = Vec::new();
        push(&mut pairs, "seed", self.global.seed);
        push(&mut pairs, "threads", self.global.threads);
        push(&mut pairs, "io.out_dir", path_str(self.global.out_dir.clone()));
        match &self.command {
            Command::Simulate { n, m, q, g, dof } => {
                push(&mut pairs, "sim.n", *n);
                push(&mut pairs, "sim.m", *m);
                push(&mut pairs, "sim.q", *q);
                push(&mut pairs, "sim.g", *g);
                push(&mut pairs, "sim.dof", dof.clone());
            }
            Command::Fit { data, g, lambda_mu, lambda_sigma, gaussian } => {
                push(&mut pairs, "io.data", path_str(data.clone()));
                push(&mut pairs, "fit.g", *g);
                push(&mut pairs, "penalty.lambda_mu", *lambda_mu);
                push(&mut pairs, "penalty.lambda_sigma", *lambda_sigma);
                push(&mut pairs, "em.gaussian_mode", gaussian.then_some(true));
            }
            Command::Select { data, g_candidates, replicates, threshold, no_bootstrap, gaussian } => {
                push(&mut pairs, "io.data", path_str(data.clone()));
                push(&mut pairs, "select.g_candidates", g_candidates.clone());
                push(&mut pairs, "select.replicates", *replicates);
                push(&mut pairs, "select.threshold", *threshold);
                push(&mut pairs, "select.bootstrap", no_bootstrap.then_some(false));
                push(&mut pairs, "em.gaussian_mode", gaussian.then_some(true));
            }
            Command::Evaluate { labels, manifest, result } => {
                push(&mut pairs, "io.labels", path_str(labels.clone()));
                push(&mut pairs, "io.manifest", path_str(manifest.clone()));
                push(&mut pairs, "io.result", path_str(result.clone()));
            }
        }
        for (k, v) in pairs {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn execute(&self) -> Result<Vec<PathBuf>> {
        let cfg = self.run_config()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::Validation(format!("cannot start {} worker threads: {e}", cfg.threads)))?;
        pool.install(|| match self.command {
            Command::Simulate { .. } => cmd_simulate(&cfg),
            Command::Fit { .. } => cmd_fit(&cfg),
            Command::Select { .. } => cmd_select(&cfg),
            Command::Evaluate { .. } => cmd_evaluate(&cfg),
        })
    }
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match cli.execute() {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_set_and_file() {
        let dir = tempfile::tempdir().unwrap();
        let conf = dir.path().join("run.conf");
        std::fs::write(&conf, "fit.g = 4\nseed = 9\nem.n_restarts = 2\n").unwrap();
        let c = conf.to_str().unwrap();
        let cli = Cli::try_parse_from(["ptmix", "fit", "--config", c, "--set", "fit.g=3", "--g", "2"]).unwrap();
        let cfg = cli.run_config().unwrap();
        assert_eq!((cfg.fit_g, cfg.seed, cfg.n_restarts), (2, 9, 2));
        let cli = Cli::try_parse_from(["ptmix", "fit", "--config", c, "--set", "fit.g=3"]).unwrap();
        assert_eq!(cli.run_config().unwrap().fit_g, 3);
    }

    #[test]
    fn bad_arguments_exit_with_two() {
        assert_eq!(run(["ptmix", "fit", "--g", "two"]), 2);
        assert_eq!(run(["ptmix", "fit", "--set", "nope=1"]), 2);
    }
}
