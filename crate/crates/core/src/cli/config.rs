//! Flat `key = value` run configuration.
//!
//! Lines are `section.key = value`; `#` starts a comment. Every key has a
//! default, unknown keys are rejected, and later assignments win, so command
//! line flags applied after the file override it.
//!
//! | key | default |
//! |-----|---------|
//! | `seed` | `1` |
//! | `threads` | `0` (all logical processors) |
//! | `io.data` | `data.csv` |
//! | `io.labels` | `labels.csv` |
//! | `io.manifest` | `manifest.json` |
//! | `io.result` | `fit.json` |
//! | `io.out_dir` | `.` |
//! | `io.standardize` | `true` |
//! | `em.max_iterations` | `500` |
//! | `em.rel_tol` | `1e-6` |
//! | `em.n_restarts` | `5` |
//! | `em.init_method` | `kmeans_pp` (or `kmeans_pp_raw`, `random_partition`) |
//! | `em.gaussian_mode` | `false` |
//! | `fit.g` | `2` |
//! | `penalty.lambda_mu` | `0` |
//! | `penalty.lambda_sigma` | `0` |
//! | `grid.mu` | `0.5,1,2,4,8,16,32` |
//! | `grid.sigma` | `0.5,1,2,4,8,16,32` |
//! | `grid.scale` | `sqrt_n` (or a positive number) |
//! | `select.g_candidates` | `1,2,3,4,5` |
//! | `select.replicates` | `100` |
//! | `select.threshold` | `0.7` |
//! | `select.bootstrap` | `true` |
//! | `select.parameter_count` | `estimated` (or `subtract_uninformative`) |
//! | `select.bic_likelihood` | `penalized` (or `unpenalized`) |
//! | `select.heatmap_top` | `50` |
//! | `sim.n` | `200` |
//! | `sim.m` | `20` |
//! | `sim.q` | `200` |
//! | `sim.g` | `2` |
//! | `sim.dof` | `low` (ν = 3) or `high` (ν = 50) |
//! | `sim.overlaps` | built-in for g ≤ 3, else required: upper triangle, row-major |
//! | `sim.weights` | uniform |
//! | `sim.shuffle_columns` | `false` |

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::em::{EmConfig, InitMethod};
use crate::error::{Error, Result};
use crate::model::PenaltyConfig;
use crate::numerics::RngHandle;
use crate::selection::{lambda_grid, BicLikelihood, BicSettings, ParameterCount, DEFAULT_GRID_MULTIPLIERS, DEFAULT_REPLICATES, DEFAULT_THRESHOLD};
use crate::simulate::{DofRegime, SimDesign};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridScale {
    SqrtN,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,

    pub data: PathBuf,
    pub labels: PathBuf,
    pub manifest: PathBuf,
    pub result: PathBuf,
    pub out_dir: PathBuf,
    pub standardize: bool,

    pub max_iterations: usize,
    pub rel_tol: f64,
    pub n_restarts: usize,
    pub init_method: InitMethod,
    pub gaussian_mode: bool,

    pub fit_g: usize,
    pub lambda_mu: f64,
    pub lambda_sigma: f64,

    pub grid_mu: Vec<f64>,
    pub grid_sigma: Vec<f64>,
    pub grid_scale: GridScale,

    pub g_candidates: Vec<usize>,
    pub replicates: usize,
    pub threshold: f64,
    pub bootstrap: bool,
    pub bic: BicSettings,
    pub heatmap_top: usize,

    pub sim_n: usize,
    pub sim_m: usize,
    pub sim_q: usize,
    pub sim_g: usize,
    pub sim_dof: DofRegime,
    pub sim_overlaps: Option<Vec<f64>>,
    pub sim_weights: Option<Vec<f64>>,
    pub sim_shuffle_columns: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let em = EmConfig::default();
        Self {
            seed: 1,
            threads: 0,
            data: "data.csv".into(),
            labels: "labels.csv".into(),
            manifest: "manifest.json".into(),
            result: "fit.json".into(),
            out_dir: ".".into(),
            standardize: true,
            max_iterations: em.max_iterations,
            rel_tol: em.rel_tol,
            n_restarts: em.n_restarts,
            init_method: em.init_method,
            gaussian_mode: em.gaussian_mode,
            fit_g: 2,
            lambda_mu: 0.0,
            lambda_sigma: 0.0,
            grid_mu: DEFAULT_GRID_MULTIPLIERS.to_vec(),
            grid_sigma: DEFAULT_GRID_MULTIPLIERS.to_vec(),
            grid_scale: GridScale::SqrtN,
            g_candidates: vec![1, 2, 3, 4, 5],
            replicates: DEFAULT_REPLICATES,
            threshold: DEFAULT_THRESHOLD,
            bootstrap: true,
            bic: BicSettings::default(),
            heatmap_top: 50,
            sim_n: 200,
            sim_m: 20,
            sim_q: 200,
            sim_g: 2,
            sim_dof: DofRegime::Low,
            sim_overlaps: None,
            sim_weights: None,
            sim_shuffle_columns: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Validation(format!("invalid value {value:?} for {key}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

impl RunConfig {
    /// Applies one assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "seed" => self.seed = parse(key, v)?,
            "threads" => self.threads = parse(key, v)?,
            "io.data" => self.data = v.into(),
            "io.labels" => self.labels = v.into(),
            "io.manifest" => self.manifest = v.into(),
            "io.result" => self.result = v.into(),
            "io.out_dir" => self.out_dir = v.into(),
            "io.standardize" => self.standardize = parse(key, v)?,
            "em.max_iterations" => self.max_iterations = parse(key, v)?,
            "em.rel_tol" => self.rel_tol = parse(key, v)?,
            "em.n_restarts" => self.n_restarts = parse(key, v)?,
            "em.init_method" => {
                self.init_method = match v {
                    "kmeans_pp" => InitMethod::KmeansPp,
                    "kmeans_pp_raw" => InitMethod::KmeansPpRaw,
                    "random_partition" => InitMethod::RandomPartition,
                    _ => return Err(Error::Validation(format!("unknown init method {v:?}"))),
                }
            }
            "em.gaussian_mode" => self.gaussian_mode = parse(key, v)?,
            "fit.g" => self.fit_g = parse(key, v)?,
            "penalty.lambda_mu" => self.lambda_mu = parse(key, v)?,
            "penalty.lambda_sigma" => self.lambda_sigma = parse(key, v)?,
            "grid.mu" => self.grid_mu = parse_list(key, v)?,
            "grid.sigma" => self.grid_sigma = parse_list(key, v)?,
            "grid.scale" => {
                self.grid_scale = match v {
                    "sqrt_n" => GridScale::SqrtN,
                    _ => GridScale::Fixed(parse(key, v)?),
                }
            }
            "select.g_candidates" => self.g_candidates = parse_list(key, v)?,
            "select.replicates" => self.replicates = parse(key, v)?,
            "select.threshold" => self.threshold = parse(key, v)?,
            "select.bootstrap" => self.bootstrap = parse(key, v)?,
            "select.parameter_count" => {
                self.bic.parameter_count = match v {
                    "estimated" => ParameterCount::Estimated,
                    "subtract_uninformative" => ParameterCount::SubtractUninformative,
                    _ => return Err(Error::Validation(format!("unknown parameter count {v:?}"))),
                }
            }
            "select.bic_likelihood" => {
                self.bic.likelihood = match v {
                    "penalized" => BicLikelihood::Penalized,
                    "unpenalized" => BicLikelihood::Unpenalized,
                    _ => return Err(Error::Validation(format!("unknown bic likelihood {v:?}"))),
                }
            }
            "select.heatmap_top" => self.heatmap_top = parse(key, v)?,
            "sim.n" => self.sim_n = parse(key, v)?,
            "sim.m" => self.sim_m = parse(key, v)?,
            "sim.q" => self.sim_q = parse(key, v)?,
            "sim.g" => self.sim_g = parse(key, v)?,
            "sim.dof" => {
                self.sim_dof = match v {
                    "low" => DofRegime::Low,
                    "high" => DofRegime::High,
                    _ => return Err(Error::Validation(format!("sim.dof must be low or high, got {v:?}"))),
                }
            }
            "sim.overlaps" => self.sim_overlaps = Some(parse_list(key, v)?),
            "sim.weights" => self.sim_weights = Some(parse_list(key, v)?),
            "sim.shuffle_columns" => self.sim_shuffle_columns = parse(key, v)?,
            _ => return Err(Error::Validation(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies every assignment of a config file.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_error = |column: usize, message: String| Error::Parse {
                file: path.display().to_string(),
                line: i as u64 + 1,
                column: column as u64 + 1,
                message,
            };
            let Some(eq) = line.find('=') else {
                return Err(parse_error(0, "expected `key = value`".into()));
            };
            let key = line[..eq].trim();
            let offset = raw.find(line).unwrap_or(0);
            self.set(key, &line[eq + 1..])
                .map_err(|e| parse_error(offset, e.to_string()))?;
        }
        Ok(())
    }

    pub fn em_config(&self) -> Result<EmConfig> {
        let config = EmConfig {
            max_iterations: self.max_iterations,
            rel_tol: self.rel_tol,
            n_restarts: self.n_restarts,
            init_method: self.init_method,
            gaussian_mode: self.gaussian_mode,
            rng: RngHandle::new(self.seed),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn penalty(&self) -> Result<PenaltyConfig> {
        PenaltyConfig::new(self.lambda_mu, self.lambda_sigma)
    }

    pub fn grid(&self, n: usize) -> Vec<PenaltyConfig> {
        let scale = match self.grid_scale {
            GridScale::SqrtN => (n as f64).sqrt(),
            GridScale::Fixed(s) => s,
        };
        lambda_grid(&self.grid_mu, &self.grid_sigma, scale)
    }

    pub fn sim_design(&self) -> Result<SimDesign> {
        let g = self.sim_g;
        let seed = RngHandle::new(self.seed);
        let (n, m, q, dof) = (self.sim_n, self.sim_m, self.sim_q, self.sim_dof);
        let mut design = match (&self.sim_overlaps, g) {
            (Some(upper), _) => {
                if upper.len() != g * g.saturating_sub(1) / 2 {
                    return Err(Error::Validation(format!(
                        "sim.overlaps needs {} entries for g = {g}",
                        g * g.saturating_sub(1) / 2
                    )));
                }
                let mut o = vec![vec![0.0; g]; g];
                let mut it = upper.iter();
                for i in 0..g {
                    for k in (i + 1)..g {
                        let v = *it.next().expect("length checked");
                        o[i][k] = v;
                        o[k][i] = v;
                    }
                }
                SimDesign::new(n, m, q, o, dof, seed)
            }
            (None, 1) => SimDesign::one_cluster(n, m, q, dof, seed),
            (None, 2) => SimDesign::two_clusters(n, m, q, dof, seed),
            (None, 3) => SimDesign::three_clusters(n, m, q, dof, seed),
            (None, _) => return Err(Error::Validation(format!("sim.overlaps is required for g = {g}"))),
        };
        if let Some(w) = &self.sim_weights {
            design.weights = w.clone();
        }
        design.shuffle_columns = self.sim_shuffle_columns;
        design.validate()?;
        Ok(design)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let mut c = RunConfig::default();
        assert!(matches!(c.set("em.nope", "1"), Err(Error::Validation(_))));
        assert!(c.set("em.n_restarts", "x").is_err());
        c.set("grid.mu", "1, 2").unwrap();
        assert_eq!(c.grid_mu, vec![1.0, 2.0]);
    }

    #[test]
    fn file_errors_name_line_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# comment\nseed = 5\n\n  fit.g = two\n").unwrap();
        let mut c = RunConfig::default();
        match c.load_file(&path) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (4, 3)),
            other => panic!("{other:?}"),
        }
        assert_eq!(c.seed, 5);
    }

    #[test]
    fn overlaps_fill_symmetric_matrix() {
        let mut c = RunConfig::default();
        c.set("sim.g", "3").unwrap();
        c.set("sim.overlaps", "0.2,0.3,0.1").unwrap();
        let d = c.sim_design().unwrap();
        assert_eq!(d.target_overlaps[2][1], 0.1);
        c.set("sim.g", "4").unwrap();
        assert!(c.sim_design().is_err());
    }
}
