//! Modified BIC, penalty grid search, bootstrap selection probabilities and
//! the two-step choice of the number of components.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::{fit_from_starts, initial_params, initial_starts, EmConfig};
use crate::error::{Error, Result};
use crate::model::{DataMatrix, FitResult, MixtureParams, PenaltyConfig};

/// Default bootstrap replicate count.
pub const DEFAULT_REPLICATES: usize = 100;
/// Default selection-probability threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.7;
/// Base multipliers of the default penalty grid (scaled by `√n`).
pub const DEFAULT_GRID_MULTIPLIERS: [f64; 7] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0];

const BOOTSTRAP_STREAM: u64 = 0xB007;

/// How the effective number of parameters is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterCount {
    /// `(g - 1) + 2gm + g`: weights, informative locations and variances, dof.
    #[default]
    Estimated,
    /// The same count minus `q = p - m`, which can go negative.
    SubtractUninformative,
}

/// Which log-likelihood enters the BIC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BicLikelihood {
    /// The penalized log-likelihood of the fit.
    #[default]
    Penalized,
    /// The plain log-likelihood at the penalized estimate.
    Unpenalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BicSettings {
    pub parameter_count: ParameterCount,
    pub likelihood: BicLikelihood,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BicRecord {
    pub g: usize,
    pub lambda: PenaltyConfig,
    pub m_selected: usize,
    pub effective_params: f64,
    /// `+∞` for fits that did not converge.
    pub bic: f64,
    pub penalized_loglik: f64,
    pub converged: bool,
}

pub fn modified_bic(fit: &FitResult, g: usize, p: usize) -> BicRecord {
    modified_bic_with(fit, g, p, BicSettings::default())
}

/// `-2 ln L_P + r ln n`, or with the plain log-likelihood.
pub fn modified_bic_with(fit: &FitResult, g: usize, p: usize, settings: BicSettings) -> BicRecord {
    let m = fit.informative_mask.iter().filter(|&&x| x).count();
    let (gf, mf) = (g as f64, m as f64);
    let mut r = (gf - 1.0) + 2.0 * gf * mf + gf;
    if settings.parameter_count == ParameterCount::SubtractUninformative {
        r -= (p - m) as f64;
    }
    let loglik = match settings.likelihood {
        BicLikelihood::Penalized => fit.penalized_loglik,
        BicLikelihood::Unpenalized => fit.penalized_loglik + fit.params.penalty(&fit.penalty),
    };
    let bic = if fit.converged {
        -2.0 * loglik + r * (fit.n_samples as f64).ln()
    } else {
        f64::INFINITY
    };
    BicRecord {
        g,
        lambda: fit.penalty,
        m_selected: m,
        effective_params: r,
        bic,
        penalized_loglik: fit.penalized_loglik,
        converged: fit.converged,
    }
}

/// Full Cartesian grid of [`DEFAULT_GRID_MULTIPLIERS`] × `√n` for both penalties.
pub fn default_lambda_grid(n: usize) -> Vec<PenaltyConfig> {
    lambda_grid(&DEFAULT_GRID_MULTIPLIERS, &DEFAULT_GRID_MULTIPLIERS, (n as f64).sqrt())
}

pub fn lambda_grid(mu_values: &[f64], sigma_values: &[f64], scale: f64) -> Vec<PenaltyConfig> {
    mu_values
        .iter()
        .flat_map(|&m| {
            sigma_values.iter().map(move |&s| PenaltyConfig {
                lambda_mu: m * scale,
                lambda_sigma: s * scale,
            })
        })
        .collect()
}

fn dedup_grid(grid: &[PenaltyConfig]) -> Vec<PenaltyConfig> {
    let mut out: Vec<PenaltyConfig> = Vec::with_capacity(grid.len());
    for pc in grid {
        if !out.iter().any(|o| o == pc) {
            out.push(*pc);
        }
    }
    out
}

/// Outcome of a penalty grid search at fixed `g`.
#[derive(Debug, Clone)]
pub struct LambdaSearch {
    pub chosen: PenaltyConfig,
    /// BIC record of the chosen grid point.
    pub record: BicRecord,
    pub table: Vec<BicRecord>,
    /// Fit at the chosen penalty.
    pub fit: FitResult,
    pub failures: Vec<String>,
}

/// Grid point with the smallest modified BIC.
pub fn select_lambda(
    data: &DataMatrix,
    g: usize,
    grid: &[PenaltyConfig],
    config: &EmConfig,
) -> Result<(PenaltyConfig, Vec<BicRecord>)> {
    search_lambda(data, g, grid, config, BicSettings::default()).map(|s| (s.chosen, s.table))
}

/// Grid search keeping the winning fit. Every grid point starts from the same
/// initializations, so BIC differences reflect the penalty alone. Ties go to
/// the larger `λ_μ + λ_σ`.
pub fn search_lambda(
    data: &DataMatrix,
    g: usize,
    grid: &[PenaltyConfig],
    config: &EmConfig,
    bic: BicSettings,
) -> Result<LambdaSearch> {
    let grid = dedup_grid(grid);
    if grid.is_empty() {
        return Err(Error::Selection("empty penalty grid".into()));
    }
    for pc in &grid {
        PenaltyConfig::new(pc.lambda_mu, pc.lambda_sigma)?;
    }
    let starts = initial_starts(data, g, config)?;
    let fits: Vec<Result<FitResult>> = grid
        .par_iter()
        .map(|pc| fit_from_starts(data, pc, config, &starts))
        .collect();

    let p = data.n_vars();
    let mut table = Vec::new();
    let mut failures = Vec::new();
    let mut best: Option<(BicRecord, FitResult)> = None;
    for (pc, fit) in grid.iter().zip(fits) {
        match fit {
            Ok(fit) => {
                let record = modified_bic_with(&fit, g, p, bic);
                let better = match &best {
                    None => true,
                    Some((b, _)) => {
                        record.bic < b.bic || (record.bic == b.bic && record.lambda.total() > b.lambda.total())
                    }
                };
                table.push(record.clone());
                if better {
                    best = Some((record, fit));
                }
            }
            Err(e) => failures.push(format!("lambda_mu={}, lambda_sigma={}: {e}", pc.lambda_mu, pc.lambda_sigma)),
        }
    }
    match best {
        Some((record, fit)) => Ok(LambdaSearch {
            chosen: record.lambda,
            record,
            table,
            fit,
            failures,
        }),
        None => Err(Error::Selection(format!("every grid point failed: {}", failures.join("; ")))),
    }
}

/// Per-model summary kept in a [`SelectionReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub g: usize,
    pub lambda: PenaltyConfig,
    pub bic: f64,
    /// Bootstrap selection probabilities, when the bootstrap ran for this model.
    pub selection_probabilities: Option<Vec<f64>>,
    pub selected: Vec<usize>,
    pub replicate_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    /// Per-variable selection probability; 0/1 indicators of the chosen fit's
    /// mask when no bootstrap was run.
    pub selection_probabilities: Vec<f64>,
    pub threshold: f64,
    /// Variable indices by descending probability, ties by ascending index.
    pub ranked_variables: Vec<usize>,
    pub chosen_lambda: PenaltyConfig,
    pub chosen_g: usize,
    pub bic_table: Vec<BicRecord>,
    /// Variables retained: the union of per-model bootstrap selections, or the
    /// chosen fit's informative variables without the bootstrap.
    pub stable_set: Vec<usize>,
    pub used_bootstrap: bool,
    /// The bootstrap found no stable variable and the full-data choice was kept.
    pub bootstrap_fallback: bool,
    /// Choice of `g` by BIC on all variables.
    pub full_data_g: usize,
    /// Hard assignments of the chosen model.
    pub assignments: Vec<usize>,
    pub models: Vec<ModelSummary>,
}

/// Variable order by descending probability, ties by ascending index.
pub fn rank_variables(probabilities: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..probabilities.len()).collect();
    order.sort_by(|&a, &b| probabilities[b].total_cmp(&probabilities[a]).then(a.cmp(&b)));
    order
}

/// Variables whose probability reaches `threshold`.
pub fn thresholded(probabilities: &[f64], threshold: f64) -> Vec<usize> {
    probabilities
        .iter()
        .enumerate()
        .filter_map(|(d, &pr)| (pr >= threshold).then_some(d))
        .collect()
}

/// Raw bootstrap output.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapOutcome {
    pub probabilities: Vec<f64>,
    pub successes: usize,
    pub failures: Vec<String>,
}

/// Refits on `replicates` subsamples of `⌊n/2⌋` rows drawn with replacement
/// and counts how often each variable is informative. Replicate `b` uses
/// stream `config.rng.derive(..).derive(b)`, so the outcome does not depend on
/// execution order. When `warm_start` is given it replaces the first fresh
/// initialization of every replicate.
pub fn bootstrap_probabilities(
    data: &DataMatrix,
    g: usize,
    lambda_star: &PenaltyConfig,
    replicates: usize,
    config: &EmConfig,
    warm_start: Option<&MixtureParams>,
) -> Result<BootstrapOutcome> {
    if replicates < 1 {
        return Err(Error::Validation("at least one bootstrap replicate is required".into()));
    }
    let n = data.n_samples();
    let size = n / 2;
    if size < 2 || size < g {
        return Err(Error::Validation(format!("subsample size {size} too small for g = {g}")));
    }
    let base = config.rng.derive(BOOTSTRAP_STREAM);
    let masks: Vec<Result<Vec<bool>>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let stream = base.derive(b as u64);
            let mut gen = stream.derive(0).generator();
            let rows: Vec<usize> = (0..size).map(|_| rand::Rng::random_range(&mut gen, 0..n)).collect();
            let sub = data.select_rows(&rows)?;
            let replicate_config = config.with_rng(stream.derive(1));
            let mut starts = Vec::with_capacity(config.n_restarts);
            if let Some(parent) = warm_start {
                starts.push(Ok(parent.clone()));
            }
            for r in starts.len()..config.n_restarts {
                starts.push(initial_params(
                    &sub,
                    g,
                    config.init_method,
                    config.family(),
                    &replicate_config.rng.derive(r as u64),
                ));
            }
            fit_from_starts(&sub, lambda_star, &replicate_config, &starts).map(|f| f.informative_mask)
        })
        .collect();

    let p = data.n_vars();
    let mut counts = vec![0usize; p];
    let mut successes = 0;
    let mut failures = Vec::new();
    for (b, mask) in masks.into_iter().enumerate() {
        match mask {
            Ok(mask) => {
                successes += 1;
                counts.iter_mut().zip(mask).for_each(|(c, m)| *c += usize::from(m));
            }
            Err(e) => failures.push(format!("replicate {b}: {e}")),
        }
    }
    if 2 * failures.len() > replicates {
        return Err(Error::Selection(format!(
            "{} of {replicates} bootstrap replicates failed: {}",
            failures.len(),
            failures.join("; ")
        )));
    }
    Ok(BootstrapOutcome {
        probabilities: counts.iter().map(|&c| c as f64 / successes as f64).collect(),
        successes,
        failures,
    })
}

/// Bootstrap selection at fixed `g` and penalty, warm-started from the
/// full-data fit at `lambda_star`.
pub fn bootstrap_selection(
    data: &DataMatrix,
    g: usize,
    lambda_star: &PenaltyConfig,
    replicates: usize,
    threshold: f64,
    config: &EmConfig,
) -> Result<SelectionReport> {
    check_threshold(threshold)?;
    let parent = crate::em::fit(data, g, lambda_star, config)?;
    let outcome = bootstrap_probabilities(data, g, lambda_star, replicates, config, Some(&parent.params))?;
    let stable_set = thresholded(&outcome.probabilities, threshold);
    let record = modified_bic(&parent, g, data.n_vars());
    Ok(SelectionReport {
        ranked_variables: rank_variables(&outcome.probabilities),
        threshold,
        chosen_lambda: *lambda_star,
        chosen_g: g,
        bic_table: vec![record.clone()],
        used_bootstrap: true,
        bootstrap_fallback: false,
        full_data_g: g,
        assignments: parent.assignments.clone(),
        models: vec![ModelSummary {
            g,
            lambda: *lambda_star,
            bic: record.bic,
            selection_probabilities: Some(outcome.probabilities.clone()),
            selected: stable_set.clone(),
            replicate_failures: outcome.failures.len(),
        }],
        stable_set,
        selection_probabilities: outcome.probabilities,
    })
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Validation(format!("threshold must lie in (0, 1], got {threshold}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectGConfig {
    pub g_candidates: Vec<usize>,
    /// One grid per candidate, or a single grid shared by all candidates.
    pub grids: Vec<Vec<PenaltyConfig>>,
    pub replicates: usize,
    pub threshold: f64,
    pub use_bootstrap: bool,
    pub bic: BicSettings,
}

impl SelectGConfig {
    pub fn new(g_candidates: Vec<usize>, grid: Vec<PenaltyConfig>) -> Self {
        Self {
            g_candidates,
            grids: vec![grid],
            replicates: DEFAULT_REPLICATES,
            threshold: DEFAULT_THRESHOLD,
            use_bootstrap: true,
            bic: BicSettings::default(),
        }
    }

    fn grid_for(&self, k: usize) -> &[PenaltyConfig] {
        if self.grids.len() == 1 {
            &self.grids[0]
        } else {
            &self.grids[k]
        }
    }

    fn validate(&self) -> Result<()> {
        if self.g_candidates.is_empty() {
            return Err(Error::Validation("no candidate numbers of components".into()));
        }
        if self.g_candidates.contains(&0) {
            return Err(Error::Validation("candidate g must be >= 1".into()));
        }
        if self.grids.len() != 1 && self.grids.len() != self.g_candidates.len() {
            return Err(Error::Validation(format!(
                "{} penalty grids for {} candidates",
                self.grids.len(),
                self.g_candidates.len()
            )));
        }
        check_threshold(self.threshold)
    }
}

/// Index of the smallest BIC; ties go to the smaller `g`.
fn argmin_bic(searches: &[(usize, LambdaSearch)]) -> usize {
    let mut best = 0;
    for (k, (g, s)) in searches.iter().enumerate() {
        let (bg, bs) = &searches[best];
        let (a, b) = (s.record.bic, bs.record.bic);
        if a < b || (a == b && g < bg) {
            best = k;
        }
    }
    best
}

fn searches(
    data: &DataMatrix,
    cfg: &SelectGConfig,
    config: &EmConfig,
) -> Result<Vec<(usize, LambdaSearch)>> {
    cfg.g_candidates
        .par_iter()
        .enumerate()
        .map(|(k, &g)| {
            let c = config.with_rng(config.rng.derive(g as u64));
            search_lambda(data, g, cfg.grid_for(k), &c, cfg.bic).map(|s| (g, s))
        })
        .collect()
}

/// Chooses the number of components by modified BIC, optionally after
/// restricting the data to the union of bootstrap-stable variables.
pub fn select_g(data: &DataMatrix, cfg: &SelectGConfig, config: &EmConfig) -> Result<SelectionReport> {
    cfg.validate()?;
    let full = searches(data, cfg, config)?;
    let full_best = argmin_bic(&full);
    let full_data_g = full[full_best].0;
    let all_tables = |s: &[(usize, LambdaSearch)]| -> Vec<BicRecord> {
        s.iter().flat_map(|(_, l)| l.table.iter().cloned()).collect()
    };

    if !cfg.use_bootstrap {
        return Ok(report_without_bootstrap(&full, full_best, cfg.threshold, all_tables(&full), false));
    }

    // step 1: bootstrap every candidate at its own λ*
    let outcomes: Vec<Result<BootstrapOutcome>> = full
        .par_iter()
        .map(|(g, s)| {
            let c = config.with_rng(config.rng.derive(*g as u64));
            bootstrap_probabilities(data, *g, &s.chosen, cfg.replicates, &c, Some(&s.fit.params))
        })
        .collect();
    let outcomes: Vec<BootstrapOutcome> = outcomes.into_iter().collect::<Result<_>>()?;
    let p = data.n_vars();
    let mut in_union = vec![false; p];
    let mut models = Vec::with_capacity(full.len());
    for ((g, s), outcome) in full.iter().zip(&outcomes) {
        let selected = thresholded(&outcome.probabilities, cfg.threshold);
        selected.iter().for_each(|&d| in_union[d] = true);
        models.push(ModelSummary {
            g: *g,
            lambda: s.chosen,
            bic: s.record.bic,
            selection_probabilities: Some(outcome.probabilities.clone()),
            selected,
            replicate_failures: outcome.failures.len(),
        });
    }
    let stable_set: Vec<usize> = (0..p).filter(|&d| in_union[d]).collect();
    if stable_set.is_empty() {
        let mut report = report_without_bootstrap(&full, full_best, cfg.threshold, all_tables(&full), true);
        report.models = models;
        return Ok(report);
    }

    // step 2: refit every candidate on the stable variables
    let restricted = data.select_columns(&stable_set)?;
    let refits = searches(&restricted, cfg, config)?;
    let best = argmin_bic(&refits);
    let (chosen_g, chosen) = &refits[best];
    let k_chosen = cfg.g_candidates.iter().position(|g| g == chosen_g).expect("candidate");
    let probabilities = outcomes[k_chosen].probabilities.clone();
    let mut bic_table = all_tables(&full);
    bic_table.extend(all_tables(&refits));
    Ok(SelectionReport {
        ranked_variables: rank_variables(&probabilities),
        selection_probabilities: probabilities,
        threshold: cfg.threshold,
        chosen_lambda: chosen.chosen,
        chosen_g: *chosen_g,
        bic_table,
        stable_set,
        used_bootstrap: true,
        bootstrap_fallback: false,
        full_data_g,
        assignments: chosen.fit.assignments.clone(),
        models,
    })
}

fn report_without_bootstrap(
    full: &[(usize, LambdaSearch)],
    best: usize,
    threshold: f64,
    bic_table: Vec<BicRecord>,
    fallback: bool,
) -> SelectionReport {
    let (g, s) = &full[best];
    let probabilities: Vec<f64> = s.fit.informative_mask.iter().map(|&m| f64::from(u8::from(m))).collect();
    SelectionReport {
        ranked_variables: rank_variables(&probabilities),
        stable_set: s.fit.selected_variables(),
        selection_probabilities: probabilities,
        threshold,
        chosen_lambda: s.chosen,
        chosen_g: *g,
        bic_table,
        used_bootstrap: false,
        bootstrap_fallback: fallback,
        full_data_g: *g,
        assignments: s.fit.assignments.clone(),
        models: full
            .iter()
            .map(|(g, s)| ModelSummary {
                g: *g,
                lambda: s.chosen,
                bic: s.record.bic,
                selection_probabilities: None,
                selected: s.fit.selected_variables(),
                replicate_failures: 0,
            })
            .collect(),
    }
}
