//! Penalized EM for diagonal-scale Student-t mixtures.
//!
//! One iteration evaluates the E-step at the current parameters, then updates
//! weights, degrees of freedom, locations (soft-thresholded, with the previous
//! variances) and finally variances (thresholded toward one, with the new
//! locations). Each update maximizes its block of the expected penalized
//! complete-data log-likelihood, so the penalized observed log-likelihood is
//! non-decreasing along the trace.

mod estep;
mod init;
mod mstep;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{hard_assignments, ComponentFamily, DataMatrix, FitResult, MixtureParams, PenaltyConfig, DOF_MAX};
use crate::numerics::RngHandle;

pub use estep::{e_step, log_likelihood, penalized_log_likelihood};
pub use init::{initial_params, kmeans_partition, params_from_partition, random_partition, row_scaled, InitMethod, INITIAL_DOF};
pub use mstep::{
    dof_objective, m_step_dof, m_step_locations, m_step_scales, m_step_weights, penalized_scale,
    scales_from_intermediates, soft_threshold, MStepIntermediates, DOF_TOLERANCE,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub max_iterations: usize,
    /// Stop once `|Δℓ| / (1 + |ℓ|)` falls below this.
    pub rel_tol: f64,
    pub n_restarts: usize,
    pub init_method: InitMethod,
    /// Fit the Gaussian limit: no ν update and unit precision factors.
    pub gaussian_mode: bool,
    pub rng: RngHandle,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            rel_tol: 1e-6,
            n_restarts: 5,
            init_method: InitMethod::KmeansPp,
            gaussian_mode: false,
            rng: RngHandle::new(0),
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::Validation("max_iterations must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::Validation(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.n_restarts < 1 {
            return Err(Error::Validation("n_restarts must be >= 1".into()));
        }
        Ok(())
    }

    pub fn family(&self) -> ComponentFamily {
        if self.gaussian_mode {
            ComponentFamily::Gaussian
        } else {
            ComponentFamily::StudentT
        }
    }

    pub fn with_rng(mut self, rng: RngHandle) -> Self {
        self.rng = rng;
        self
    }
}

fn degenerate_threshold(n: usize) -> f64 {
    10.0 * f64::EPSILON * n as f64
}

/// Fits a `g`-component mixture from `config.n_restarts` initializations and
/// keeps the restart with the highest final penalized log-likelihood.
pub fn fit(data: &DataMatrix, g: usize, penalty: &PenaltyConfig, config: &EmConfig) -> Result<FitResult> {
    let starts = initial_starts(data, g, config)?;
    fit_from_starts(data, penalty, config, &starts)
}

/// Initializations for every restart; restart `r` draws from `config.rng.derive(r)`.
pub fn initial_starts(data: &DataMatrix, g: usize, config: &EmConfig) -> Result<Vec<Result<MixtureParams>>> {
    config.validate()?;
    if g < 1 || g > data.n_samples() {
        return Err(Error::Validation(format!(
            "number of components must be in [1, {}], got {g}",
            data.n_samples()
        )));
    }
    Ok((0..config.n_restarts)
        .into_par_iter()
        .map(|r| initial_params(data, g, config.init_method, config.family(), &config.rng.derive(r as u64)))
        .collect())
}

/// Runs EM from each start and returns the best run. Failed starts (or
/// failed initializations) are reported only if every run fails.
pub fn fit_from_starts(
    data: &DataMatrix,
    penalty: &PenaltyConfig,
    config: &EmConfig,
    starts: &[Result<MixtureParams>],
) -> Result<FitResult> {
    config.validate()?;
    let runs: Vec<Result<FitResult>> = starts
        .par_iter()
        .map(|start| match start {
            Ok(params) => run_em(data, params, penalty, config),
            Err(e) => Err(Error::Numerical(format!("initialization: {e}"))),
        })
        .collect();
    let mut best: Option<FitResult> = None;
    let mut diagnostics = Vec::new();
    for (r, run) in runs.into_iter().enumerate() {
        match run {
            Ok(fit) => {
                if best.as_ref().is_none_or(|b| fit.penalized_loglik > b.penalized_loglik) {
                    best = Some(fit);
                }
            }
            Err(e) => diagnostics.push(format!("restart {r}: {e}")),
        }
    }
    best.ok_or(Error::FitFailure { diagnostics })
}

/// A single EM run from `start`; components are returned in descending
/// weight order. The start is put in canonical component order first, so a
/// relabelled start gives the same run bit for bit.
pub fn run_em(data: &DataMatrix, start: &MixtureParams, penalty: &PenaltyConfig, config: &EmConfig) -> Result<FitResult> {
    config.validate()?;
    let mut params = start.permuted(&start.canonical_order());
    params.family = config.family();
    if config.gaussian_mode {
        params.dof.iter_mut().for_each(|v| *v = DOF_MAX);
    }
    params.validate()?;
    if params.p() != data.n_vars() {
        return Err(Error::Validation(format!(
            "start has {} variables, data has {}",
            params.p(),
            data.n_vars()
        )));
    }
    let n = data.n_samples();
    let floor = degenerate_threshold(n);

    let mut estep = estep::expectations(data, &params)?;
    let mut current = estep.loglik - params.penalty(penalty);
    let mut trace = vec![current];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        check_mass(&estep.latent.tau, floor)?;
        let latent = &estep.latent;
        let weights = m_step_weights(&latent.tau);
        let dof = m_step_dof(&latent.tau, &latent.u, &latent.log_u, &params.dof, config.gaussian_mode)?;
        let locations = m_step_locations(data, &latent.tau, &latent.u, &params.scales, penalty.lambda_mu)?;
        let scales = m_step_scales(data, &latent.tau, &latent.u, &locations, penalty.lambda_sigma)?;
        params = MixtureParams {
            weights,
            locations,
            scales,
            dof,
            family: params.family,
        };
        iterations += 1;

        estep = estep::expectations(data, &params)?;
        let next = estep.loglik - params.penalty(penalty);
        if !next.is_finite() {
            return Err(Error::Numerical(format!("penalized log-likelihood became {next}")));
        }
        trace.push(next);
        let change = (next - current).abs() / (1.0 + next.abs());
        current = next;
        if change < config.rel_tol {
            converged = true;
            break;
        }
    }

    let order = params.weight_order();
    let params = params.permuted(&order);
    let tau = estep.latent.tau.select(ndarray::Axis(1), &order);
    Ok(FitResult {
        informative_mask: params.informative_mask(),
        assignments: hard_assignments(&tau),
        params,
        penalty: *penalty,
        tau,
        penalized_loglik: current,
        loglik_trace: trace,
        n_iterations: iterations,
        converged,
        n_samples: n,
    })
}

fn check_mass(tau: &Array2<f64>, floor: f64) -> Result<()> {
    for (i, col) in tau.columns().into_iter().enumerate() {
        let mass = col.sum();
        if mass < floor {
            return Err(Error::DegenerateComponent {
                component: i,
                reason: format!("responsibility mass {mass:e}"),
            });
        }
    }
    Ok(())
}
