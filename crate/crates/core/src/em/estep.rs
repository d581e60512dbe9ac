use ndarray::Array2;

use crate::density::ComponentKernel;
use crate::error::{Error, Result};
use crate::model::{ComponentFamily, DataMatrix, LatentExpectations, MixtureParams, PenaltyConfig};
use crate::numerics::digamma;
use crate::numerics::reduce::log_sum_exp_unchecked;

/// E-step expectations together with the observed-data log-likelihood at the
/// same parameters; both come out of one pass over the samples.
pub(crate) struct EStep {
    pub latent: LatentExpectations,
    pub loglik: f64,
}

fn kernels(params: &MixtureParams) -> Vec<(Vec<f64>, ComponentKernel)> {
    (0..params.g())
        .map(|i| {
            let mu = params.locations.row(i).to_vec();
            let sigma2 = params.scales.row(i).to_vec();
            (mu, ComponentKernel::new(&sigma2, params.dof[i], params.family))
        })
        .collect()
}

fn check_dims(data: &DataMatrix, params: &MixtureParams) -> Result<()> {
    if data.n_vars() != params.p() {
        return Err(Error::Validation(format!(
            "data has {} variables but parameters have {}",
            data.n_vars(),
            params.p()
        )));
    }
    Ok(())
}

pub(crate) fn expectations(data: &DataMatrix, params: &MixtureParams) -> Result<EStep> {
    check_dims(data, params)?;
    let (n, g) = (data.n_samples(), params.g());
    let p = data.n_vars() as f64;
    let kernels = kernels(params);
    let log_weights: Vec<f64> = params.weights.iter().map(|w| w.ln()).collect();
    // E[log u] correction term per component
    let log_u_shift: Vec<f64> = params
        .dof
        .iter()
        .map(|&nu| {
            let a = 0.5 * (nu + p);
            digamma(a).map(|psi| psi - a.ln())
        })
        .collect::<Result<_>>()?;

    let mut tau = Array2::zeros((n, g));
    let mut u = Array2::zeros((n, g));
    let mut log_u = Array2::zeros((n, g));
    let mut logs = vec![0.0; g];
    let mut deltas = vec![0.0; g];
    let mut loglik = 0.0;
    for j in 0..n {
        let y = data.row_slice(j);
        for (i, (mu, kernel)) in kernels.iter().enumerate() {
            let delta = kernel.delta(y, mu);
            deltas[i] = delta;
            logs[i] = log_weights[i] + kernel.log_pdf_from_delta(delta);
        }
        let total = log_sum_exp_unchecked(&logs);
        if !total.is_finite() {
            return Err(Error::Numerical(format!(
                "sample {j} has log-density {total} under every component"
            )));
        }
        loglik += total;
        for i in 0..g {
            tau[[j, i]] = (logs[i] - total).exp();
            match params.family {
                ComponentFamily::StudentT => {
                    let nu = params.dof[i];
                    let uij = (nu + p) / (nu + deltas[i]);
                    u[[j, i]] = uij;
                    log_u[[j, i]] = uij.ln() + log_u_shift[i];
                }
                ComponentFamily::Gaussian => {
                    u[[j, i]] = 1.0;
                    log_u[[j, i]] = 0.0;
                }
            }
        }
    }
    Ok(EStep {
        latent: LatentExpectations { tau, u, log_u },
        loglik,
    })
}

/// Responsibilities, precision factors and log-precision expectations.
pub fn e_step(data: &DataMatrix, params: &MixtureParams) -> Result<LatentExpectations> {
    expectations(data, params).map(|e| e.latent)
}

/// Observed-data mixture log-likelihood.
pub fn log_likelihood(data: &DataMatrix, params: &MixtureParams) -> Result<f64> {
    expectations(data, params).map(|e| e.loglik)
}

/// Mixture log-likelihood minus the L1 penalty on locations and log-variances.
pub fn penalized_log_likelihood(data: &DataMatrix, params: &MixtureParams, penalty: &PenaltyConfig) -> Result<f64> {
    Ok(log_likelihood(data, params)? - params.penalty(penalty))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngHandle;
    use ndarray::array;
    use rand::Rng;

    fn one_component(mu: f64, nu: f64) -> MixtureParams {
        MixtureParams {
            weights: vec![1.0],
            locations: array![[mu]],
            scales: array![[1.0]],
            dof: vec![nu],
            family: ComponentFamily::StudentT,
        }
    }

    fn data(rows: Array2<f64>) -> DataMatrix {
        let p = rows.ncols();
        DataMatrix::new(rows, (0..p).map(|d| format!("v{d}")).collect()).unwrap()
    }

    #[test]
    fn penalized_single_cauchy_observation() {
        // ln(1 / (π (1 + 0.25))) - 2 * 0.5
        let d = data(array![[0.0], [0.0]]);
        let params = one_component(0.5, 1.0);
        let pen = PenaltyConfig::new(2.0, 0.0).unwrap();
        let per_obs = (1.0 / (std::f64::consts::PI * 1.25)).ln();
        let expected = 2.0 * per_obs - 1.0;
        let got = penalized_log_likelihood(&d, &params, &pen).unwrap();
        assert!((got - expected).abs() < 1e-12);
        // a single observation would give ln(1/(1.25π)) - 1 = -2.36788
        assert!((per_obs - 1.0 + 2.367_88).abs() < 1e-5);
    }

    #[test]
    fn zero_penalty_equals_loglik() {
        let d = data(array![[0.3, -1.0], [2.0, 0.1], [-0.4, 0.7]]);
        let params = MixtureParams {
            weights: vec![0.4, 0.6],
            locations: array![[0.5, 0.0], [-0.5, 0.2]],
            scales: array![[1.0, 2.0], [0.5, 1.0]],
            dof: vec![3.0, 7.0],
            family: ComponentFamily::StudentT,
        };
        let ll = log_likelihood(&d, &params).unwrap();
        let pl = penalized_log_likelihood(&d, &params, &PenaltyConfig::zero()).unwrap();
        assert_eq!(ll, pl);
        // direct evaluation with the public density
        let mut direct = 0.0;
        for j in 0..3 {
            let y = d.row(j).to_vec();
            let terms: Vec<f64> = (0..2)
                .map(|i| {
                    params.weights[i].ln()
                        + crate::density::t_log_pdf(
                            &y,
                            &params.locations.row(i).to_vec(),
                            &params.scales.row(i).to_vec(),
                            params.dof[i],
                        )
                        .unwrap()
                })
                .collect();
            direct += crate::numerics::log_sum_exp(&terms).unwrap();
        }
        assert!((ll - direct).abs() < 1e-12);
    }

    #[test]
    fn single_component_responsibilities() {
        let d = data(array![[0.3], [5.0], [-2.0]]);
        let e = e_step(&d, &one_component(0.0, 4.0)).unwrap();
        assert!(e.tau.iter().all(|&t| t == 1.0));
    }

    #[test]
    fn precision_factor_examples() {
        // p = 2, ν = 4: δ = 2 gives u = 1, δ = 8 gives u = 0.5
        let params = MixtureParams {
            weights: vec![1.0],
            locations: array![[0.0, 0.0]],
            scales: array![[1.0, 1.0]],
            dof: vec![4.0],
            family: ComponentFamily::StudentT,
        };
        let d = data(array![[1.0, 1.0], [2.0, 2.0]]);
        let e = e_step(&d, &params).unwrap();
        assert!((e.u[[0, 0]] - 1.0).abs() < 1e-15);
        assert!((e.u[[1, 0]] - 0.5).abs() < 1e-15);
        let euler = 0.577_215_664_901_532_9;
        let expected = 0.5f64.ln() + (1.5 - euler) - 3f64.ln();
        assert!((e.log_u[[1, 0]] - expected).abs() < 1e-12);
        assert!((e.log_u[[1, 0]] + 0.8690).abs() < 1e-3);
    }

    #[test]
    fn rows_sum_to_one_even_far_out() {
        let mut rng = RngHandle::new(4).generator();
        let rows = Array2::from_shape_fn((40, 30), |_| rng.random_range(-60.0..60.0));
        let params = MixtureParams {
            weights: vec![0.2, 0.3, 0.5],
            locations: Array2::from_shape_fn((3, 30), |(i, _)| i as f64 * 3.0 - 3.0),
            scales: Array2::from_elem((3, 30), 0.01),
            dof: vec![0.5, 10.0, 200.0],
            family: ComponentFamily::StudentT,
        };
        let e = e_step(&data(rows), &params).unwrap();
        for row in e.tau.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-10);
            assert!(row.iter().all(|&t| t >= 0.0));
        }
        assert!(e.u.iter().all(|&u| u > 0.0));
    }

    #[test]
    fn zero_weight_component_is_allowed() {
        let params = MixtureParams {
            weights: vec![1.0, 0.0],
            locations: array![[0.0], [1.0]],
            scales: array![[1.0], [1.0]],
            dof: vec![5.0, 5.0],
            family: ComponentFamily::StudentT,
        };
        let e = e_step(&data(array![[0.0], [1.0]]), &params).unwrap();
        assert!(e.tau.column(1).iter().all(|&t| t == 0.0));
    }
}
