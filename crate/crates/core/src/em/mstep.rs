use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::model::{DataMatrix, DOF_MAX, DOF_MIN, SCALE_FLOOR};
use crate::numerics::maximize_1d;
use crate::numerics::special::log_gamma_unchecked;

/// Absolute tolerance of the degrees-of-freedom search.
pub const DOF_TOLERANCE: f64 = 1e-6;

/// Sufficient statistics of the variance update.
#[derive(Debug, Clone, PartialEq)]
pub struct MStepIntermediates {
    /// `b_i = Σ_j τ_ij / 2`
    pub b: Vec<f64>,
    /// `c_id = Σ_j τ_ij u_ij (y_jd - μ_id)² / 2`
    pub c: Array2<f64>,
}

impl MStepIntermediates {
    pub fn compute(data: &DataMatrix, tau: &Array2<f64>, u: &Array2<f64>, mu: &Array2<f64>) -> Self {
        let (n, g) = tau.dim();
        let p = data.n_vars();
        let b = tau.columns().into_iter().map(|col| col.sum() / 2.0).collect();
        let mut c = Array2::zeros((g, p));
        for i in 0..g {
            let mu_i = mu.row(i);
            let mu_i = mu_i.as_slice().expect("standard layout");
            let mut acc = vec![0.0; p];
            for j in 0..n {
                let w = tau[[j, i]] * u[[j, i]];
                if w == 0.0 {
                    continue;
                }
                for ((a, y), m) in acc.iter_mut().zip(data.row_slice(j)).zip(mu_i) {
                    let r = y - m;
                    *a += w * r * r;
                }
            }
            for (d, a) in acc.into_iter().enumerate() {
                c[[i, d]] = a / 2.0;
            }
        }
        Self { b, c }
    }
}

/// `sign(x) · max(|x| - threshold, 0)`
#[inline]
pub fn soft_threshold(x: f64, threshold: f64) -> f64 {
    let shrunk = x.abs() - threshold;
    if shrunk > 0.0 {
        shrunk.copysign(x)
    } else {
        0.0
    }
}

/// Maximizer over `s > 0` of `-b ln s - c / s - λ |ln s|`, clamped to the
/// scale floor. Returns exactly 1 when `|c - b| <= λ`.
#[inline]
pub fn penalized_scale(b: f64, c: f64, lambda_sigma: f64) -> f64 {
    let gap = c - b;
    if gap.abs() <= lambda_sigma {
        return 1.0;
    }
    let unpenalized = c / b;
    let s = unpenalized / (1.0 + lambda_sigma * gap.signum() / b);
    s.max(SCALE_FLOOR)
}

/// `π_i = Σ_j τ_ij / n`, renormalized to sum to one.
pub fn m_step_weights(tau: &Array2<f64>) -> Vec<f64> {
    let n = tau.nrows() as f64;
    let mut weights: Vec<f64> = tau.columns().into_iter().map(|col| col.sum() / n).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    weights
}

/// Soft-thresholded precision-weighted means, using the previous variances.
pub fn m_step_locations(
    data: &DataMatrix,
    tau: &Array2<f64>,
    u: &Array2<f64>,
    sigma2_prev: &Array2<f64>,
    lambda_mu: f64,
) -> Result<Array2<f64>> {
    let (n, g) = tau.dim();
    let p = data.n_vars();
    let mut mu = Array2::zeros((g, p));
    for i in 0..g {
        let mut weight_sum = 0.0;
        let mut acc = vec![0.0; p];
        for j in 0..n {
            let w = tau[[j, i]] * u[[j, i]];
            if w == 0.0 {
                continue;
            }
            weight_sum += w;
            for (a, y) in acc.iter_mut().zip(data.row_slice(j)) {
                *a += w * y;
            }
        }
        if !(weight_sum > 0.0) {
            return Err(Error::DegenerateComponent {
                component: i,
                reason: format!("precision-weighted mass {weight_sum}"),
            });
        }
        for (d, a) in acc.into_iter().enumerate() {
            let unpenalized = a / weight_sum;
            mu[[i, d]] = if lambda_mu == 0.0 {
                unpenalized
            } else {
                soft_threshold(unpenalized, lambda_mu * sigma2_prev[[i, d]] / weight_sum)
            };
        }
    }
    Ok(mu)
}

/// Variance update given the freshly updated locations.
pub fn m_step_scales(
    data: &DataMatrix,
    tau: &Array2<f64>,
    u: &Array2<f64>,
    mu_new: &Array2<f64>,
    lambda_sigma: f64,
) -> Result<Array2<f64>> {
    let stats = MStepIntermediates::compute(data, tau, u, mu_new);
    scales_from_intermediates(&stats, lambda_sigma)
}

pub fn scales_from_intermediates(stats: &MStepIntermediates, lambda_sigma: f64) -> Result<Array2<f64>> {
    let mut out = stats.c.clone();
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let b = stats.b[i];
        if !(b > 0.0) {
            return Err(Error::DegenerateComponent {
                component: i,
                reason: format!("b = {b}"),
            });
        }
        row.mapv_inplace(|c| penalized_scale(b, c, lambda_sigma));
    }
    Ok(out)
}

/// The ν-dependent part of the expected complete-data log-likelihood of one
/// component, `Σ_j τ_j [-ln Γ(ν/2) + (ν/2) ln(ν/2) + (ν/2)(E log u_j - E u_j)]`.
/// With `include_constants` the `-Σ_j τ_j E log u_j` term is added as well.
pub fn dof_objective(
    tau: ArrayView1<'_, f64>,
    u: ArrayView1<'_, f64>,
    log_u: ArrayView1<'_, f64>,
    nu: f64,
    include_constants: bool,
) -> f64 {
    let (mass, slope, constant) = dof_sums(tau, u, log_u);
    let q = dof_objective_from_sums(mass, slope, nu);
    if include_constants {
        q + constant
    } else {
        q
    }
}

fn dof_sums(tau: ArrayView1<'_, f64>, u: ArrayView1<'_, f64>, log_u: ArrayView1<'_, f64>) -> (f64, f64, f64) {
    let mut mass = 0.0;
    let mut slope = 0.0;
    let mut constant = 0.0;
    for ((&t, &u), &lu) in tau.iter().zip(u).zip(log_u) {
        mass += t;
        slope += t * (lu - u);
        constant -= t * lu;
    }
    (mass, slope, constant)
}

#[inline]
fn dof_objective_from_sums(mass: f64, slope: f64, nu: f64) -> f64 {
    let half = 0.5 * nu;
    mass * (half * half.ln() - log_gamma_unchecked(half)) + half * slope
}

/// Degrees-of-freedom update, one bounded 1-D search per component.
/// In Gaussian mode every component is pinned at [`DOF_MAX`].
pub fn m_step_dof(
    tau: &Array2<f64>,
    u: &Array2<f64>,
    log_u: &Array2<f64>,
    nu_prev: &[f64],
    gaussian_mode: bool,
) -> Result<Vec<f64>> {
    let g = tau.ncols();
    if gaussian_mode {
        return Ok(vec![DOF_MAX; g]);
    }
    (0..g)
        .map(|i| {
            let prev = nu_prev[i].clamp(DOF_MIN, DOF_MAX);
            let (mass, slope, _) = dof_sums(tau.column(i), u.column(i), log_u.column(i));
            if !(mass > 0.0) {
                return Ok(prev);
            }
            let best = maximize_1d(|nu| dof_objective_from_sums(mass, slope, nu), DOF_MIN, DOF_MAX, DOF_TOLERANCE)?;
            // never step downhill on a nearly flat objective
            if best.value >= dof_objective_from_sums(mass, slope, prev) {
                Ok(best.argmax)
            } else {
                Ok(prev)
            }
        })
        .collect()
}
