//! Diagonal-scale multivariate Student-t density and sampler.
//!
//! Everything stays in log space; with thousands of variables the linear
//! densities underflow long before the log densities lose precision.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{ComponentFamily, DOF_MAX, DOF_MIN};
use crate::numerics::{log_gamma, RngHandle};

const LN_PI: f64 = 1.144_729_885_849_400_2;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn check_shapes(y: &[f64], mu: &[f64], sigma2: &[f64]) -> Result<()> {
    if y.len() != mu.len() || y.len() != sigma2.len() {
        return Err(Error::Domain(format!(
            "length mismatch: y={}, mu={}, sigma2={}",
            y.len(),
            mu.len(),
            sigma2.len()
        )));
    }
    if let Some((d, s)) = sigma2.iter().enumerate().find(|(_, s)| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::Domain(format!("sigma2[{d}] = {s} is not a positive finite variance")));
    }
    Ok(())
}

/// Squared Mahalanobis distance `Σ_d (y_d - μ_d)² / σ²_d`.
pub fn mahalanobis_sq(y: &[f64], mu: &[f64], sigma2: &[f64]) -> Result<f64> {
    check_shapes(y, mu, sigma2)?;
    Ok(y.iter()
        .zip(mu)
        .zip(sigma2)
        .map(|((y, m), s)| (y - m) * (y - m) / s)
        .sum())
}

/// Log density of the multivariate t with diagonal scale matrix.
pub fn t_log_pdf(y: &[f64], mu: &[f64], sigma2: &[f64], nu: f64) -> Result<f64> {
    if !(DOF_MIN..=DOF_MAX).contains(&nu) {
        return Err(Error::Domain(format!("degrees of freedom {nu} outside [{DOF_MIN}, {DOF_MAX}]")));
    }
    let delta = mahalanobis_sq(y, mu, sigma2)?;
    let kernel = ComponentKernel::new(sigma2, nu, ComponentFamily::StudentT);
    Ok(kernel.log_pdf_from_delta(delta))
}

/// Log density of the diagonal Gaussian, the `ν → ∞` limit of [`t_log_pdf`].
pub fn gaussian_log_pdf(y: &[f64], mu: &[f64], sigma2: &[f64]) -> Result<f64> {
    let delta = mahalanobis_sq(y, mu, sigma2)?;
    let kernel = ComponentKernel::new(sigma2, DOF_MAX, ComponentFamily::Gaussian);
    Ok(kernel.log_pdf_from_delta(delta))
}

/// Per-component constants reused for every sample in an E-step.
#[derive(Debug, Clone)]
pub(crate) struct ComponentKernel {
    pub inv_sigma2: Vec<f64>,
    pub nu: f64,
    pub p: f64,
    pub family: ComponentFamily,
    log_norm: f64,
}

impl ComponentKernel {
    pub fn new(sigma2: &[f64], nu: f64, family: ComponentFamily) -> Self {
        let p = sigma2.len() as f64;
        let half_log_det: f64 = 0.5 * sigma2.iter().map(|s| s.ln()).sum::<f64>();
        let log_norm = match family {
            ComponentFamily::StudentT => {
                log_gamma((nu + p) / 2.0).expect("positive argument")
                    - log_gamma(nu / 2.0).expect("positive argument")
                    - 0.5 * p * (LN_PI + nu.ln())
                    - half_log_det
            }
            ComponentFamily::Gaussian => -0.5 * p * LN_2PI - half_log_det,
        };
        Self {
            inv_sigma2: sigma2.iter().map(|s| 1.0 / s).collect(),
            nu,
            p,
            family,
            log_norm,
        }
    }

    #[inline]
    pub fn delta(&self, y: &[f64], mu: &[f64]) -> f64 {
        y.iter()
            .zip(mu)
            .zip(&self.inv_sigma2)
            .map(|((y, m), w)| {
                let r = y - m;
                r * r * w
            })
            .sum()
    }

    #[inline]
    pub fn log_pdf_from_delta(&self, delta: f64) -> f64 {
        match self.family {
            ComponentFamily::StudentT => self.log_norm - 0.5 * (self.nu + self.p) * (delta / self.nu).ln_1p(),
            ComponentFamily::Gaussian => self.log_norm - 0.5 * delta,
        }
    }
}

/// Gamma(shape, rate) draw by Marsaglia–Tsang squeeze acceptance; shapes
/// below one are boosted through `G(a) = G(a + 1) · U^{1/a}`.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0 && rate > 0.0);
    let (a, boost) = if shape < 1.0 {
        let u: f64 = rng.random::<f64>();
        (shape + 1.0, u.powf(1.0 / shape))
    } else {
        (shape, 1.0)
    };
    let d = a - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z: f64 = StandardNormal.sample(rng);
        let v = 1.0 + c * z;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.random::<f64>();
        let z2 = z * z;
        if u < 1.0 - 0.0331 * z2 * z2 || u.ln() < 0.5 * z2 + d * (1.0 - v + v.ln()) {
            return d * v * boost / rate;
        }
    }
}

/// One draw from the t distribution via `u ~ Gamma(ν/2, ν/2)`,
/// `y | u ~ N(μ, diag(σ²)/u)`, using the caller's generator.
pub fn sample_t_with<R: Rng + ?Sized>(mu: &[f64], sigma2: &[f64], nu: f64, rng: &mut R) -> Vec<f64> {
    let u = sample_gamma(nu / 2.0, nu / 2.0, rng);
    let scale = 1.0 / u.sqrt();
    mu.iter()
        .zip(sigma2)
        .map(|(m, s)| {
            let z: f64 = StandardNormal.sample(rng);
            m + z * s.sqrt() * scale
        })
        .collect()
}

/// A single t draw determined entirely by `rng`.
pub fn sample_t(mu: &[f64], sigma2: &[f64], nu: f64, rng: &RngHandle) -> Result<Vec<f64>> {
    check_shapes(mu, mu, sigma2)?;
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Domain(format!("degrees of freedom must be positive, got {nu}")));
    }
    Ok(sample_t_with(mu, sigma2, nu, &mut rng.generator()))
}
