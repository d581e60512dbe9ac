use crate::error::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Shift threshold above which the asymptotic series are used directly.
const LGAMMA_ASYMPTOTIC_MIN: f64 = 10.0;
const DIGAMMA_ASYMPTOTIC_MIN: f64 = 6.0;

fn check_positive(x: f64, name: &str) -> Result<()> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("{name} requires a finite positive argument, got {x}")));
    }
    Ok(())
}

/// Natural logarithm of the gamma function for `x > 0`.
///
/// Stirling's series for `x >= 10`; smaller arguments are lifted with
/// `ln Γ(x) = ln Γ(x + k) - ln(x (x+1) ... (x+k-1))`.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_positive(x, "log_gamma")?;
    Ok(log_gamma_unchecked(x))
}

pub(crate) fn log_gamma_unchecked(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    let mut z = x;
    let mut prod = 1.0;
    let mut shift_log = 0.0;
    while z < LGAMMA_ASYMPTOTIC_MIN {
        prod *= z;
        // keep the running product in range for tiny x
        if prod > 1e280 {
            shift_log += prod.ln();
            prod = 1.0;
        }
        z += 1.0;
    }
    shift_log += prod.ln();
    stirling(z) - shift_log
}

fn stirling(z: f64) -> f64 {
    let r = 1.0 / z;
    let r2 = r * r;
    // Bernoulli-number coefficients B_{2k} / (2k (2k - 1))
    let series = r
        * (1.0 / 12.0
            - r2 * (1.0 / 360.0
                - r2 * (1.0 / 1260.0
                    - r2 * (1.0 / 1680.0
                        - r2 * (1.0 / 1188.0 - r2 * (691.0 / 360_360.0 - r2 / 156.0))))));
    (z - 0.5) * z.ln() - z + HALF_LN_2PI + series
}

/// Digamma function ψ(x) = d/dx ln Γ(x) for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive(x, "digamma")?;
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(x: f64) -> f64 {
    let mut z = x;
    let mut acc = 0.0;
    while z < DIGAMMA_ASYMPTOTIC_MIN {
        acc -= 1.0 / z;
        z += 1.0;
    }
    let r = 1.0 / z;
    let r2 = r * r;
    let series = r2
        * (1.0 / 12.0
            - r2 * (1.0 / 120.0
                - r2 * (1.0 / 252.0
                    - r2 * (1.0 / 240.0
                        - r2 * (1.0 / 132.0 - r2 * (691.0 / 32_760.0 - r2 / 12.0))))));
    acc + z.ln() - 0.5 * r - series
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn log_gamma_known_values() {
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        let half = 0.5 * std::f64::consts::PI.ln();
        assert!((log_gamma(0.5).unwrap() - half).abs() < 1e-13);
        assert!((log_gamma(10.0).unwrap() - 362_880f64.ln()).abs() < 1e-12);
        assert!((log_gamma(3.0).unwrap() - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn log_gamma_small_and_large_arguments() {
        // Γ(x) ≈ 1/x - γ for tiny x
        let x = 1e-3;
        let expected = (1.0 / x - EULER_GAMMA + 0.989_055_995_327_972_6 * x).ln();
        assert!((log_gamma(x).unwrap() - expected).abs() < 1e-9);
        // ln(n!) via direct summation for moderately large n
        let n = 170usize;
        let lf: f64 = (1..n).map(|k| (k as f64).ln()).sum();
        let got = log_gamma(n as f64).unwrap();
        assert!(((got - lf) / lf).abs() < 1e-14);
    }

    #[test]
    fn digamma_known_values() {
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-12);
        let half = -EULER_GAMMA - 2.0 * 2f64.ln();
        assert!((digamma(0.5).unwrap() - half).abs() < 1e-12);
        assert!((digamma(2.0).unwrap() - (1.0 - EULER_GAMMA)).abs() < 1e-12);
        assert!((digamma(3.0).unwrap() - (1.5 - EULER_GAMMA)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(log_gamma(bad), Err(Error::Domain(_))));
            assert!(matches!(digamma(bad), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn log_gamma_recurrence() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x: f64 = rng.random_range(0.1..100.0);
            let lhs = log_gamma(x + 1.0).unwrap();
            let rhs = log_gamma(x).unwrap() + x.ln();
            assert!((lhs - rhs).abs() < 1e-10, "x={x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn digamma_matches_log_gamma_difference() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let h = 1e-5;
        for _ in 0..1000 {
            let x: f64 = rng.random_range(0.5..100.0);
            let fd = (log_gamma(x + h).unwrap() - log_gamma(x - h).unwrap()) / (2.0 * h);
            assert!((digamma(x).unwrap() - fd).abs() < 1e-5, "x={x}");
        }
    }

    #[test]
    fn digamma_recurrence_across_series_switch() {
        for &x in &[1e-3, 0.3, 4.9, 5.0, 5.5, 5.999, 6.0, 1e3, 1e6] {
            let lhs = digamma(x + 1.0).unwrap();
            let rhs = digamma(x).unwrap() + 1.0 / x;
            assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()), "x={x}");
        }
    }
}
