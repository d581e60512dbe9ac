use crate::error::{Error, Result};

/// `ln Σ exp(v_i)` with a max shift. An all `-∞` input yields `-∞`.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("log_sum_exp of an empty sequence".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("log_sum_exp input contains NaN".into()));
    }
    Ok(log_sum_exp_unchecked(values))
}

#[inline]
pub(crate) fn log_sum_exp_unchecked(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert!((log_sum_exp(&[0.0, 0.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        let v = log_sum_exp(&[-1000.0, -1000.0]).unwrap();
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[5.0]).unwrap(), 5.0);
        assert_eq!(log_sum_exp(&[0.0, -800.0]).unwrap(), 0.0);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]).unwrap(), f64::NEG_INFINITY);
        assert!(log_sum_exp(&[]).is_err());
    }

    proptest! {
        #[test]
        fn permutation_and_shift(mut v in prop::collection::vec(-50.0f64..50.0, 1..20), c in -100.0f64..100.0) {
            let base = log_sum_exp(&v).unwrap();
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            prop_assert!((log_sum_exp(&shifted).unwrap() - (base + c)).abs() < 1e-12);
            v.reverse();
            prop_assert!((log_sum_exp(&v).unwrap() - base).abs() < 1e-12);
        }
    }
}
