use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const GOLDEN: f64 = 0.381_966_011_250_105_1; // (3 - sqrt 5) / 2

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub argmax: f64,
    pub value: f64,
}

/// Brent's derivative-free search (golden section with parabolic steps) for a
/// maximizer of `objective` on `[lower, upper]`.
///
/// Both end points are evaluated as well, so a maximum sitting on the boundary
/// is returned exactly.
pub fn maximize_1d<F>(mut objective: F, lower: f64, upper: f64, tol: f64) -> Result<Maximum>
where
    F: FnMut(f64) -> f64,
{
    if !(lower.is_finite() && upper.is_finite() && lower < upper) {
        return Err(Error::Domain(format!("invalid bracket [{lower}, {upper}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut eval = |x: f64| -> Result<f64> {
        let v = objective(x);
        if v.is_finite() {
            Ok(-v)
        } else {
            Err(Error::Numerical(format!("objective is {v} at x = {x}")))
        }
    };

    let (mut a, mut b) = (lower, upper);
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = eval(x)?;
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (a + b);
        let tol1 = 1e-11 * x.abs() + tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - mid).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden_step = true;
        if e.abs() > tol1 {
            // trial parabola through x, w, v
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if mid >= x { tol1 } else { -tol1 };
                }
                golden_step = false;
            }
        }
        if golden_step {
            e = if x >= mid { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = eval(u)?;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }

    let mut best = Maximum { argmax: x, value: -fx };
    for end in [lower, upper] {
        let value = -eval(end)?;
        if value > best.value {
            best = Maximum { argmax: end, value };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn quadratic_vertex() {
        let m = maximize_1d(|x| -(x - 3.0).powi(2), 0.0, 10.0, 1e-8).unwrap();
        assert!((m.argmax - 3.0).abs() < 1e-6);
    }

    #[test]
    fn log_minus_linear() {
        let m = maximize_1d(|x: f64| x.ln() - x, 0.1, 20.0, 1e-8).unwrap();
        assert!((m.argmax - 1.0).abs() < 1e-6);
        assert!((m.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn plateau() {
        let m = maximize_1d(|_| 2.0, 0.0, 1.0, 1e-8).unwrap();
        assert_eq!(m.value, 2.0);
        assert!((0.0..=1.0).contains(&m.argmax));
    }

    #[test]
    fn boundary_maximum_is_exact() {
        let m = maximize_1d(|x| x, 0.5, 200.0, 1e-6).unwrap();
        assert_eq!(m.argmax, 200.0);
        let m = maximize_1d(|x| -x, 0.5, 200.0, 1e-6).unwrap();
        assert_eq!(m.argmax, 0.5);
    }

    #[test]
    fn non_finite_objective_reports_abscissa() {
        let err = maximize_1d(|x| if x > 0.5 { f64::NAN } else { x }, 0.0, 1.0, 1e-8).unwrap_err();
        match err {
            Error::Numerical(msg) => assert!(msg.contains("at x =")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_bracket() {
        assert!(maximize_1d(|x| x, 1.0, 1.0, 1e-8).is_err());
        assert!(maximize_1d(|x| x, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn random_concave_quadratics() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let vertex: f64 = rng.random_range(-50.0..50.0);
            let curvature: f64 = rng.random_range(0.01..100.0);
            let offset: f64 = rng.random_range(-10.0..10.0);
            let lo = vertex - rng.random_range(0.1..40.0);
            let hi = vertex + rng.random_range(0.1..40.0);
            let m = maximize_1d(|x| offset - curvature * (x - vertex).powi(2), lo, hi, 1e-9).unwrap();
            assert!((m.argmax - vertex).abs() < 1e-6, "vertex {vertex}, got {}", m.argmax);
        }
    }
}
