//! Central-difference gradient verification.
//!
//! Every analytic gradient in the crate is checked against this oracle;
//! keeping it dead simple is the point.

use crate::error::{Error, Result};

/// Gradient of `f` at `x` by central differences with step `h`.
///
/// Fails with [`Error::NonFiniteEvaluation`] if any probe returns a
/// non-finite value. `h` must be positive.
pub fn finite_diff_grad<F>(mut f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    assert!(h > 0.0, "finite_diff_grad needs h > 0");
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = f(&probe);
        probe[i] = x[i] - h;
        let fm = f(&probe);
        probe[i] = x[i];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFiniteEvaluation);
        }
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

/// Worst relative disagreement between two gradients.
///
/// Per coordinate: `|a - b| / max(|a|, |b|)` when the larger magnitude
/// exceeds `floor`, else the absolute difference (near-zero entries are
/// compared absolutely so 0-vs-0 does not divide by zero).
pub fn max_rel_err(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let mut worst = 0.0f64;
    for (&a, &n) in analytic.iter().zip(numeric) {
        let scale = a.abs().max(n.abs());
        let err = if scale > floor {
            (a - n).abs() / scale
        } else {
            (a - n).abs()
        };
        worst = worst.max(err);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let grad = finite_diff_grad(|v| v[0] * v[0], &[3.0], 1e-5).unwrap();
        assert!((grad[0] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn bilinear_is_exact() {
        let grad = finite_diff_grad(|v| v[0] * v[1], &[2.0, 5.0], 1e-5).unwrap();
        assert!((grad[0] - 5.0).abs() < 1e-9);
        assert!((grad[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn degree_two_polynomial_within_step_error() {
        // Central differences are exact on polynomials of degree <= 2 up to
        // rounding; allow a 10 h^2 error scale.
        let h = 1e-4;
        let f = |v: &[f64]| 1.5 * v[0] * v[0] - 2.0 * v[0] * v[1] + 0.5 * v[1] * v[1] + 3.0;
        let grad = finite_diff_grad(f, &[1.25, -0.75], h).unwrap();
        let expect = [1.5 * 2.0 * 1.25 - 2.0 * -0.75, -2.0 * 1.25 + -0.75];
        for (g, e) in grad.iter().zip(expect) {
            assert!((g - e).abs() < 10.0 * h * h + 1e-9);
        }
    }

    #[test]
    fn nan_probe_is_an_error() {
        let res = finite_diff_grad(|v| if v[0] > 1.0 { f64::NAN } else { v[0] }, &[1.0], 1e-5);
        assert!(matches!(res, Err(Error::NonFiniteEvaluation)));
    }

    #[test]
    fn rel_err_handles_zeros() {
        assert_eq!(max_rel_err(&[0.0], &[0.0], 1e-6), 0.0);
        assert!(max_rel_err(&[1.0], &[1.0 + 1e-7], 1e-6) < 1.1e-7);
    }
}
