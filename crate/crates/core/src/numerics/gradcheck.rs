//! Central-difference gradient checking.

use crate::error::{Error, Result};

/// Largest relative discrepancy between `analytic` and central differences
/// of `f` around `x`, with relative error `|fd - an| / max(1, |fd|, |an|)`.
pub fn grad_check<F>(mut f: F, x: &[f64], analytic: &[f64], h: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    if x.len() != analytic.len() {
        return Err(Error::Contract(format!(
            "grad_check: {} coordinates, {} analytic entries",
            x.len(),
            analytic.len()
        )));
    }
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let plus = f(&probe);
        probe[i] = orig - h;
        let minus = f(&probe);
        probe[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Probe(i));
        }
        let fd = (plus - minus) / (2.0 * h);
        let an = analytic[i];
        let rel = (fd - an).abs() / 1.0f64.max(fd.abs()).max(an.abs());
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let err = grad_check(|x| x[0] * x[0], &[3.0], &[6.0], 1e-5).unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn affine_is_exact_to_rounding() {
        let f = |x: &[f64]| 2.0 * x[0] - 0.5 * x[1] + 7.0;
        let err = grad_check(f, &[0.3, -1.2], &[2.0, -0.5], 1e-5).unwrap();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn wrong_gradient_is_detected() {
        let err = grad_check(|x| x[0] * x[0], &[3.0], &[5.0], 1e-5).unwrap();
        assert!(err > 0.1);
    }

    #[test]
    fn non_finite_probe_is_reported() {
        let r = grad_check(|x| (x[0]).ln(), &[0.0], &[1.0], 1e-5);
        assert!(matches!(r, Err(Error::Probe(0))));
    }
}
