//! Real polynomial roots via companion-matrix eigenvalues with Newton
//! polishing. Coefficients are stored in ascending order of power.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Binomial coefficient as f64 (exact for the degrees used here).
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut value = 1.0;
    for i in 0..k {
        value = value * (n - i) as f64 / (i + 1) as f64;
    }
    value.round()
}

/// Horner evaluation of the polynomial and its derivative.
fn eval_with_derivative(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// Backward-error style residual: |p(x)| relative to the magnitude sum of
/// its evaluated terms.
pub(crate) fn normalized_residual(coeffs: &[f64], x: f64) -> f64 {
    let p = eval_with_derivative(coeffs, x).0;
    let scale: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| (c * x.powi(k as i32)).abs())
        .sum();
    p.abs() / scale.max(1.0)
}

/// All real roots of the polynomial, ascending and deduplicated.
///
/// Eigenvalues of the monic companion matrix seed a few Newton steps; an
/// eigenvalue counts as real when its imaginary part is negligible against
/// its magnitude.
pub(crate) fn real_roots(coeffs: &[f64]) -> Result<Vec<f64>> {
    let degree = coeffs.len().saturating_sub(1);
    if degree == 0 {
        return Err(Error::invalid("polynomial must have degree >= 1"));
    }
    let leading = coeffs[degree];
    if leading == 0.0 {
        return Err(Error::invalid("leading coefficient must be nonzero"));
    }
    let n = degree;
    let companion = DMatrix::<f64>::from_fn(n, n, |row, col| {
        if col == n - 1 {
            -coeffs[row] / leading
        } else if row == col + 1 {
            1.0
        } else {
            0.0
        }
    });
    let eigen = companion.complex_eigenvalues();

    let mut roots: Vec<f64> = Vec::new();
    for value in eigen.iter() {
        if value.im.abs() > 1e-8 * (1.0 + value.re.abs()) {
            continue;
        }
        let mut x = value.re;
        for _ in 0..8 {
            let (p, dp) = eval_with_derivative(coeffs, x);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        roots.push(x);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-8 * (1.0 + b.abs()));
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(9, 4), 126.0);
        assert_eq!(binomial(20, 10), 184756.0);
    }

    #[test]
    fn quadratic_roots() {
        // x^2 - 1
        let roots = real_roots(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0] + 1.0).abs() < 1e-12);
        assert!((roots[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_with_zero_root() {
        // x^3 - 3x = x (x^2 - 3)
        let roots = real_roots(&[0.0, -3.0, 0.0, 1.0]).unwrap();
        assert_eq!(roots.len(), 3);
        assert!((roots[0] + 3f64.sqrt()).abs() < 1e-12);
        assert!(roots[1].abs() < 1e-12);
        assert!((roots[2] - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn complex_pair_is_filtered() {
        // x^2 + 1 has no real roots
        let roots = real_roots(&[1.0, 0.0, 1.0]).unwrap();
        assert!(roots.is_empty());
    }

    #[test]
    fn residuals_are_tiny_after_polish() {
        // x^4 - 6x^2 + 1
        let coeffs = [1.0, 0.0, -6.0, 0.0, 1.0];
        for root in real_roots(&coeffs).unwrap() {
            assert!(normalized_residual(&coeffs, root) < 1e-14);
        }
    }
}
