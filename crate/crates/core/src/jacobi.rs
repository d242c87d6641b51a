//! Zeros of Jacobi polynomials by Golub–Welsch: eigenvalues of the
//! symmetric tridiagonal matrix of the monic three-term recurrence.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::params::Params;

/// Zeros of `P_n^{(a,b)}(y)` on `(−1, 1)`, ascending.
pub fn jacobi_zeros(n: usize, a: f64, b: f64) -> Result<Vec<f64>> {
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::InvalidParams(format!("Jacobi parameters ({a},{b}) must exceed -1")));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let ab = a + b;
    let mut t = DMatrix::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        t[(k, k)] = if k == 0 { (b - a) / (ab + 2.0) } else { (b * b - a * a) / (s * (s + 2.0)) };
        if k + 1 < n {
            let m = kf + 1.0;
            let s = 2.0 * m + ab;
            let beta = if m == 1.0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * m * (m + a) * (m + b) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            t[(k, k + 1)] = beta.sqrt();
            t[(k + 1, k)] = beta.sqrt();
        }
    }
    let mut z: Vec<f64> = SymmetricEigen::new(t).eigenvalues.iter().copied().collect();
    z.sort_by(f64::total_cmp);
    Ok(z)
}

/// Zeros of `P_n^{(a,b)}(1 − 2x)` in `x ∈ (0, 1)`, ascending.
pub fn jacobi_zeros_unit(n: usize, a: f64, b: f64) -> Result<Vec<f64>> {
    let mut z: Vec<f64> = jacobi_zeros(n, a, b)?.into_iter().map(|y| 0.5 * (1.0 - y)).collect();
    z.sort_by(f64::total_cmp);
    Ok(z)
}

/// Jacobi parameters whose zeros are those of `⟨∏(x − t_l)⟩`:
/// `a = (λ₁+1)/λ − 1`, `b = (λ₂+1)/λ − 1`.
pub fn aomoto_parameters(p: &Params) -> (f64, f64) {
    ((p.lambda1 + 1.0) / p.lambda - 1.0, (p.lambda2 + 1.0) / p.lambda - 1.0)
}

/// The same with `λ₁` in both slots, as sometimes printed; kept for the
/// discrepancy report.
pub fn aomoto_parameters_literal(p: &Params) -> (f64, f64) {
    let a = (p.lambda1 + 1.0) / p.lambda - 1.0;
    (a, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_zeros() {
        let z = jacobi_zeros(2, 0.0, 0.0).unwrap();
        let r = 1.0 / 3.0f64.sqrt();
        assert!((z[0] + r).abs() < 1e-15 && (z[1] - r).abs() < 1e-15);
        let z = jacobi_zeros(3, 0.0, 0.0).unwrap();
        assert!(z[1].abs() < 1e-15);
        assert!((z[2] - (0.6f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_second_kind() {
        // a = b = 1/2: zeros cos(kπ/(n+1))
        let n = 7;
        let z = jacobi_zeros(n, 0.5, 0.5).unwrap();
        for (i, y) in z.iter().enumerate() {
            let want = (std::f64::consts::PI * (n - i) as f64 / (n + 1) as f64).cos();
            assert!((y - want).abs() < 1e-14);
        }
    }

    #[test]
    fn asymmetric_n1() {
        // P_1^{(a,b)}(y) ∝ (a+b+2)y + (a−b)
        let (a, b) = (0.7, 2.3);
        let z = jacobi_zeros(1, a, b).unwrap();
        assert!((z[0] - (b - a) / (a + b + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn unit_interval_map() {
        let z = jacobi_zeros_unit(1, 0.0, 0.0).unwrap();
        assert!((z[0] - 0.5).abs() < 1e-15);
        assert!(jacobi_zeros(2, -1.0, 0.0).is_err());
    }
}
