//! Monodromy of the split integrals around 0, 1 and ∞, read off from the
//! connection matrix.
//!
//! The row vector `(I_0, …, I_N)` equals `(w_0, …, w_N)·C` with `w_k` the
//! Frobenius solutions at 0. A loop around 0 multiplies `w_k` by
//! `e^{2πiσ_k}`, so `I ↦ I·C⁻¹DC`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::connection::connection_matrix;
use crate::error::{Error, Result};
use crate::params::Params;
use crate::special::{cos_pi, sin_pi};

/// Condition-number threshold on `C` (6 digits lost).
pub const MAX_CONDITION: f64 = 1e6;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq)]
pub struct MonodromyTriple {
    pub m0: CMatrix,
    pub m1: CMatrix,
    pub minf: CMatrix,
    /// `‖C‖∞·‖C⁻¹‖∞`.
    pub condition: f64,
}

fn ser_matrix(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

impl Serialize for MonodromyTriple {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("MonodromyTriple", 4)?;
        st.serialize_field("m0", &ser_matrix(&self.m0))?;
        st.serialize_field("m1", &ser_matrix(&self.m1))?;
        st.serialize_field("minf", &ser_matrix(&self.minf))?;
        st.serialize_field("condition", &self.condition)?;
        st.end()
    }
}

/// `e^{2πiθ}` with the same exact argument reduction as `sin_pi`.
fn unit(theta: f64) -> Complex64 {
    let t = 2.0 * theta;
    Complex64::new(cos_pi(t), sin_pi(t))
}

/// Diagonal of `D`: `exp(2πi·q(λ₁+α−1+(q−1)λ))`, `q = 0..=N`.
pub fn d_diagonal(p: &Params) -> Vec<Complex64> {
    (0..=p.n)
        .map(|q| {
            let qf = q as f64;
            unit(qf * (p.lambda1 + p.alpha - 1.0 + (qf - 1.0) * p.lambda))
        })
        .collect()
}

pub fn d_matrix(p: &Params) -> CMatrix {
    let d = d_diagonal(p);
    CMatrix::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { Complex64::new(0.0, 0.0) })
}

fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `C⁻¹DC` and its inverse `C⁻¹D̄C` (D is unitary for real parameters,
/// so no numerical inversion is needed), with `C⁻¹` by forward
/// substitution.
fn m0_and_inverse(p: &Params) -> Result<(CMatrix, CMatrix, f64)> {
    let c = connection_matrix(p)?.entries;
    let dim = c.nrows();
    let cinv = c
        .solve_lower_triangular(&DMatrix::identity(dim, dim))
        .ok_or_else(|| Error::IllConditioned("connection matrix is singular".into()))?;
    let cond = norm_inf(&c) * norm_inf(&cinv);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(format!("connection matrix condition {cond:e} exceeds {MAX_CONDITION:e}")));
    }
    let d = d_diagonal(p);
    let ci = cinv.map(|x| Complex64::new(x, 0.0));
    let conj = |diag: &dyn Fn(usize) -> Complex64| {
        let mut dc = c.map(|x| Complex64::new(x, 0.0));
        for (i, mut row) in dc.row_iter_mut().enumerate() {
            row *= diag(i);
        }
        &ci * dc
    };
    Ok((conj(&|i| d[i]), conj(&|i| d[i].conj()), cond))
}

/// The anti-diagonal flip `Ī·M·Ī`.
fn flip(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    CMatrix::from_fn(n, n, |i, j| m[(n - 1 - i, n - 1 - j)])
}

pub fn monodromy_triple(p: &Params) -> Result<MonodromyTriple> {
    p.check_structure()?;
    let (m0, m0inv, c0) = m0_and_inverse(p)?;
    let (m0s, m0s_inv, c1) = m0_and_inverse(&p.swapped())?;
    let m1 = flip(&m0s);
    // (M0·M1)⁻¹ = M1⁻¹·M0⁻¹
    let minf = flip(&m0s_inv) * m0inv;
    Ok(MonodromyTriple { m0, m1, minf, condition: c0.max(c1) })
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl MonodromyTriple {
    /// `max |(M∞·M0·M1 − I)_{ij}|`.
    pub fn product_residual(&self) -> f64 {
        let n = self.m0.nrows();
        max_abs(&(&self.minf * &self.m0 * &self.m1 - CMatrix::identity(n, n)))
    }
}

/// Largest distance from an eigenvalue of `M0` to its nearest `D` entry,
/// matched one-to-one (greedy on distance).
pub fn spectrum_residual(m0: &CMatrix, p: &Params) -> Result<f64> {
    let eig = nalgebra::Schur::new(m0.clone())
        .eigenvalues()
        .ok_or_else(|| Error::ConvergenceFailure("Schur decomposition of M0 did not converge".into()))?;
    let mut want = d_diagonal(p);
    let mut worst: f64 = 0.0;
    for z in eig.iter() {
        let (i, d) = want
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (z - w).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("same dimension");
        worst = worst.max(d);
        want.swap_remove(i);
    }
    Ok(worst)
}

/// `‖(I − ΠΠ⁺)·M·Π‖` for the coordinate subspace spanned by `dirs`
/// (columns of the identity): zero iff the span is invariant under `M`
/// acting on column vectors.
pub fn invariant_subspace_residual(m: &CMatrix, dirs: &[usize]) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for &j in dirs {
        for i in 0..n {
            if !dirs.contains(&i) {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Rational;

    #[test]
    fn d_examples() {
        let p = Params::new(3, 0.37, 0.2, 0.61, 0.83);
        let d = d_diagonal(&p);
        assert_eq!(d[0], Complex64::new(1.0, 0.0));
        assert!(d.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
        let q = Params::new(3, 2.0, 1.0, 1.0, 3.0);
        assert!(d_diagonal(&q).iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn product_and_spectrum() {
        let p = Params::new(3, 0.37, 0.2, 0.61, 0.83);
        let t = monodromy_triple(&p).unwrap();
        assert!(t.product_residual() < 1e-10);
        assert!(spectrum_residual(&t.m0, &p).unwrap() < 1e-10);
        let det = t.m0.determinant();
        assert!((det.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn periodic_and_lambda2_free() {
        let p = Params::new(3, 0.37, 0.2, 0.61, 0.83);
        let a = monodromy_triple(&p).unwrap().m0;
        let b = monodromy_triple(&p.with_lambda1(1.37)).unwrap().m0;
        assert!(max_abs(&(&a - &b)) < 1e-10);
        let c = monodromy_triple(&Params { lambda2: 0.9, ..p }).unwrap().m0;
        assert!(max_abs(&(&a - &c)) < 1e-14);
    }

    #[test]
    fn half_lambda_invariant_direction() {
        let half = Rational::new(1, 2).unwrap();
        let p = Params::with_rational_lambda(2, 0.3, 0.3, half, 0.77);
        let t = monodromy_triple(&p).unwrap();
        for m in [&t.m0, &t.m1, &t.minf] {
            assert!(invariant_subspace_residual(m, &[1]) < 1e-8, "{m}");
        }
    }
}
