//! The Fuchsian system `dH/dx = (Y⁺/x + Y⁻/(1−x)) H` and its Frobenius
//! solutions about `x = 0`.
//!
//! Rows are indexed by `p = 0..=N` (the `e_p` index of the split integrals).
//! `Y⁺` is upper bidiagonal with diagonal `σ_{N−p}`, `Y⁻` lower bidiagonal.
//! Component `p` of a solution vector stands for
//! `J_{p,q}(x) / (binom(N,p)·(x−1)^p)`; component 0 is `I_q` itself.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::params::Params;

/// Resonance detection tolerance on `σ_j − σ_k − l`.
pub const RESONANCE_TOL: f64 = 1e-9;
/// Perturbation used by the averaged-ε resonance device.
pub const RESONANCE_EPS: f64 = 1e-5;
pub const L_MAX: usize = 2000;
const PIVOT_MIN: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct FuchsMatrices {
    pub n: usize,
    /// `Y⁺[p][p] = σ_{N−p}`.
    pub plus_diag: Vec<f64>,
    /// `Y⁺[p][p+1] = (N−p)·E_p`, length `N`.
    pub plus_super: Vec<f64>,
    /// `Y⁻[p][p] = −(A_p + B_p) + p`.
    pub minus_diag: Vec<f64>,
    /// `Y⁻[p][p−1] = D_p`, stored at index `p−1`, length `N`.
    pub minus_sub: Vec<f64>,
}

impl FuchsMatrices {
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn yplus(&self) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                self.plus_diag[i]
            } else if j == i + 1 {
                self.plus_super[i]
            } else {
                0.0
            }
        })
    }

    pub fn yminus(&self) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                self.minus_diag[i]
            } else if i == j + 1 {
                self.minus_sub[j]
            } else {
                0.0
            }
        })
    }

    fn apply_minus(&self, v: &[f64], out: &mut [f64]) {
        for p in 0..self.dim() {
            let mut s = self.minus_diag[p] * v[p];
            if p > 0 {
                s += self.minus_sub[p - 1] * v[p - 1];
            }
            out[p] = s;
        }
    }

    fn apply_plus(&self, v: &[f64], out: &mut [f64]) {
        for p in 0..self.dim() {
            let mut s = self.plus_diag[p] * v[p];
            if p < self.n {
                s += self.plus_super[p] * v[p + 1];
            }
            out[p] = s;
        }
    }

    pub fn trace_plus(&self) -> f64 {
        self.plus_diag.iter().sum()
    }

    pub fn trace_minus(&self) -> f64 {
        self.minus_diag.iter().sum()
    }
}

pub fn build_matrices(p: &Params) -> FuchsMatrices {
    let n = p.n;
    let mut m = FuchsMatrices {
        n,
        plus_diag: Vec::with_capacity(n + 1),
        plus_super: Vec::with_capacity(n),
        minus_diag: Vec::with_capacity(n + 1),
        minus_sub: Vec::with_capacity(n),
    };
    for row in 0..=n {
        let c = p.recurrence_coeffs(row);
        m.plus_diag.push(-c.b);
        m.minus_diag.push(-(c.a + c.b) + row as f64);
        if row < n {
            m.plus_super.push((n - row) as f64 * c.e);
        }
        if row > 0 {
            m.minus_sub.push(c.d);
        }
    }
    m
}

/// Frobenius solution `w_k(x) = x^{σ_k} Σ_l p_l x^l`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrobeniusSolution {
    pub k: usize,
    pub sigma: f64,
    /// `coeffs[l]` is the vector `p_l` of length `N+1`.
    pub coeffs: Vec<Vec<f64>>,
    /// Low halves of the double-double coefficients: `p_l = coeffs + coeffs_lo`.
    /// The series can cancel by many orders of magnitude at moderate `x`.
    #[serde(skip)]
    pub coeffs_lo: Vec<Vec<f64>>,
    pub order: usize,
    pub resonant: bool,
    pub eps_used: f64,
}

/// All `(k, l)` with `σ_k + l = σ_j` for some `j`, `1 ≤ l ≤ L`.
pub fn detect_resonance(p: &Params, order: usize) -> Vec<(usize, usize)> {
    let s = p.sigmas();
    let mut out = Vec::new();
    for k in 0..=p.n {
        for j in 0..=p.n {
            let d = s[j] - s[k];
            if d < 0.5 || d > order as f64 + 0.5 {
                continue;
            }
            let l = d.round();
            if (d - l).abs() < RESONANCE_TOL {
                out.push((k, l as usize));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// `a / b` by long division. twofloat's own double-double quotient drops
/// its correction step (the residual `1 − b·(1/b)` is formed without an
/// FMA), leaving only double accuracy.
fn ddiv(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

type DdCoeffs = Vec<Vec<TwoFloat>>;

/// The bidiagonal entries of `Y±` and the exponents, in double-double.
/// Rounding them to doubles perturbs the solutions far more than the
/// connection weights can absorb once the series cancel.
struct DdSystem {
    sigma: Vec<TwoFloat>,
    plus_super: Vec<TwoFloat>,
    minus_diag: Vec<TwoFloat>,
    minus_sub: Vec<TwoFloat>,
}

impl DdSystem {
    fn new(p: &Params) -> Self {
        let dd = TwoFloat::from;
        let (l1, l2, l, al) = (dd(p.lambda1), dd(p.lambda2), dd(p.lambda), dd(p.alpha));
        let n = p.n as f64;
        let mut sys = DdSystem { sigma: vec![], plus_super: vec![], minus_diag: vec![], minus_sub: vec![] };
        for k in 0..=p.n {
            let kf = k as f64;
            sys.sigma.push((l1 + l * (kf - 1.0) + al) * kf);
        }
        for row in 0..=p.n {
            let pf = row as f64;
            let a = (l1 + l2 + l * (2.0 * (n - pf - 1.0)) + al * 2.0) * (n - pf);
            let b = (l1 + l * (n - pf - 1.0) + al) * (pf - n);
            sys.minus_diag.push(-(a + b) + pf);
            if row < p.n {
                let e = l1 + l2 + l * (2.0 * n - pf - 2.0) + al + 1.0;
                sys.plus_super.push(e * (n - pf));
            }
            if row > 0 {
                sys.minus_sub.push((l * (n - pf) + al) * pf);
            }
        }
        sys
    }

    /// `Y⁺[row][row] = σ_{N−row}`.
    fn plus_diag(&self, row: usize) -> TwoFloat {
        self.sigma[self.sigma.len() - 1 - row]
    }
}

/// Recurrence without any resonance handling, in double-double.
pub(crate) fn frobenius_raw(k: usize, p: &Params, order: usize) -> Result<DdCoeffs> {
    let m = DdSystem::new(p);
    let n = p.n;
    assert!(k <= n, "solution index out of range");
    let sigma = m.sigma[k];
    let pos = n - k;
    let zero = TwoFloat::from(0.0);

    let mut v = vec![zero; n + 1];
    v[pos] = TwoFloat::from(1.0);
    for row in (0..pos).rev() {
        let piv = sigma - m.plus_diag(row);
        if piv.hi().abs() < PIVOT_MIN {
            return Err(Error::SingularSolve { row, l: 0 });
        }
        v[row] = ddiv(v[row + 1] * m.plus_super[row], piv);
    }
    if v[0].hi() == 0.0 || !v[0].hi().is_finite() {
        return Err(Error::SingularSolve { row: 0, l: 0 });
    }
    let v0 = v[0];
    v.iter_mut().for_each(|c| *c = ddiv(*c, v0));

    let mut coeffs = Vec::with_capacity(order + 1);
    let mut running = v.clone();
    coeffs.push(v);
    let mut rhs = vec![zero; n + 1];
    for l in 1..=order {
        for row in 0..=n {
            let mut r = running[row] * m.minus_diag[row];
            if row > 0 {
                r += running[row - 1] * m.minus_sub[row - 1];
            }
            rhs[row] = r;
        }
        let mut pl = vec![zero; n + 1];
        for row in (0..=n).rev() {
            let mut r = rhs[row];
            if row < n {
                r += pl[row + 1] * m.plus_super[row];
            }
            let piv = sigma - m.plus_diag(row) + l as f64;
            if piv.hi().abs() < PIVOT_MIN {
                return Err(Error::SingularSolve { row, l });
            }
            pl[row] = ddiv(r, piv);
        }
        for (a, b) in running.iter_mut().zip(&pl) {
            *a += *b;
        }
        coeffs.push(pl);
    }
    Ok(coeffs)
}

fn half_difference(a: &DdCoeffs, b: &DdCoeffs) -> f64 {
    a.iter().zip(b).flat_map(|(u, v)| u.iter().zip(v).map(|(x, y)| 0.5 * (*x - *y).hi().abs())).fold(0.0, f64::max)
}

fn average(a: &DdCoeffs, b: &DdCoeffs) -> DdCoeffs {
    a.iter().zip(b).map(|(u, v)| u.iter().zip(v).map(|(x, y)| (*x + *y) * 0.5).collect()).collect()
}

fn split(c: DdCoeffs) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let hi = c.iter().map(|v| v.iter().map(|x| x.hi()).collect()).collect();
    let lo = c.iter().map(|v| v.iter().map(|x| x.lo()).collect()).collect();
    (hi, lo)
}

/// Frobenius coefficients `p_0..p_L` for solution `k`.
///
/// When `σ_k + l` hits another exponent for some `l ≤ L`, the recurrence is
/// run at `λ₁ ± ε` and the two runs averaged. A genuine log term shows up
/// as a `1/ε` odd part; comparing the half-differences at `ε` and `10ε`
/// exposes it and we report [`Error::ResonanceUnresolvable`].
pub fn frobenius(k: usize, p: &Params, order: usize) -> Result<FrobeniusSolution> {
    p.check_structure()?;
    let sigma = p.sigma(k);
    let hits: Vec<usize> = detect_resonance(p, order).into_iter().filter(|&(kk, _)| kk == k).map(|(_, l)| l).collect();
    if hits.is_empty() {
        let (coeffs, coeffs_lo) = split(frobenius_raw(k, p, order)?);
        return Ok(FrobeniusSolution { k, sigma, coeffs, coeffs_lo, order, resonant: false, eps_used: 0.0 });
    }
    let run = |eps: f64| -> Result<(DdCoeffs, DdCoeffs)> {
        let a = frobenius_raw(k, &p.with_lambda1(p.lambda1 + eps), order)?;
        let b = frobenius_raw(k, &p.with_lambda1(p.lambda1 - eps), order)?;
        Ok((a, b))
    };
    let (a, b) = run(RESONANCE_EPS)?;
    let (c, d) = run(10.0 * RESONANCE_EPS)?;
    let small = half_difference(&a, &b);
    let large = half_difference(&c, &d);
    // Regular in λ₁: the odd part scales like ε, so large/small ≈ 10.
    // A pole scales like 1/ε, giving ≈ 0.1.
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.hi().abs()));
    if small > 1e-6 * scale.max(1.0) && large < 3.0 * small {
        return Err(Error::ResonanceUnresolvable {
            k,
            l: hits[0],
            detail: format!(
                "odd part of the perturbed runs grows as eps shrinks ({large:e} at 1e-4 vs {small:e} at 1e-5): log term"
            ),
        });
    }
    let (coeffs, coeffs_lo) = split(average(&a, &b));
    Ok(FrobeniusSolution { k, sigma, coeffs, coeffs_lo, order, resonant: true, eps_used: RESONANCE_EPS })
}

/// Value and derivative of a truncated solution at `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionValue {
    pub value: Vec<f64>,
    pub derivative: Vec<f64>,
    /// Estimated absolute truncation error of `value` (∞-norm).
    pub tail: f64,
    /// `Σ_l |p_l[0]|·x^{σ+l}`. The coefficients can be huge and alternate;
    /// `ε²·abs_sum0` bounds the double-double rounding of component 0.
    pub abs_sum0: f64,
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Geometric extrapolation of the dropped tail from the last five terms,
/// *without* the `x^σ` prefactor.
pub(crate) fn tail_estimate(coeffs: &[Vec<f64>], x: f64) -> f64 {
    let len = coeffs.len();
    if len < 6 {
        return f64::INFINITY;
    }
    let last: Vec<f64> = (len - 5..len).map(|l| norm_inf(&coeffs[l]) * x.powi(l as i32)).collect();
    let biggest = last.iter().cloned().fold(0.0, f64::max);
    if biggest == 0.0 {
        return 0.0;
    }
    if last[0] == 0.0 {
        return f64::INFINITY;
    }
    let rho = (last[4] / last[0]).powf(0.25);
    if !(rho < 1.0) {
        return f64::INFINITY;
    }
    biggest * rho / (1.0 - rho)
}

/// Evaluate `w_k(x)` and its derivative term by term, summing in
/// double-double.
pub fn eval_solution(s: &FrobeniusSolution, x: f64) -> SolutionValue {
    let dim = s.coeffs[0].len();
    let zero = TwoFloat::from(0.0);
    let mut val = vec![zero; dim];
    let mut der = vec![zero; dim];
    let mut abs0 = 0.0;
    // Horner from the top degree.
    for (l, (c, lo)) in s.coeffs.iter().zip(&s.coeffs_lo).enumerate().rev() {
        let f = s.sigma + l as f64;
        abs0 = abs0 * x + c[0].abs();
        for i in 0..dim {
            let ci = TwoFloat::new_add(c[i], lo[i]);
            val[i] = val[i] * x + ci;
            der[i] = der[i] * x + ci * f;
        }
    }
    let xs = x.powf(s.sigma);
    let xs1 = x.powf(s.sigma - 1.0);
    let tail = tail_estimate(&s.coeffs, x) * xs;
    SolutionValue {
        value: val.iter().map(|v| v.hi() * xs).collect(),
        derivative: der.iter().map(|v| v.hi() * xs1).collect(),
        tail,
        abs_sum0: abs0 * xs,
    }
}

/// Evaluate and enforce a relative truncation tolerance.
pub fn eval_solution_checked(s: &FrobeniusSolution, x: f64, tol: f64) -> Result<SolutionValue> {
    let v = eval_solution(s, x);
    let scale = norm_inf(&v.value);
    if !(v.tail <= tol * scale) {
        return Err(Error::TailTooLarge { x, order: s.order, tail: v.tail, tol: tol * scale });
    }
    Ok(v)
}

/// Smallest order (by doubling from 32) whose tail estimate at `x` is below
/// `tol` relative, capped at [`L_MAX`].
pub fn frobenius_for_x(k: usize, p: &Params, x: f64, tol: f64) -> Result<FrobeniusSolution> {
    let mut order = 32;
    loop {
        let s = frobenius(k, p, order)?;
        match eval_solution_checked(&s, x, tol) {
            Ok(_) => return Ok(s),
            Err(e) => {
                if order >= L_MAX {
                    return Err(e);
                }
                order = (order * 2).min(L_MAX);
            }
        }
    }
}

/// All `N+1` solutions, computed in parallel.
pub fn all_solutions(p: &Params, order: usize) -> Result<Vec<FrobeniusSolution>> {
    (0..=p.n).into_par_iter().map(|k| frobenius(k, p, order)).collect()
}

pub fn all_solutions_for_x(p: &Params, x: f64, tol: f64) -> Result<Vec<FrobeniusSolution>> {
    (0..=p.n).into_par_iter().map(|k| frobenius_for_x(k, p, x, tol)).collect()
}

/// `max_k ‖w_k' − (Y⁺/x + Y⁻/(1−x)) w_k‖∞ / ‖w_k‖∞`.
pub fn ode_residual(solutions: &[FrobeniusSolution], p: &Params, x: f64) -> f64 {
    let m = build_matrices(p);
    let dim = m.dim();
    let mut a = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    let mut worst: f64 = 0.0;
    for s in solutions {
        let v = eval_solution(s, x);
        m.apply_plus(&v.value, &mut a);
        m.apply_minus(&v.value, &mut b);
        let r = (0..dim).map(|i| (v.derivative[i] - a[i] / x - b[i] / (1.0 - x)).abs()).fold(0.0, f64::max);
        worst = worst.max(r / norm_inf(&v.value).max(f64::MIN_POSITIVE));
    }
    worst
}

/// `det[w_0 … w_N](x) · x^{−Tr Y⁺} (1−x)^{Tr Y⁻}`; constant in `x`.
pub fn wronskian_invariant(solutions: &[FrobeniusSolution], p: &Params, x: f64) -> f64 {
    let m = build_matrices(p);
    let dim = m.dim();
    let cols: Vec<Vec<f64>> = solutions.iter().map(|s| eval_solution(s, x).value).collect();
    let w = DMatrix::from_fn(dim, dim, |i, j| cols[j][i]);
    w.determinant() * x.powf(-m.trace_plus()) * (1.0 - x).powf(m.trace_minus())
}

/// Per-step residual `‖((σ+l)I − Y⁺)p_l − Y⁻ Σ_{i<l} p_i‖∞` relative to the
/// norms involved; maximum over `l ≥ 1`.
pub fn recurrence_residual(s: &FrobeniusSolution, p: &Params) -> f64 {
    let m = build_matrices(p);
    let dim = m.dim();
    // the partial sums cancel heavily; accumulate them as the recurrence does
    let dd = |l: usize| -> Vec<TwoFloat> {
        s.coeffs[l].iter().zip(&s.coeffs_lo[l]).map(|(h, lo)| TwoFloat::new_add(*h, *lo)).collect()
    };
    let mut running = dd(0);
    let mut yp = vec![0.0; dim];
    let mut ym = vec![0.0; dim];
    let mut worst: f64 = 0.0;
    for (l, pl) in s.coeffs.iter().enumerate().skip(1) {
        m.apply_plus(pl, &mut yp);
        let run: Vec<f64> = running.iter().map(|v| v.hi()).collect();
        m.apply_minus(&run, &mut ym);
        let f = s.sigma + l as f64;
        let mut r: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..dim {
            r = r.max((f * pl[i] - yp[i] - ym[i]).abs());
            scale = scale.max((f * pl[i]).abs()).max(yp[i].abs()).max(ym[i].abs());
        }
        worst = worst.max(r / scale.max(f64::MIN_POSITIVE));
        for (a, b) in running.iter_mut().zip(dd(l)) {
            *a += b;
        }
    }
    worst
}
