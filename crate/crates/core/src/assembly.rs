//! Split integrals `I_q^{(α)}(x)` from the Frobenius basis and the
//! connection matrix, and the quantities built on them.
//!
//! Degenerate parameters — an integer gap between exponents, or a 0/0 in
//! the connection coefficients — make individual basis terms singular even
//! though `I_q` itself is analytic in `λ₁`. There we evaluate the whole
//! assembled sum at `λ₁ ± h, ±2h, ±4h` and extrapolate the symmetric
//! averages to `h → 0` (two Richardson steps, error `O(h⁶)`).

use rayon::prelude::*;
use serde::Serialize;

use crate::connection::{c_entry, leading_weight};
use crate::error::{Error, Result};
use crate::fuchsian::{eval_solution, frobenius, frobenius_for_x, L_MAX};
use crate::params::{LogValue, Params};
use crate::selberg::{selberg, selberg_reduced, SelbergArgs};
use crate::special::binomial;

/// Default relative truncation tolerance for series evaluation.
pub const DEFAULT_TOL: f64 = 1e-14;
/// Step of the `λ₁` limit at degenerate parameters.
pub const LIMIT_STEP: f64 = 1e-3;
/// Exponent gaps closer than this to an integer count as degenerate.
const NEAR_RESONANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesEvaluation {
    pub value: f64,
    /// d/dx of the value, from the series term by term.
    pub derivative: f64,
    pub tail_bound: f64,
    /// Scale of the cancellation behind `value`: `ε·magnitude` estimates its
    /// rounding error.
    pub magnitude: f64,
    pub terms_used: usize,
    pub via_reflection: bool,
    /// Obtained as a `λ₁` limit (degenerate parameters).
    pub limit: bool,
}

#[derive(Debug)]
enum Direct {
    Ok(Vec<SeriesEvaluation>),
    Degenerate(Error),
}

fn near_resonant(p: &Params) -> bool {
    let s = p.sigmas();
    for k in 0..=p.n {
        for j in 0..=p.n {
            let d = s[j] - s[k];
            if d > 0.5 && d < L_MAX as f64 + 0.5 && (d - d.round()).abs() < NEAR_RESONANCE {
                return true;
            }
        }
    }
    false
}

/// All `I_q(x)`, `q = 0..=N`, straight from the expansion at 0.
fn direct(x: f64, p: &Params, tol: f64) -> Result<Direct> {
    if near_resonant(p) {
        return Ok(Direct::Degenerate(Error::ResonanceUnresolvable {
            k: 0,
            l: 0,
            detail: "integer gap between exponents".into(),
        }));
    }
    let n = p.n;
    // Weights first: cheap, and they decide degeneracy.
    let mut weight = vec![vec![0.0; n + 1]; n + 1];
    for k in 0..=n {
        let w = match leading_weight(k, p) {
            Ok(w) => w,
            Err(e @ Error::Pole { .. }) => return Ok(Direct::Degenerate(e)),
            Err(e) => return Err(e),
        };
        for q in 0..=k {
            let c = match c_entry(k, q, p) {
                Ok(c) => c,
                Err(e @ Error::Pole { .. }) => return Ok(Direct::Degenerate(e)),
                Err(e) => return Err(e),
            };
            weight[k][q] = (w * LogValue::from_f64(c)).value();
        }
    }
    let sols: Vec<_> = (0..=n).into_par_iter().map(|k| frobenius_for_x(k, p, x, tol)).collect::<Result<_>>()?;
    let evals: Vec<_> = sols.iter().map(|s| eval_solution(s, x)).collect();
    let terms = sols.iter().map(|s| s.order).max().unwrap_or(0);
    let out = (0..=n)
        .map(|q| {
            let mut v = 0.0;
            let mut d = 0.0;
            let mut t = 0.0;
            let mut m = 0.0;
            for k in q..=n {
                let w = weight[k][q];
                if w == 0.0 {
                    continue;
                }
                v += w * evals[k].value[0];
                d += w * evals[k].derivative[0];
                t += w.abs() * evals[k].tail;
                // in units of ε: f64 weights, then the double-double series
                m += w.abs() * (evals[k].value[0].abs() + f64::EPSILON * evals[k].abs_sum0);
            }
            SeriesEvaluation {
                value: v,
                derivative: d,
                tail_bound: t,
                magnitude: m,
                terms_used: terms,
                via_reflection: false,
                limit: false,
            }
        })
        .collect();
    Ok(Direct::Ok(out))
}

fn direct_required(x: f64, p: &Params, tol: f64) -> Result<Vec<SeriesEvaluation>> {
    match direct(x, p, tol)? {
        Direct::Ok(v) => Ok(v),
        Direct::Degenerate(e) => Err(e),
    }
}

/// Symmetric average over `λ₁ ± h`, Richardson-extrapolated twice.
fn limit_in_lambda1(x: f64, p: &Params, tol: f64) -> Result<Vec<SeriesEvaluation>> {
    let mut last_err = None;
    for h in [LIMIT_STEP, 0.7 * LIMIT_STEP, 1.3 * LIMIT_STEP] {
        let avg = |step: f64| -> Result<Vec<SeriesEvaluation>> {
            let a = direct_required(x, &p.with_lambda1(p.lambda1 + step), tol)?;
            let b = direct_required(x, &p.with_lambda1(p.lambda1 - step), tol)?;
            Ok(a.iter()
                .zip(&b)
                .map(|(u, v)| SeriesEvaluation {
                    value: 0.5 * (u.value + v.value),
                    derivative: 0.5 * (u.derivative + v.derivative),
                    tail_bound: u.tail_bound.max(v.tail_bound),
                    magnitude: u.magnitude.max(v.magnitude),
                    terms_used: u.terms_used.max(v.terms_used),
                    via_reflection: false,
                    limit: true,
                })
                .collect())
        };
        let runs: Result<Vec<_>> = [h, 2.0 * h, 4.0 * h].iter().map(|&s| avg(s)).collect();
        let runs = match runs {
            Ok(r) => r,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let (a1, a2, a4) = (&runs[0], &runs[1], &runs[2]);
        let out = (0..a1.len())
            .map(|q| {
                let ext = |f: fn(&SeriesEvaluation) -> f64| {
                    let r1 = (4.0 * f(&a1[q]) - f(&a2[q])) / 3.0;
                    let r2 = (4.0 * f(&a2[q]) - f(&a4[q])) / 3.0;
                    ((16.0 * r1 - r2) / 15.0, (r1 - r2).abs() / 15.0)
                };
                let (value, err) = ext(|e| e.value);
                let (derivative, _) = ext(|e| e.derivative);
                SeriesEvaluation {
                    value,
                    derivative,
                    tail_bound: a1[q].tail_bound.max(a4[q].tail_bound) + err,
                    magnitude: a1[q].magnitude.max(a4[q].magnitude),
                    terms_used: a1[q].terms_used.max(a4[q].terms_used),
                    via_reflection: false,
                    limit: true,
                }
            })
            .collect();
        return Ok(out);
    }
    Err(last_err.expect("at least one step attempted"))
}

/// All split integrals at `x ≤ 1/2` (no reflection).
fn near_zero(x: f64, p: &Params, tol: f64) -> Result<Vec<SeriesEvaluation>> {
    match direct(x, p, tol)? {
        Direct::Ok(v) => Ok(v),
        Direct::Degenerate(_) => limit_in_lambda1(x, p, tol),
    }
}

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidParams(format!("x={x} must lie in (0,1)")));
    }
    Ok(())
}

/// Both expansions converge fast in this band; there each `I_q` is taken
/// from whichever one cancels less.
const BOTH_WAYS: (f64, f64) = (0.25, 0.75);

/// `I_q^{(α)}(x)` for every `q = 0..=N`. Near 0 from the expansion at 0,
/// near 1 at `1−x` with `λ₁ ↔ λ₂` and `q ↦ N−q`; in between per `q`,
/// whichever carries less cancellation (small `I_q` otherwise lose
/// absolute accuracy to their large neighbours).
pub fn split_integrals(x: f64, p: &Params, tol: f64) -> Result<Vec<SeriesEvaluation>> {
    p.check_structure()?;
    check_x(x)?;
    if x < BOTH_WAYS.0 {
        return near_zero(x, p, tol);
    }
    if x > BOTH_WAYS.1 {
        return split_integrals_reflected(x, p, tol);
    }
    let a = near_zero(x, p, tol)?;
    let b = split_integrals_reflected(x, p, tol)?;
    Ok(a.into_iter().zip(b).map(|(u, v)| if v.magnitude < u.magnitude { v } else { u }).collect())
}

/// Always straight from the expansion at 0.
pub fn split_integrals_direct(x: f64, p: &Params, tol: f64) -> Result<Vec<SeriesEvaluation>> {
    p.check_structure()?;
    check_x(x)?;
    near_zero(x, p, tol)
}

/// Always via the reflection `I_q(x) = I_{N−q}(1−x)|_{λ₁↔λ₂}`.
pub fn split_integrals_reflected(x: f64, p: &Params, tol: f64) -> Result<Vec<SeriesEvaluation>> {
    p.check_structure()?;
    check_x(x)?;
    let mut v = near_zero(1.0 - x, &p.swapped(), tol)?;
    v.reverse();
    for e in &mut v {
        e.derivative = -e.derivative;
        e.via_reflection = true;
    }
    Ok(v)
}

pub fn i_q(q: usize, x: f64, p: &Params, tol: f64) -> Result<SeriesEvaluation> {
    if q > p.n {
        return Err(Error::InvalidParams(format!("q={q} exceeds N={}", p.n)));
    }
    Ok(split_integrals(x, p, tol)?[q])
}

fn selberg_norm(p: &Params) -> Result<f64> {
    Ok(selberg(&SelbergArgs::new(p.n, p.lambda1, p.lambda2, p.lambda))?.value())
}

/// Probability that exactly `n` eigenvalues lie in `(0, x)`.
pub fn gap_prob(n: usize, x: f64, p: &Params) -> Result<f64> {
    let q = p.with_alpha(1.0);
    Ok(i_q(n, x, &q, DEFAULT_TOL)?.value / selberg_norm(&q)?)
}

/// All gap probabilities `E_N(n; (0,x))`, `n = 0..=N`.
pub fn gap_probs(x: f64, p: &Params) -> Result<Vec<f64>> {
    gap_probs_tol(x, p, DEFAULT_TOL)
}

pub fn gap_probs_tol(x: f64, p: &Params, tol: f64) -> Result<Vec<f64>> {
    let q = p.with_alpha(1.0);
    let s = selberg_norm(&q)?;
    Ok(split_integrals(x, &q, tol)?.iter().map(|e| e.value / s).collect())
}

/// Densities `p_N(n; x)` for `n = 0..N−1` (the (n+1)-st smallest point).
pub fn order_stat_densities(x: f64, p: &Params) -> Result<Vec<f64>> {
    order_stat_densities_tol(x, p, DEFAULT_TOL)
}

pub fn order_stat_densities_tol(x: f64, p: &Params, tol: f64) -> Result<Vec<f64>> {
    let q = p.with_alpha(1.0);
    let s = selberg_norm(&q)?;
    let d: Vec<f64> = split_integrals(x, &q, tol)?.iter().map(|e| e.derivative).collect();
    // Σ_q I_q' = 0, so the density is minus the head sum or plus the tail
    // sum; the two can differ by orders of magnitude in cancellation.
    Ok((0..p.n)
        .map(|n| {
            let (head, tail) = d.split_at(n + 1);
            let mass = |v: &[f64]| v.iter().map(|t| t.abs()).sum::<f64>();
            let sum = if mass(head) <= mass(tail) { -head.iter().sum::<f64>() } else { tail.iter().sum::<f64>() };
            sum / s
        })
        .collect())
}

/// Densities at `x = 0` or `x = 1`: the (n+1)-st smallest point of `N`
/// sits at the edge with `n+1` points nearby (at 0) or `N−n` (at 1), and the
/// density there behaves like `x^{σ−1}`. Zero when that power is positive,
/// `+∞` when negative; at power zero (only possible for the extreme point)
/// it is a ratio of Selberg integrals.
pub fn order_stat_densities_at_edge(x: f64, p: &Params) -> Result<Vec<f64>> {
    p.check_structure()?;
    let q = p.with_alpha(1.0);
    let (near, m) = match x {
        _ if x == 0.0 => (q, 0),
        _ if x == 1.0 => (q.swapped(), 1),
        _ => return Err(Error::InvalidParams(format!("x={x} is not an edge of [0,1]"))),
    };
    let s = selberg_norm(&q)?;
    let n = p.n;
    (0..n)
        .map(|i| {
            // points between the edge and the one at x, inclusive
            let j = if m == 0 { i + 1 } else { n - i };
            let e = near.sigma(j) - 1.0;
            if e > 0.0 {
                Ok(0.0)
            } else if e < 0.0 {
                Ok(f64::INFINITY)
            } else {
                // j = 1, λ₁ = 0: N·S_{N−1}(λ₁+2λ, λ₂, λ)/S_N
                let rest =
                    selberg(&SelbergArgs::new(n - 1, near.lambda1 + 2.0 * near.lambda, near.lambda2, near.lambda))?;
                Ok(n as f64 * rest.value() / s)
            }
        })
        .collect()
}

pub fn order_stat_density(n: usize, x: f64, p: &Params) -> Result<f64> {
    if n >= p.n {
        return Err(Error::InvalidParams(format!("n={n} must be below N={}", p.n)));
    }
    Ok(order_stat_densities(x, p)?[n])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentOptions {
    /// Evaluate through the `λ₁` limit even when α sits on a pole of the
    /// Selberg weights (the log points). Off by default.
    pub perturb_poles: bool,
    /// Series truncation tolerance.
    pub tol: f64,
}

impl Default for MomentOptions {
    fn default() -> Self {
        MomentOptions { perturb_poles: false, tol: DEFAULT_TOL }
    }
}

/// The moment at `x = 0` or `x = 1`, where it is a ratio of Selberg
/// integrals: `S_N(λ₁+2μ, λ₂, λ)/S_N(λ₁, λ₂, λ)` at 0, `λ₂` shifted at 1.
pub fn moment_at_edge(x: f64, mu: f64, p: &Params) -> Result<f64> {
    p.check_structure()?;
    let near = match x {
        _ if x == 0.0 => *p,
        _ if x == 1.0 => p.swapped(),
        _ => return Err(Error::InvalidParams(format!("x={x} is not an edge of [0,1]"))),
    };
    if near.lambda1 + 2.0 * mu <= -1.0 {
        return Err(Error::InvalidParams(format!(
            "moment diverges at x={x}: the weight exponent {} is not above -1",
            near.lambda1 + 2.0 * mu
        )));
    }
    let top = selberg(&SelbergArgs::new(p.n, near.lambda1 + 2.0 * mu, near.lambda2, p.lambda))?;
    Ok((top / selberg(&SelbergArgs::new(p.n, near.lambda1, near.lambda2, p.lambda))?).value())
}

/// `⟨∏|t_j − x|^{2μ}⟩` with respect to the Selberg density.
pub fn moment_average(x: f64, mu: f64, p: &Params, opts: MomentOptions) -> Result<SeriesEvaluation> {
    p.check_structure()?;
    check_x(x)?;
    if mu == 0.0 {
        return Ok(SeriesEvaluation {
            value: 1.0,
            derivative: 0.0,
            tail_bound: 0.0,
            magnitude: 1.0,
            terms_used: 0,
            via_reflection: false,
            limit: false,
        });
    }
    let q = p.with_alpha(2.0 * mu + 1.0);
    let pole_in = |probe: &Params| -> Option<(usize, String, String)> {
        (0..=p.n).find_map(|k| match leading_weight(k, probe) {
            Err(Error::Pole { context, detail }) => Some((k, context, detail)),
            _ => None,
        })
    };
    let s = selberg_norm(&q)?;
    let all = if opts.perturb_poles {
        split_integrals(x, &q, opts.tol)?
    } else {
        let near = if x <= BOTH_WAYS.1 { pole_in(&q) } else { None };
        let far = if x >= BOTH_WAYS.0 { pole_in(&q.swapped()) } else { None };
        match (near, far) {
            (None, None) => split_integrals(x, &q, opts.tol)?,
            (Some(_), None) if x >= BOTH_WAYS.0 => split_integrals_reflected(x, &q, opts.tol)?,
            (None, Some(_)) if x <= BOTH_WAYS.1 => split_integrals_direct(x, &q, opts.tol)?,
            (Some((k, context, detail)), _) | (None, Some((k, context, detail))) => {
                return Err(Error::Pole {
                    context: format!("moment weight k={k} ({context})"),
                    detail: format!(
                        "{detail}; alpha={} is a log point, use moment_asymptotic_log or enable perturb_poles",
                        q.alpha
                    ),
                })
            }
        }
    };
    let mut out = all[0];
    out.value = all.iter().map(|e| e.value).sum::<f64>() / s;
    out.derivative = all.iter().map(|e| e.derivative).sum::<f64>() / s;
    out.tail_bound = all.iter().map(|e| e.tail_bound).sum::<f64>() / s.abs();
    out.magnitude = all.iter().map(|e| e.magnitude).sum::<f64>() / s.abs();
    out.limit = all.iter().any(|e| e.limit);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentAsymptotic {
    pub exponent: f64,
    pub log_factor: bool,
    pub coefficient: LogValue,
    pub l: usize,
    /// α the coefficient was evaluated at.
    pub alpha: f64,
}

impl MomentAsymptotic {
    /// Leading behaviour at small `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let base = self.coefficient.value() * x.powf(self.exponent);
        if self.log_factor {
            base * (1.0 / x).ln()
        } else {
            base
        }
    }
}

const WINDOW_TOL: f64 = 1e-9;

/// `binom(N,l)·S_l(λ₁,α−1,λ)·S_{N−l}(λ₁+α−1+2lλ,λ₂,λ)/S_N·Σ_{q≤l} c_{l,q}`.
fn window_coefficient(l: usize, p: &Params) -> Result<LogValue> {
    let mut csum = 0.0;
    for q in 0..=l {
        csum += c_entry(l, q, p)?;
    }
    let s = selberg(&SelbergArgs::new(p.n, p.lambda1, p.lambda2, p.lambda))?;
    Ok(leading_weight(l, p)? / s * LogValue::from_f64(csum))
}

/// Leading small-`x` law of the moment: `x^{σ_l}` times a constant, `l`
/// being the index of the smallest exponent at `α = 2μ+1`.
pub fn moment_asymptotic(mu: f64, p: &Params) -> Result<MomentAsymptotic> {
    p.check_structure()?;
    let q = p.with_alpha(2.0 * mu + 1.0);
    let alpha = q.alpha;
    // σ_{k+1} − σ_k = λ₁ + α + 2kλ: ties sit at α = −2kλ − λ₁.
    for k in 0..p.n {
        let edge = -2.0 * k as f64 * p.lambda - p.lambda1;
        if (alpha - edge).abs() < WINDOW_TOL {
            return Err(Error::WindowBoundary { alpha });
        }
    }
    let s = q.sigmas();
    let l = (0..=p.n).min_by(|&a, &b| s[a].total_cmp(&s[b])).expect("N ≥ 1");
    Ok(MomentAsymptotic { exponent: s[l], log_factor: false, coefficient: window_coefficient(l, &q)?, l, alpha })
}

/// The log case: α pinned at `−2lλ − λ₁` where `σ_l = σ_{l+1}`; the moment
/// behaves like `x^{σ_l} log(1/x)` with the divergent `Γ(λ₁+α+2lλ)`
/// cancelled out of the Selberg factor.
pub fn moment_asymptotic_log(l: usize, p: &Params) -> Result<MomentAsymptotic> {
    p.check_structure()?;
    if l >= p.n {
        return Err(Error::InvalidParams(format!("log case needs l < N (l={l}, N={})", p.n)));
    }
    let alpha = -2.0 * l as f64 * p.lambda - p.lambda1;
    let q = p.with_alpha(alpha);
    let n = p.n;
    let a = SelbergArgs::new(l, q.lambda1, alpha - 1.0, q.lambda);
    let b = SelbergArgs::new(n - l, -1.0, q.lambda2, q.lambda);
    let s = selberg(&SelbergArgs::new(n, q.lambda1, q.lambda2, q.lambda))?;
    let mut csum = 0.0;
    for j in 0..=l {
        csum += c_entry(l, j, &q)?;
    }
    let coefficient =
        LogValue::from_f64(binomial(n, l)) * selberg(&a)? * selberg_reduced(&b)? / s * LogValue::from_f64(csum);
    Ok(MomentAsymptotic { exponent: q.sigma(l), log_factor: true, coefficient, l, alpha })
}

/// The window coefficient `h(l)` at an arbitrary α (no window check).
pub fn window_term(l: usize, alpha: f64, p: &Params) -> Result<f64> {
    Ok(window_coefficient(l, &p.with_alpha(alpha))?.value())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharPolynomial {
    pub nu: usize,
    /// Descending powers: `coeffs[l]` multiplies `x^{νN−l}`; `coeffs[0] = 1`.
    pub coeffs: Vec<f64>,
    pub params: Params,
    /// Largest |coefficient| beyond degree νN, relative to the largest kept one.
    pub truncation_residue: f64,
}

impl CharPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc * x + c)
    }
}

/// `⟨∏(x − t_l)^ν⟩` as a monic polynomial of degree `νN`.
pub fn char_polynomial(nu: usize, p: &Params) -> Result<CharPolynomial> {
    p.check_structure()?;
    if nu == 0 {
        return Err(Error::InvalidParams("nu must be at least 1".into()));
    }
    let sub = Params { lambda2: nu as f64, alpha: p.lambda2 + 1.0, ..*p };
    let deg = nu * p.n;
    let sol = frobenius(p.n, &sub, deg + 2)?;
    let coeffs: Vec<f64> = sol.coeffs[..=deg].iter().map(|c| c[0]).collect();
    let big = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let extra = sol.coeffs[deg + 1..].iter().fold(0.0f64, |m, c| m.max(c[0].abs()));
    let truncation_residue = extra / big;
    if truncation_residue > 1e-9 {
        return Err(Error::ResonanceUnresolvable {
            k: p.n,
            l: deg + 1,
            detail: format!("series did not terminate at degree {deg} (residue {truncation_residue:e})"),
        });
    }
    Ok(CharPolynomial { nu, coeffs, params: *p, truncation_residue })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Rational;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn uniform_n1() {
        let p = Params::new(1, 0.0, 0.0, 0.7, 1.0);
        for x in [0.1, 0.37, 0.5, 0.8] {
            let v = split_integrals(x, &p, DEFAULT_TOL).unwrap();
            assert!((v[0].value - (1.0 - x)).abs() < 1e-12, "{x} {:?}", v[0]);
            assert!((v[1].value - x).abs() < 1e-12);
            assert!((v[1].derivative - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn uniform_n1_general_alpha() {
        let al = 0.63;
        let p = Params::new(1, 0.0, 0.0, 0.7, al);
        for x in [0.2, 0.45, 0.7] {
            let v = split_integrals(x, &p, DEFAULT_TOL).unwrap();
            assert!(rel(v[1].value, x.powf(al) / al) < 1e-12);
            assert!(rel(v[0].value, (1.0 - x).powf(al) / al) < 1e-12);
        }
    }

    #[test]
    fn beta_n1_against_incomplete_beta_series() {
        // I_1 = ∫_0^x t^a (1−t)^b dt for α = 1
        let (a, b) = (0.37, 1.4);
        let p = Params::new(1, a, b, 0.5, 1.0);
        let x: f64 = 0.3;
        // ∫_0^x t^a (1-t)^b = x^{a+1} Σ_n (−b)_n/n! x^n/(a+1+n)
        let mut s = 0.0;
        let mut term = 1.0;
        for n in 0..200 {
            s += term / (a + 1.0 + n as f64);
            term *= (n as f64 - b) / (n as f64 + 1.0) * x;
        }
        let want = x.powf(a + 1.0) * s;
        assert!(rel(i_q(1, x, &p, DEFAULT_TOL).unwrap().value, want) < 1e-12);
    }

    #[test]
    fn sum_rule() {
        for n in 2..=5 {
            let p = Params::new(n, 0.3, 0.8, 0.45, 1.0);
            let s = selberg_norm(&p).unwrap();
            for x in [0.1, 0.5, 0.9] {
                let t: f64 = split_integrals(x, &p, DEFAULT_TOL).unwrap().iter().map(|e| e.value).sum();
                assert!(rel(t, s) < 1e-10, "n={n} x={x}: {t} vs {s}");
            }
        }
    }

    #[test]
    fn reflection_consistent() {
        let p = Params::new(3, 0.3, 0.8, 0.45, 0.9);
        for x in [0.42, 0.5, 0.58] {
            let a = split_integrals(x, &p, DEFAULT_TOL).unwrap();
            let b = split_integrals_reflected(x, &p, DEFAULT_TOL).unwrap();
            for q in 0..=3 {
                assert!(rel(a[q].value, b[q].value) < 1e-9, "x={x} q={q}");
            }
        }
    }

    #[test]
    fn resonant_params_go_through_limit() {
        // σ₂ − σ₀ = 4
        let half = Rational::new(1, 2).unwrap();
        let p = Params::with_rational_lambda(2, 0.5, 1.5, half, 1.0);
        let v = split_integrals(0.3, &p, DEFAULT_TOL).unwrap();
        assert!(v.iter().all(|e| e.limit));
        let s = selberg_norm(&p).unwrap();
        let t: f64 = v.iter().map(|e| e.value).sum();
        assert!(rel(t, s) < 1e-10);
    }

    #[test]
    fn gap_probabilities_n1() {
        let p = Params::new(1, 0.0, 0.0, 1.3, 0.2);
        assert!((gap_prob(1, 0.3, &p).unwrap() - 0.3).abs() < 1e-12);
        assert!((order_stat_density(0, 0.3, &p).unwrap() - 1.0).abs() < 1e-10);
        let half = Rational::new(1, 2).unwrap();
        let g = gap_probs(0.5, &Params::with_rational_lambda(2, 0.0, 0.0, half, 1.0)).unwrap();
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moment_examples() {
        let p = Params::new(1, 0.0, 0.0, 0.9, 123.0);
        for x in [0.3, 0.7] {
            let m = moment_average(x, 0.5, &p, MomentOptions::default()).unwrap();
            assert!(rel(m.value, x * x / 2.0 + (1.0 - x) * (1.0 - x) / 2.0) < 1e-12);
        }
        assert_eq!(moment_average(0.3, 0.0, &p, MomentOptions::default()).unwrap().value, 1.0);
    }

    #[test]
    fn moment_log_point_needs_opt_in() {
        // α = −λ₁ with l = 0: Γ(λ₁+α) pole
        let p = Params::new(1, -0.4, 0.3, 0.9, 0.0);
        let mu = (0.4 - 1.0) / 2.0;
        let e = moment_average(0.2, mu, &p, MomentOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Pole { .. }));
        assert!(e.to_string().contains("moment_asymptotic_log"));
        let v = moment_average(0.2, mu, &p, MomentOptions { perturb_poles: true, ..Default::default() }).unwrap();
        assert!(v.value.is_finite() && v.value > 0.0);
    }

    #[test]
    fn asymptotic_l0_is_edge_moment() {
        let p = Params::new(3, 0.4, 0.7, 0.6, 1.0);
        let mu = 0.3;
        let a = moment_asymptotic(mu, &p).unwrap();
        assert_eq!(a.l, 0);
        assert_eq!(a.exponent, 0.0);
        let al = 2.0 * mu + 1.0;
        let want = selberg(&SelbergArgs::new(3, 0.4 + al - 1.0, 0.7, 0.6)).unwrap().value()
            / selberg(&SelbergArgs::new(3, 0.4, 0.7, 0.6)).unwrap().value();
        assert!(rel(a.coefficient.value(), want) < 1e-12);
    }

    #[test]
    fn asymptotic_window_boundary() {
        let p = Params::new(2, -0.5, 0.7, 0.6, 1.0);
        // α = −λ₁ = 0.5 → 2μ = −0.5
        assert!(matches!(moment_asymptotic(-0.25, &p), Err(Error::WindowBoundary { .. })));
        let a = moment_asymptotic(-0.3, &p).unwrap();
        assert_eq!(a.l, 1);
    }

    #[test]
    fn log_case_n1() {
        let p = Params::new(1, -0.4, 0.3, 0.9, 0.0);
        let a = moment_asymptotic_log(0, &p).unwrap();
        assert!(a.log_factor);
        assert!((a.alpha - 0.4).abs() < 1e-15);
        let s1 = selberg(&SelbergArgs::new(1, -0.4, 0.3, 0.9)).unwrap().value();
        assert!(rel(a.coefficient.value(), 1.0 / s1) < 1e-12);
        assert!(moment_asymptotic_log(1, &p).is_err());
    }

    #[test]
    fn divergent_window_terms_cancel() {
        let p = Params::new(3, 0.3, 0.7, 0.4, 1.0);
        for l in 0..2 {
            let pin = -2.0 * l as f64 * p.lambda - p.lambda1;
            for d in [1e-6, -1e-6] {
                let a = window_term(l, pin + d, &p).unwrap();
                let b = window_term(l + 1, pin + d, &p).unwrap();
                assert!((a + b).abs() < 1e-4 * a.abs(), "l={l}: {a} {b}");
            }
        }
    }

    #[test]
    fn charpoly_uniform_first_moment() {
        let cp = char_polynomial(1, &Params::new(1, 0.0, 0.0, 1.0, 1.0)).unwrap();
        assert_eq!(cp.degree(), 1);
        assert!((cp.coeffs[0] - 1.0).abs() < 1e-15);
        assert!((cp.coeffs[1] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn charpoly_matches_moment() {
        // 2μ = ν = 2 is even, so |x − t|² = (x − t)²
        let p = Params::new(2, 0.6, 1.1, 0.7, 1.0);
        let cp = char_polynomial(2, &p).unwrap();
        for x in [0.2, 0.6] {
            let m = moment_average(x, 1.0, &p, MomentOptions::default()).unwrap().value;
            assert!(rel(cp.eval(x), m) < 1e-10, "{} {m}", cp.eval(x));
        }
    }

    #[test]
    fn edge_moments_are_selberg_ratios() {
        let p = Params::new(1, 0.0, 0.0, 1.0, 1.0);
        assert!(rel(moment_at_edge(0.0, 0.7, &p).unwrap(), 1.0 / 2.4) < 1e-14);
        let p = Params::new(3, 0.4, 1.2, 0.6, 1.0);
        for (x, near) in [(0.0, 1e-7), (1.0, 1.0 - 1e-7)] {
            let edge = moment_at_edge(x, 0.35, &p).unwrap();
            let inside = moment_average(near, 0.35, &p, MomentOptions::default()).unwrap().value;
            assert!(rel(inside, edge) < 1e-3, "x={x}: {inside} vs {edge}");
        }
        assert!(moment_at_edge(0.5, 0.35, &p).is_err());
    }

    #[test]
    fn edge_densities() {
        let p = Params::new(1, 0.0, 0.0, 1.0, 1.0);
        assert_eq!(order_stat_densities_at_edge(0.0, &p).unwrap(), vec![1.0]);
        let p = Params::new(3, 0.0, -0.5, 0.8, 1.0);
        let at0 = order_stat_densities_at_edge(0.0, &p).unwrap();
        let near = order_stat_densities(1e-9, &p).unwrap();
        assert!(rel(near[0], at0[0]) < 1e-6, "{near:?} vs {at0:?}");
        assert_eq!(&at0[1..], &[0.0, 0.0]);
        let at1 = order_stat_densities_at_edge(1.0, &p).unwrap();
        assert_eq!(at1, vec![0.0, 0.0, f64::INFINITY]);
    }

    #[test]
    fn median_density_is_beta() {
        let p = Params::with_rational_lambda(5, 1.0, 1.0, Rational::new(1, 3).unwrap(), 1.0);
        let b88 = libm::tgamma(8.0).powi(2) / libm::tgamma(16.0);
        for x in [0.1, 0.3, 0.5, 0.8] {
            let d = order_stat_density(2, x, &p).unwrap();
            let want = x.powi(7) * (1.0 - x).powi(7) / b88;
            assert!((d - want).abs() < 1e-6, "x={x}: {d} vs {want}");
        }
    }
}
