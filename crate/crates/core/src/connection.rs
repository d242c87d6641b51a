//! Connection matrix between the Frobenius basis at `x = 0` and the split
//! integrals, and the Selberg-product weights of each basis element.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{LogValue, Params, Rational};
use crate::selberg::{selberg, SelbergArgs};
use crate::special::{binomial, ln_binomial, log_sin_pi, log_sin_pi_denominator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Generic,
    IntegerLambda,
    RationalLambda,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectionMatrix {
    pub n: usize,
    /// `entries[(k, q)] = c_{k,q}`.
    #[serde(serialize_with = "ser_matrix")]
    pub entries: DMatrix<f64>,
    pub branch: Branch,
}

fn ser_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

/// The exact value of λ when known: the declared rational, or a float that
/// is exactly an integer.
pub fn exact_lambda(p: &Params) -> Option<Rational> {
    p.lambda_rational.or_else(|| {
        let l = p.lambda;
        (l.fract() == 0.0 && l.abs() < 1e15).then(|| Rational::new(l as i64, 1).ok()).flatten()
    })
}

pub fn branch_of(p: &Params) -> Branch {
    match exact_lambda(p) {
        Some(r) if r.is_integer() => Branch::IntegerLambda,
        Some(_) => Branch::RationalLambda,
        None => Branch::Generic,
    }
}

fn relabel(e: Error, k: usize, q: usize) -> Error {
    match e {
        Error::Pole { context, detail } => Error::Pole { context: format!("{context} at (k={k}, q={q})"), detail },
        other => other,
    }
}

/// The sine-ratio product for generic λ.
fn c_generic(k: usize, q: usize, l1: f64, alpha: f64, lam: f64) -> Result<LogValue> {
    let mut acc = LogValue::ONE;
    let kf = k as f64;
    for j in 1..=(k - q) {
        let jf = j as f64;
        acc *= log_sin_pi((kf + 1.0 - jf) * lam);
        acc *= log_sin_pi(l1 + (kf - jf) * lam);
        acc /= log_sin_pi_denominator(jf * lam, "connection coefficient").map_err(|_| {
            Error::pole(
                "connection coefficient",
                format!("sin(pi*{j}*lambda) vanishes at lambda={lam}; supply lambda as an exact rational p/q"),
            )
        })?;
        acc /= log_sin_pi_denominator(l1 + alpha + (2.0 * kf - jf - 1.0) * lam, "connection coefficient")?;
    }
    Ok(acc)
}

/// Integer λ: `binom(k,q)·(sin πλ₁ / sin π(λ₁+α))^{k−q}`.
fn c_integer(k: usize, q: usize, l1: f64, alpha: f64) -> Result<LogValue> {
    let ratio = log_sin_pi(l1) / log_sin_pi_denominator(l1 + alpha, "connection coefficient")?;
    Ok(ln_binomial(k, q) * ratio.powi((k - q) as i32))
}

/// λ = r/s, s ≥ 2: split k, q into quotient and residue mod s. The residue
/// part is the generic product at λ = r/s (never touches a vanishing
/// `sin πjλ` since `j < s`), the quotient part the integer-λ form at
/// `(sλ₁, sα)`, with sign `(−1)^{(s−1)(⌊k/s⌋−⌊q/s⌋)}`.
fn c_rational(k: usize, q: usize, l1: f64, alpha: f64, r: Rational) -> Result<LogValue> {
    let s = r.den as usize;
    let (km, qm) = (k % s, q % s);
    let (kd, qd) = (k / s, q / s);
    if km < qm {
        return Ok(LogValue::ZERO);
    }
    let a = c_generic(km, qm, l1, alpha, r.to_f64())?;
    let b = c_integer(kd, qd, s as f64 * l1, s as f64 * alpha)?;
    let sign = if (s - 1) * (kd - qd) % 2 == 1 { LogValue::from_f64(-1.0) } else { LogValue::ONE };
    Ok(a * b * sign)
}

fn c_log(k: usize, q: usize, p: &Params) -> Result<LogValue> {
    if k < q {
        return Ok(LogValue::ZERO);
    }
    if k == q {
        return Ok(LogValue::ONE);
    }
    let (l1, alpha) = (p.lambda1, p.alpha);
    match exact_lambda(p) {
        Some(r) if r.is_integer() => c_integer(k, q, l1, alpha),
        Some(r) => c_rational(k, q, l1, alpha, r),
        None => c_generic(k, q, l1, alpha, p.lambda),
    }
    .map_err(|e| relabel(e, k, q))
}

/// `c_{k,q}`.
pub fn c_entry(k: usize, q: usize, p: &Params) -> Result<f64> {
    Ok(c_log(k, q, p)?.value())
}

pub fn connection_matrix(p: &Params) -> Result<ConnectionMatrix> {
    p.check_structure()?;
    let dim = p.n + 1;
    let mut entries = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        for q in 0..=k {
            entries[(k, q)] = c_entry(k, q, p)?;
        }
    }
    Ok(ConnectionMatrix { n: p.n, entries, branch: branch_of(p) })
}

/// `binom(N,k)·S_k(λ₁, α−1, λ)·S_{N−k}(λ₁+α−1+2kλ, λ₂, λ)`: the weight of
/// `(w_k)_0` before the connection coefficient.
pub fn leading_weight(k: usize, p: &Params) -> Result<LogValue> {
    let n = p.n;
    let a = SelbergArgs::new(k, p.lambda1, p.alpha - 1.0, p.lambda);
    let b = SelbergArgs::new(n - k, p.lambda1 + p.alpha - 1.0 + 2.0 * k as f64 * p.lambda, p.lambda2, p.lambda);
    Ok(LogValue::from_f64(binomial(n, k)) * selberg(&a)? * selberg(&b)?)
}

/// Weight of `(w_k)_0` in the expansion of `I_q`.
pub fn leading_coeff(k: usize, q: usize, p: &Params) -> Result<LogValue> {
    let c = c_log(k, q, p)?;
    if c.is_zero() {
        return Ok(LogValue::ZERO);
    }
    Ok(leading_weight(k, p)? * c)
}
