//! Closed forms: the Selberg integral, the Dotsenko–Fateev variant with
//! variables split between `[0,1]` and `[1,∞)`, and the reduced product with
//! the leading `Γ(l1+1)` removed.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::params::LogValue;
use crate::special::{dist_to_integer, ln_gamma, log_sin_pi, log_sin_pi_denominator, POLE_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelbergArgs {
    pub n: usize,
    pub l1: f64,
    pub l2: f64,
    pub l: f64,
}

impl SelbergArgs {
    pub fn new(n: usize, l1: f64, l2: f64, l: f64) -> Self {
        SelbergArgs { n, l1, l2, l }
    }
}

/// `1/Γ(x)` in log space; entire, so poles of Γ give an exact zero.
fn ln_rgamma(x: f64) -> Result<LogValue> {
    if x <= 0.0 && dist_to_integer(x) < POLE_TOL {
        return Ok(LogValue::ZERO);
    }
    Ok(ln_gamma(x)?.recip())
}

fn product(args: &SelbergArgs, skip_first: bool) -> Result<LogValue> {
    let SelbergArgs { n, l1, l2, l } = *args;
    let mut acc = LogValue::ONE;
    let g1l = ln_rgamma(1.0 + l)?;
    for j in 0..n {
        let jf = j as f64;
        if !(skip_first && j == 0) {
            acc *= ln_gamma(l1 + 1.0 + jf * l)?;
        }
        acc *= ln_gamma(l2 + 1.0 + jf * l)?;
        acc *= ln_gamma(1.0 + (jf + 1.0) * l)?;
        acc *= ln_rgamma(l1 + l2 + 2.0 + (n as f64 + jf - 1.0) * l)?;
        acc *= g1l;
    }
    Ok(acc)
}

/// `S_n(l1, l2, l)` as a Γ-product.
pub fn selberg(args: &SelbergArgs) -> Result<LogValue> {
    product(args, false)
}

/// `S_n(l1, l2, l) / Γ(l1 + 1)`, finite at `l1 = -1`.
pub fn selberg_reduced(args: &SelbergArgs) -> Result<LogValue> {
    product(args, true)
}

/// One step of the Dotsenko–Fateev recurrence:
/// `S_{(p, n-p)} / S_{(p-1, n-p+1)}` for `1 ≤ p ≤ n`.
pub fn df_step_ratio(p: usize, args: &SelbergArgs) -> Result<LogValue> {
    let SelbergArgs { n, l1, l2, l } = *args;
    assert!(p >= 1 && p <= n, "step index out of range");
    let (nf, pf) = (n as f64, p as f64);
    let ctx = "Dotsenko-Fateev recurrence";
    let mut r = LogValue::from_f64(pf / (nf - pf + 1.0));
    r *= log_sin_pi((nf - pf + 1.0) * l);
    r *= log_sin_pi(l1 + l2 + 2.0 + (nf + pf - 2.0) * l);
    r /= log_sin_pi_denominator(pf * l, ctx)?;
    r /= log_sin_pi_denominator(l1 + 1.0 + (pf - 1.0) * l, ctx)?;
    Ok(r)
}

/// `S_{(p, n-p)}(l1, l2, l)`: `p` variables on `[0,1]`, `n-p` on `[1,∞)`,
/// continued analytically through the sine-ratio product.
pub fn selberg_df(p: usize, args: &SelbergArgs) -> Result<LogValue> {
    let SelbergArgs { n, l1, l2, l } = *args;
    assert!(p <= n, "p must not exceed n");
    let nf = n as f64;
    let ctx = "Dotsenko-Fateev product";
    let mut acc = selberg(args)?;
    for j in 1..=(n - p) {
        let jf = j as f64;
        acc *= LogValue::from_f64(jf / (nf - jf + 1.0));
        acc *= log_sin_pi((nf - jf + 1.0) * l);
        acc *= log_sin_pi(l1 + 1.0 + (nf - jf) * l);
        acc /= log_sin_pi_denominator(jf * l, ctx)?;
        acc /= log_sin_pi_denominator(l1 + l2 + 2.0 + (2.0 * nf - jf - 1.0) * l, ctx)?;
    }
    Ok(acc)
}
