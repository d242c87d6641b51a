//! Log-Γ with sign, `sin(πx)` with exact argument reduction, binomials.

use crate::error::{Error, Result};
use crate::params::LogValue;

/// Absolute distance of a Γ/sine argument to the singular set below which
/// we report a pole.
pub const POLE_TOL: f64 = 1e-12;

pub fn dist_to_integer(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// `ln|Γ(x)|` and the sign of Γ(x). Negative arguments go through the
/// reflection formula inside `lgamma_r`.
pub fn ln_gamma(x: f64) -> Result<LogValue> {
    if x <= 0.0 && dist_to_integer(x) < POLE_TOL {
        return Err(Error::pole("gamma", format!("argument {x} is a nonpositive integer")));
    }
    let (lg, sign) = libm::lgamma_r(x);
    Ok(LogValue::new(if sign < 0 { -1 } else { 1 }, lg))
}

/// `sin(πx)`, reducing `x` modulo 2 exactly before multiplying by π, so
/// zeros at integers are hit exactly and nearby values keep full
/// relative accuracy.
pub fn sin_pi(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    // fmod is exact.
    let mut r = x % 2.0;
    if r <= -1.0 {
        r += 2.0;
    } else if r > 1.0 {
        r -= 2.0;
    }
    // r in (-1, 1]; sin(πr) = sin(π(1-r)) for r > 1/2.
    let (sgn, r) = if r < 0.0 { (-1.0, -r) } else { (1.0, r) };
    let r = if r > 0.5 { 1.0 - r } else { r };
    if r == 0.0 {
        return 0.0;
    }
    sgn * (std::f64::consts::PI * r).sin()
}

/// `cos(πx)` by the same reduction.
pub fn cos_pi(x: f64) -> f64 {
    sin_pi(x + 0.5)
}

/// `sin(πx)` as a [`LogValue`]; exact zero at integers (numerator use).
pub fn log_sin_pi(x: f64) -> LogValue {
    if dist_to_integer(x) < POLE_TOL {
        LogValue::ZERO
    } else {
        LogValue::from_f64(sin_pi(x))
    }
}

/// `sin(πx)` as a denominator factor: errors near integers.
pub fn log_sin_pi_denominator(x: f64, context: &str) -> Result<LogValue> {
    if dist_to_integer(x) < POLE_TOL {
        Err(Error::pole(context, format!("sin(pi*{x}) vanishes in a denominator")))
    } else {
        Ok(LogValue::from_f64(sin_pi(x)))
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r.round()
}

pub fn ln_binomial(n: usize, k: usize) -> LogValue {
    if k > n {
        return LogValue::ZERO;
    }
    let lf = |m: usize| libm::lgamma_r(m as f64 + 1.0).0;
    LogValue::new(1, lf(n) - lf(k) - lf(n - k))
}
