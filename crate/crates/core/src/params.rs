//! Parameter tuple `(N, λ₁, λ₂, λ, α)`, validity checks, indicial exponents
//! and the scalar coefficients of the differential-difference system.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational `num/den`, `den > 0`, reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidParams("rational with zero denominator".into()));
        }
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Ok(Rational { num: s * num / g, den: s * den / g })
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_integer(self) -> bool {
        self.den == 1
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `"p/q"` or a plain integer.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("not an exact rational: {s:?}"));
        let s = s.trim();
        match s.split_once('/') {
            Some((a, b)) => {
                let a: i64 = a.trim().parse().map_err(|_| bad())?;
                let b: i64 = b.trim().parse().map_err(|_| bad())?;
                Rational::new(a, b)
            }
            None => {
                let a: i64 = s.parse().map_err(|_| bad())?;
                Rational::new(a, 1)
            }
        }
    }
}

/// Sign + natural-log magnitude. Zero is `sign == 0`, `logmag == -inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    pub sign: i8,
    pub logmag: f64,
}

impl LogValue {
    pub const ONE: LogValue = LogValue { sign: 1, logmag: 0.0 };
    pub const ZERO: LogValue = LogValue { sign: 0, logmag: f64::NEG_INFINITY };

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            LogValue::ZERO
        } else {
            LogValue { sign: if v > 0.0 { 1 } else { -1 }, logmag: v.abs().ln() }
        }
    }

    pub fn new(sign: i8, logmag: f64) -> Self {
        if sign == 0 {
            LogValue::ZERO
        } else {
            LogValue { sign: sign.signum(), logmag }
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// Plain value; may overflow to ±inf or underflow to 0.
    pub fn value(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.logmag.exp()
        }
    }

    pub fn recip(self) -> Self {
        assert!(self.sign != 0, "reciprocal of zero LogValue");
        LogValue { sign: self.sign, logmag: -self.logmag }
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return LogValue::ONE;
        }
        if self.sign == 0 {
            return LogValue::ZERO;
        }
        let sign = if self.sign < 0 && n % 2 != 0 { -1 } else { 1 };
        LogValue { sign, logmag: self.logmag * f64::from(n) }
    }
}

impl std::ops::Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        if self.sign == 0 || rhs.sign == 0 {
            LogValue::ZERO
        } else {
            LogValue { sign: self.sign * rhs.sign, logmag: self.logmag + rhs.logmag }
        }
    }
}

impl std::ops::Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        self * rhs.recip()
    }
}

impl std::ops::MulAssign for LogValue {
    fn mul_assign(&mut self, rhs: LogValue) {
        *self = *self * rhs;
    }
}

impl std::ops::DivAssign for LogValue {
    fn div_assign(&mut self, rhs: LogValue) {
        *self = *self / rhs;
    }
}

/// The parameter tuple. `lambda_rational`, when present, asserts `lambda == r/s`
/// exactly and selects the exact-λ branches of the connection matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub lambda_rational: Option<Rational>,
}

/// Which of the integrability conditions hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Validity {
    pub n_ok: bool,
    pub lambda1_ok: bool,
    pub lambda2_ok: bool,
    pub lambda_ok: bool,
    pub alpha_ok: bool,
}

impl Validity {
    /// Strictly inside the integrability domain.
    pub fn all(&self) -> bool {
        self.n_ok && self.lambda1_ok && self.lambda2_ok && self.lambda_ok && self.alpha_ok
    }

    /// Everything but the α condition holds: the split integrals are only
    /// defined by analytic continuation in α.
    pub fn continuation_regime(&self) -> bool {
        self.n_ok && self.lambda1_ok && self.lambda2_ok && self.lambda_ok && !self.alpha_ok
    }
}

/// `(A_p, B_p, D_p, E_p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceCoeffs {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub e: f64,
}

impl Params {
    pub fn new(n: usize, lambda1: f64, lambda2: f64, lambda: f64, alpha: f64) -> Self {
        Params { n, lambda1, lambda2, lambda, alpha, lambda_rational: None }
    }

    /// Same as [`Params::new`] with λ given exactly as `r/s`.
    pub fn with_rational_lambda(n: usize, lambda1: f64, lambda2: f64, lambda: Rational, alpha: f64) -> Self {
        Params { n, lambda1, lambda2, lambda: lambda.to_f64(), alpha, lambda_rational: Some(lambda) }
    }

    pub fn validate(&self) -> Validity {
        Validity {
            n_ok: self.n >= 1,
            lambda1_ok: self.lambda1 > -1.0,
            lambda2_ok: self.lambda2 > -1.0,
            lambda_ok: self.lambda > 0.0,
            alpha_ok: self.alpha > 0.0,
        }
    }

    /// Structural checks every computation needs: `N ≥ 1`, finite reals,
    /// rational λ consistent with the float.
    pub fn check_structure(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("N must be at least 1".into()));
        }
        for (name, v) in
            [("lambda1", self.lambda1), ("lambda2", self.lambda2), ("lambda", self.lambda), ("alpha", self.alpha)]
        {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        if let Some(r) = self.lambda_rational {
            if r.to_f64() != self.lambda {
                return Err(Error::InvalidParams(format!("lambda={} disagrees with exact rational {r}", self.lambda)));
            }
        }
        Ok(())
    }

    /// σ_k = k(λ₁ + λ(k−1) + α).
    pub fn sigma(&self, k: usize) -> f64 {
        let kf = k as f64;
        kf * (self.lambda1 + self.lambda * (kf - 1.0) + self.alpha)
    }

    pub fn sigmas(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.sigma(k)).collect()
    }

    pub fn recurrence_coeffs(&self, p: usize) -> RecurrenceCoeffs {
        let n = self.n as f64;
        let pf = p as f64;
        let (l1, l2, l, al) = (self.lambda1, self.lambda2, self.lambda, self.alpha);
        RecurrenceCoeffs {
            a: (n - pf) * (l1 + l2 + 2.0 * l * (n - pf - 1.0) + 2.0 * al),
            b: (pf - n) * (l1 + l * (n - pf - 1.0) + al),
            d: pf * (l * (n - pf) + al),
            e: l1 + l2 + l * (2.0 * n - pf - 2.0) + al + 1.0,
        }
    }

    /// λ₁ ↔ λ₂.
    pub fn swapped(&self) -> Self {
        Params { lambda1: self.lambda2, lambda2: self.lambda1, ..*self }
    }

    pub fn with_lambda1(&self, lambda1: f64) -> Self {
        Params { lambda1, ..*self }
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Params { alpha, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validity_reports() {
        assert!(Params::new(2, 0.0, 0.0, 1.0, 1.0).validate().all());
        let v = Params::new(1, -2.0, 0.0, 1.0, 1.0).validate();
        assert!(!v.lambda1_ok && v.lambda2_ok);
        let v = Params::new(3, 0.5, 0.5, 0.5, -0.75).validate();
        assert!(!v.alpha_ok && v.continuation_regime());
    }

    #[test]
    fn sigma_examples() {
        let p = Params::new(3, 0.3, 0.0, 0.9, 0.7);
        assert_eq!(p.sigma(0), 0.0);
        assert!((p.sigma(1) - 1.0).abs() < 1e-15);
        let p = Params::new(3, 1.0, 0.0, 0.5, 1.0);
        assert_eq!(p.sigma(2), 5.0);
    }

    #[test]
    fn recurrence_examples() {
        let p = Params::new(1, 0.0, 0.0, 1.0, 1.0);
        let c = p.recurrence_coeffs(0);
        assert_eq!((c.a, c.b, c.d, c.e), (2.0, -1.0, 0.0, 2.0));
        let c = p.recurrence_coeffs(1);
        assert_eq!((c.a, c.b), (0.0, 0.0));
        let p = Params::new(2, 1.0, 1.0, 0.5, 1.0);
        assert_eq!(p.recurrence_coeffs(1).d, 1.5);
    }

    #[test]
    fn rational_parsing() {
        let r: Rational = "2/6".parse().unwrap();
        assert_eq!(r, Rational { num: 1, den: 3 });
        let r: Rational = "-3/-4".parse().unwrap();
        assert_eq!(r, Rational { num: 3, den: 4 });
        assert_eq!("5".parse::<Rational>().unwrap(), Rational { num: 5, den: 1 });
        assert!("1/0".parse::<Rational>().is_err());
        assert!("0.3".parse::<Rational>().is_err());
    }

    #[test]
    fn logvalue_arithmetic() {
        let a = LogValue::from_f64(-2.0);
        let b = LogValue::from_f64(8.0);
        assert!(((a * b).value() + 16.0).abs() < 1e-12);
        assert!(((b / a).value() + 4.0).abs() < 1e-12);
        assert_eq!((a * LogValue::ZERO).sign, 0);
        assert_eq!(a.powi(3).sign, -1);
        assert!((a.powi(2).value() - 4.0).abs() < 1e-12);
        assert_eq!(LogValue::ZERO.logmag, f64::NEG_INFINITY);
    }

    proptest::proptest! {
        #[test]
        fn sigma_difference_identity(l1 in -0.9f64..3.0, l in 0.01f64..3.0, al in 0.01f64..3.0,
                                     k in 0usize..8, j in 0usize..8) {
            let p = Params::new(8, l1, 0.0, l, al);
            let lhs = p.sigma(k) - p.sigma(j);
            let rhs = (k as f64 - j as f64) * (l1 + al + (k + j) as f64 * l - l);
            proptest::prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn sigma_increasing_inside_domain(l1 in -0.99f64..3.0, l in 0.001f64..3.0, al in 0.001f64..3.0) {
            // σ₁ − σ₀ = λ₁ + α, which the integrability conditions alone do not make positive
            proptest::prop_assume!(l1 + al > 0.0);
            let p = Params::new(6, l1, 0.0, l, al);
            for k in 0..6 {
                proptest::prop_assert!(p.sigma(k + 1) > p.sigma(k));
            }
        }
    }
}
