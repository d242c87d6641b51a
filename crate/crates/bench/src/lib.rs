//! Benchmark-only crate; see `benches/`.
//!
//! Parameter sets shared by the benchmarks.

use selberg_fuchs::{Params, Rational};

/// Generic λ, all four kinds of exponent distinct.
pub fn generic(n: usize) -> Params {
    Params::new(n, 0.37, 1.21, 0.61, 1.0)
}

fn third() -> Rational {
    Rational::new(1, 3).expect("nonzero denominator")
}

/// Rational λ: the exact connection branch and resonant series.
pub fn rational(n: usize) -> Params {
    Params::with_rational_lambda(n, 0.37, 1.21, third(), 1.0)
}

/// λ = 1/3, λ₁ = λ₂ = 1: the connection matrix has a pole and the split
/// integrals go through the λ₁ limit.
pub fn degenerate(n: usize) -> Params {
    Params::with_rational_lambda(n, 1.0, 1.0, third(), 1.0)
}
