//! Closed forms and series against the brute-force oracle.

use nalgebra::DMatrix;
use selberg_fuchs::assembly::{self, char_polynomial, i_q, moment_asymptotic, moment_average, MomentOptions};
use selberg_fuchs::fuchsian::build_matrices;
use selberg_fuchs::jacobi::jacobi_zeros_unit;
use selberg_fuchs::oracle::{self, Method};
use selberg_fuchs::roots::poly_zeros_report;
use selberg_fuchs::special::binomial;
use selberg_fuchs::{Params, Rational};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// The state vector of the system: `J_{p,q}(x) / (binom(N,p)(x−1)^p)`.
fn state(x: f64, p: &Params) -> DMatrix<f64> {
    let d = p.n + 1;
    DMatrix::from_fn(d, d, |pp, q| {
        let j = oracle::quad_jpq(pp, q, x, p, 1e-12).unwrap().value;
        j / (binomial(p.n, pp) * (x - 1.0).powi(pp as i32))
    })
}

#[test]
fn quadrature_matrix_solves_the_ode() {
    let p = Params::with_rational_lambda(2, 0.5, 1.5, Rational::new(1, 2).unwrap(), 1.0);
    let m = build_matrices(&p);
    let (yp, ym) = (m.yplus(), m.yminus());
    let (x, h) = (0.3, 1e-4);
    let dh = (state(x + h, &p) - state(x - h, &p)) / (2.0 * h);
    let rhs = (&yp / x + &ym / (1.0 - x)) * state(x, &p);
    let r = (&dh - rhs).amax() / dh.amax();
    assert!(r <= 1e-5, "residual {r:e}");
}

#[test]
fn split_integral_example() {
    let p = Params::with_rational_lambda(2, 0.5, 1.5, Rational::new(1, 2).unwrap(), 1.0);
    let o = oracle::quad_iq(1, 0.3, &p, 1e-12).unwrap();
    assert_eq!(o.method, Method::TanhSinhNested);
    assert!(o.error_estimate > 0.0);
    let s = i_q(1, 0.3, &p, assembly::DEFAULT_TOL).unwrap();
    assert!(rel(s.value, o.value) < 1e-8);
}

#[test]
fn gap_probabilities_against_quadrature() {
    let half = Rational::new(1, 2).unwrap();
    let p = Params::with_rational_lambda(2, 0.0, 0.0, half, 1.0);
    let s = oracle::quad_selberg(&p, 1e-12).unwrap().value;
    assert!(rel(s, 1.0 / 3.0) < 1e-10);
    let g = assembly::gap_probs(0.5, &p).unwrap();
    for (n, gn) in g.iter().enumerate() {
        let o = oracle::quad_iq(n, 0.5, &p, 1e-12).unwrap().value / s;
        assert!((gn - o).abs() < 1e-8, "n={n}: {gn} vs {o}");
    }
}

#[test]
fn singular_moment_against_quadrature() {
    let p = Params::new(1, 0.0, 0.0, 1.0, 1.0);
    let mu = -0.25;
    let m = moment_average(0.3, mu, &p, MomentOptions::default()).unwrap().value;
    let o = oracle::quad_moment(0.3, mu, &p, 1e-12).unwrap().value;
    assert!(rel(m, o) < 1e-7, "{m} vs {o}");
}

#[test]
fn moment_n2_against_quadrature_inside_unit_interval() {
    let p = Params::new(2, 0.3, 0.9, 0.6, 1.0);
    for (x, mu) in [(0.25, 0.35), (0.6, -0.2), (0.45, 1.3)] {
        let m = moment_average(x, mu, &p, MomentOptions::default()).unwrap().value;
        let o = oracle::quad_moment(x, mu, &p, 1e-12).unwrap().value;
        assert!(rel(m, o) < 1e-8, "x={x} mu={mu}: {m} vs {o}");
    }
}

#[test]
fn polynomial_example_at_one_and_a_half() {
    let p = Params::new(2, 1.0, 1.0, 1.0, 1.0);
    let cp = char_polynomial(2, &p).unwrap();
    let o = oracle::quad_moment(1.5, 1.0, &p, 1e-12).unwrap().value;
    assert!(rel(cp.eval(1.5), o) < 1e-8);
}

#[test]
fn asymptotic_slope_example() {
    // l = 0 window; the correction x^{λ₁+α} = x^{0.6} carries a large
    // coefficient here, so the power law is only reached well below 1e-4.
    let p = Params::new(1, 0.5, 0.5, 0.7, 0.1);
    let mu = -0.45;
    let a = moment_asymptotic(mu, &p).unwrap();
    assert_eq!(a.l, 0);
    let m = |x: f64| oracle::quad_moment(x, mu, &p, 1e-11).unwrap().value;
    let slope = |x1: f64, x2: f64| (m(x1) / m(x2)).ln() / (x1 / x2).ln();
    assert!((slope(1e-3, 1e-4) - 0.068).abs() < 1e-3);
    assert!((slope(1e-8, 1e-10) - a.exponent).abs() < 1e-2);
    assert!(rel(a.eval(1e-10), m(1e-10)) < 1e-3);
}

#[test]
fn monte_carlo_agrees_and_is_reproducible() {
    let p = Params::with_rational_lambda(3, 1.0, 1.0, Rational::new(1, 2).unwrap(), 1.0);
    let a = oracle::mc_iq(1, 0.4, &p, 200_000, 9).unwrap();
    let b = oracle::mc_iq(1, 0.4, &p, 200_000, 9).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.seed, Some(9));
    let s = i_q(1, 0.4, &p, assembly::DEFAULT_TOL).unwrap().value;
    assert!((a.value - s).abs() < 4.0 * a.error_estimate, "{} ± {} vs {s}", a.value, a.error_estimate);
}

#[test]
fn monte_carlo_error_halves_with_four_times_the_samples() {
    let p = Params::new(2, 0.4, 0.2, 0.8, 1.0);
    let a = oracle::mc_selberg(&p, 100_000, 3).unwrap();
    let b = oracle::mc_selberg(&p, 400_000, 3).unwrap();
    let ratio = a.error_estimate / b.error_estimate;
    assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
}

/// Largest distance from a root to the nearest Jacobi zero, in units of the
/// smallest zero spacing.
fn cluster_spread(lam: i64) -> f64 {
    let (n, nu, a) = (3, 3, 2.0);
    let p = Params::with_rational_lambda(n, a * lam as f64, a * lam as f64, Rational::new(lam, 1).unwrap(), 1.0);
    let roots = poly_zeros_report(&char_polynomial(nu, &p).unwrap()).unwrap().roots;
    let j = jacobi_zeros_unit(n, a - 1.0, a - 1.0).unwrap();
    roots.iter().map(|z| j.iter().map(|&c| (z - c).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
}

#[test]
fn clusters_tighten_as_lambda_grows() {
    let wide = cluster_spread(5);
    let tight = cluster_spread(50);
    assert!(tight < 0.5 * wide, "{tight} vs {wide}");
    assert!(tight < 0.05);
}
