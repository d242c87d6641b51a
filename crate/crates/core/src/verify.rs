//! The built-in acceptance suite: eleven cross-checks of the closed forms
//! and series against the oracle and against each other. Shared by the
//! `verify` command of the CLI and the `acceptance` test target.
//!
//! Random parameter draws come from fixed seeds, so a run is reproducible.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::{self, char_polynomial, i_q, order_stat_density, split_integrals};
use crate::error::Result;
use crate::fuchsian::{all_solutions_for_x, ode_residual};
use crate::jacobi::{aomoto_parameters, aomoto_parameters_literal, jacobi_zeros_unit};
use crate::monodromy::{monodromy_triple, spectrum_residual};
use crate::oracle;
use crate::params::{Params, Rational};
use crate::roots::poly_zeros_report;
use crate::selberg::{selberg, SelbergArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    /// Fewer random draws; same tolerances.
    Quick,
    Full,
}

impl Level {
    fn draws(self, full: usize) -> usize {
        match self {
            Level::Quick => full.div_ceil(4).max(1),
            Level::Full => full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

pub const CHECK_NAMES: [&str; 11] = [
    "closed-form Selberg vs oracle",
    "ODE self-consistency",
    "series vs oracle",
    "sum rule",
    "order-statistic closed form at lambda=1/3",
    "reflection symmetry of densities",
    "first-moment zeros vs Jacobi",
    "polynomial vs oracle",
    "monodromy",
    "small-x asymptotics",
    "zeros in the crystallising regime",
];

/// Worst error against a tolerance, with context for the report.
struct Tally {
    worst: f64,
    tol: f64,
    count: usize,
    at: String,
}

impl Tally {
    fn new(tol: f64) -> Self {
        Tally { worst: 0.0, tol, count: 0, at: String::new() }
    }

    fn add(&mut self, err: f64, at: impl FnOnce() -> String) {
        self.count += 1;
        // NaN counts as the worst possible error
        if !(err <= self.worst) {
            self.worst = if err.is_nan() { f64::INFINITY } else { err };
            self.at = at();
        }
    }

    fn ok(&self) -> bool {
        self.worst <= self.tol
    }

    fn line(&self, what: &str) -> String {
        format!("{what} {:.2e} (tol {:.0e}, {} cases{})", self.worst, self.tol, self.count, at_suffix(&self.at))
    }
}

fn at_suffix(at: &str) -> String {
    if at.is_empty() {
        String::new()
    } else {
        format!("; worst at {at}")
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn rng_for(id: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5e1b_e26 ^ (id as u64) << 32)
}

fn short(p: &Params) -> String {
    format!("N={} l1={:.4} l2={:.4} lam={:.4} alpha={:.4}", p.n, p.lambda1, p.lambda2, p.lambda, p.alpha)
}

fn draw(rng: &mut ChaCha8Rng, n: usize, l12: (f64, f64), lam: (f64, f64), alpha: (f64, f64)) -> Params {
    Params::new(
        n,
        rng.gen_range(l12.0..l12.1),
        rng.gen_range(l12.0..l12.1),
        rng.gen_range(lam.0..lam.1),
        rng.gen_range(alpha.0..alpha.1),
    )
}

/// As [`draw`] with `α = 1`.
fn draw1(rng: &mut ChaCha8Rng, n: usize, l12: (f64, f64), lam: (f64, f64)) -> Params {
    Params::new(n, rng.gen_range(l12.0..l12.1), rng.gen_range(l12.0..l12.1), rng.gen_range(lam.0..lam.1), 1.0)
}

type Checked = Result<(bool, String)>;

fn check_selberg(level: Level) -> Checked {
    let mut rng = rng_for(1);
    let mut quad = Tally::new(1e-8);
    let mut z = Tally::new(3.0);
    for _ in 0..level.draws(20) {
        let base = draw1(&mut rng, 1, (-0.5, 2.0), (0.1, 2.0));
        for n in 1..=3 {
            let p = Params { n, ..base };
            let exact = selberg(&SelbergArgs::new(n, p.lambda1, p.lambda2, p.lambda))?.value();
            if n <= 2 {
                let r = oracle::quad_selberg(&p, 1e-11)?;
                quad.add(rel(exact, r.value), || short(&p));
            } else {
                let r = oracle::mc_selberg(&p, oracle::DEFAULT_SAMPLES, 17)?;
                z.add((exact - r.value).abs() / r.error_estimate, || short(&p));
            }
        }
    }
    Ok((quad.ok() && z.ok(), format!("n<=2 quadrature: {}; n=3 Monte Carlo: {}", quad.line("rel err"), z.line("|z|"))))
}

fn check_ode(level: Level) -> Checked {
    let mut rng = rng_for(2);
    let mut t = Tally::new(1e-9);
    let mut sets = 0;
    while sets < level.draws(10) {
        let n = rng.gen_range(1..=5);
        let p = draw(&mut rng, n, (-0.5, 2.0), (0.1, 2.0), (0.2, 2.0));
        let mut skipped = false;
        for x in [0.1, 0.3] {
            let sols = all_solutions_for_x(&p, x, 1e-14)?;
            if sols.iter().any(|s| s.resonant) {
                skipped = true;
                break;
            }
            t.add(ode_residual(&sols, &p, x), || format!("{} x={x}", short(&p)));
        }
        if !skipped {
            sets += 1;
        }
    }
    Ok((t.ok(), t.line("max residual")))
}

fn check_series(level: Level) -> Checked {
    let mut rng = rng_for(3);
    let mut t = Tally::new(1e-8);
    for _ in 0..level.draws(10) {
        let p = draw(&mut rng, 2, (-0.5, 1.5), (0.2, 1.5), (0.5, 2.0));
        for x in [0.2, 0.3, 0.4] {
            for q in 0..=2 {
                let s = i_q(q, x, &p, assembly::DEFAULT_TOL)?.value;
                let o = oracle::quad_iq(q, x, &p, 1e-11)?.value;
                t.add(rel(s, o), || format!("{} q={q} x={x}", short(&p)));
            }
        }
    }
    Ok((t.ok(), t.line("rel err")))
}

fn check_sum_rule(level: Level) -> Checked {
    let mut rng = rng_for(4);
    let mut t = Tally::new(1e-10);
    let reps = level.draws(2);
    for n in 2..=6 {
        for _ in 0..reps {
            let p = draw1(&mut rng, n, (-0.5, 2.0), (0.1, 2.0));
            let s = selberg(&SelbergArgs::new(n, p.lambda1, p.lambda2, p.lambda))?.value();
            for i in 1..=9 {
                let x = i as f64 / 10.0;
                let sum: f64 = split_integrals(x, &p, assembly::DEFAULT_TOL)?.iter().map(|e| e.value).sum();
                t.add(rel(sum, s), || format!("{} x={x}", short(&p)));
            }
        }
    }
    Ok((t.ok(), t.line("rel err")))
}

fn check_median_density(_level: Level) -> Checked {
    // N=5, λ=1/3, λ₁=λ₂=1: the median has density x⁷(1−x)⁷/B(8,8)
    let p = Params::with_rational_lambda(5, 1.0, 1.0, Rational::new(1, 3)?, 1.0);
    let b88 = selberg(&SelbergArgs::new(1, 7.0, 7.0, 0.0))?.value();
    let mut t = Tally::new(1e-6);
    for i in 1..=9 {
        let x = i as f64 / 10.0;
        let d = order_stat_density(2, x, &p)?;
        t.add((d - x.powi(7) * (1.0 - x).powi(7) / b88).abs(), || format!("x={x}"));
    }
    Ok((t.ok(), t.line("abs err")))
}

fn check_symmetry(level: Level) -> Checked {
    let mut rng = rng_for(6);
    let mut t = Tally::new(1e-8);
    for _ in 0..level.draws(4) {
        let p = draw1(&mut rng, 4, (-0.5, 2.0), (0.1, 2.0));
        let s = p.swapped();
        for x in [0.12, 0.3, 0.45, 0.5, 0.63, 0.87] {
            for n in 0..4 {
                let a = order_stat_density(n, 1.0 - x, &p)?;
                let b = order_stat_density(3 - n, x, &s)?;
                t.add((a - b).abs() / a.abs().max(1.0), || format!("{} n={n} x={x}", short(&p)));
            }
        }
    }
    Ok((t.ok(), t.line("err")))
}

fn check_jacobi(level: Level) -> Checked {
    let mut rng = rng_for(7);
    let mut t = Tally::new(1e-8);
    let mut literal: f64 = 0.0;
    for _ in 0..level.draws(2) {
        for n in [3, 6, 10] {
            let p = draw1(&mut rng, n, (-0.5, 2.0), (0.2, 2.0));
            let zs = poly_zeros_report(&char_polynomial(1, &p)?)?.roots;
            let (a, b) = aomoto_parameters(&p);
            let want = jacobi_zeros_unit(n, a, b)?;
            let (la, lb) = aomoto_parameters_literal(&p);
            let lit = jacobi_zeros_unit(n, la, lb)?;
            let mut got: Vec<f64> = zs.iter().map(|z| z.re).collect();
            got.sort_by(f64::total_cmp);
            let imag = zs.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            let err = got.iter().zip(&want).map(|(g, w)| (g - w).abs()).fold(imag, f64::max);
            t.add(err, || short(&p));
            literal = literal.max(got.iter().zip(&lit).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max));
        }
    }
    Ok((
        t.ok(),
        format!(
            "{}; literal single-parameter reading differs by up to {literal:.2e} (reported only)",
            t.line("max |zero diff|")
        ),
    ))
}

fn check_polynomial(level: Level) -> Checked {
    let mut rng = rng_for(8);
    let mut t = Tally::new(1e-8);
    for _ in 0..level.draws(4) {
        let p = draw1(&mut rng, 2, (-0.5, 2.0), (0.2, 2.0));
        let cp = char_polynomial(2, &p)?;
        for x in [1.2, 1.5, 2.0] {
            let o = oracle::quad_moment(x, 1.0, &p, 1e-12)?.value;
            t.add(rel(cp.eval(x), o), || format!("{} x={x}", short(&p)));
        }
    }
    Ok((t.ok(), t.line("rel err")))
}

fn max_abs_diff(a: &crate::monodromy::CMatrix, b: &crate::monodromy::CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y): (&Complex64, &Complex64)| (x - y).norm()).fold(0.0, f64::max)
}

fn check_monodromy(level: Level) -> Checked {
    let mut rng = rng_for(9);
    let mut prod = Tally::new(1e-10);
    let mut spec = Tally::new(1e-10);
    let mut per = Tally::new(1e-10);
    for _ in 0..level.draws(10) {
        let n = rng.gen_range(1..=6);
        let p = draw(&mut rng, n, (-0.5, 2.0), (0.1, 2.0), (0.1, 2.0));
        let t = monodromy_triple(&p)?;
        prod.add(t.product_residual(), || short(&p));
        spec.add(spectrum_residual(&t.m0, &p)?, || short(&p));
        let shifted = monodromy_triple(&p.with_lambda1(p.lambda1 + 1.0))?;
        per.add(max_abs_diff(&t.m0, &shifted.m0), || short(&p));
    }
    Ok((
        prod.ok() && spec.ok() && per.ok(),
        format!("{}; {}; {}", prod.line("product residual"), spec.line("spectrum residual"), per.line("periodicity")),
    ))
}

fn slope(x1: f64, x2: f64, p: &Params, mu: f64) -> Result<f64> {
    let m1 = oracle::quad_moment(x1, mu, p, 1e-11)?.value;
    let m2 = oracle::quad_moment(x2, mu, p, 1e-11)?.value;
    Ok((m1 / m2).ln() / (x1 / x2).ln())
}

fn check_asymptotics(level: Level) -> Checked {
    let mut rng = rng_for(10);
    let mut sl = Tally::new(1e-2);
    let mut lg = Tally::new(0.05);
    for _ in 0..level.draws(3) {
        // Each window is drawn with the next exponent at least 0.5 away, so
        // the leading power dominates at x = 1e-3..1e-4.
        // l = 0 window: α > −λ₁, correction x^{λ₁+α}
        let l1 = rng.gen_range(0.3..1.0);
        let al = rng.gen_range(0.2..1.0);
        let p = Params::new(1, l1, rng.gen_range(0.0..1.0), rng.gen_range(0.2..2.0), al);
        // l = 1 window: −2λ − λ₁ < α < −λ₁ (α > 0 for integrability),
        // correction x^{−(λ₁+α)}
        let l1 = rng.gen_range(-0.95..-0.6);
        let al = rng.gen_range(0.05..(-l1 - 0.5));
        let q = Params::new(1, l1, rng.gen_range(0.0..1.0), rng.gen_range(0.2..2.0), al);
        for p in [p, q] {
            let mu = (p.alpha - 1.0) / 2.0;
            let a = assembly::moment_asymptotic(mu, &p)?;
            let s = slope(1e-3, 1e-4, &p, mu)?;
            sl.add((s - a.exponent).abs(), || format!("{} l={}", short(&p), a.l));
        }
        // log case at α = −λ₁
        let l1 = rng.gen_range(-0.6..-0.3);
        let p = Params::new(1, l1, rng.gen_range(0.0..1.0), rng.gen_range(0.2..2.0), -l1);
        let a = assembly::moment_asymptotic_log(0, &p)?;
        let x: f64 = 1e-6;
        let o = oracle::quad_moment(x, (p.alpha - 1.0) / 2.0, &p, 1e-11)?.value / (1.0 / x).ln();
        lg.add(rel(o, a.coefficient.value()), || short(&p));
    }
    Ok((sl.ok() && lg.ok(), format!("{}; {}", sl.line("|slope - sigma|"), lg.line("log-case rel err"))))
}

/// One real-axis crossing per cluster: scanning upper-half-plane roots from
/// the axis outwards, keep a root when its real part is at least `sep` from
/// every crossing kept so far.
pub fn cluster_crossings(roots: &[Complex64], clusters: usize, sep: f64) -> Vec<f64> {
    let mut upper: Vec<Complex64> = roots.iter().filter(|z| z.im >= 0.0).copied().collect();
    upper.sort_by(|a, b| a.im.total_cmp(&b.im));
    let mut out: Vec<f64> = Vec::new();
    for z in upper {
        if out.len() == clusters {
            break;
        }
        if out.iter().all(|c| (c - z.re).abs() >= sep) {
            out.push(z.re);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

fn check_zeros(_level: Level) -> Checked {
    let (n, nu) = (10, 20);
    let mut sym = Tally::new(1e-8);
    let mut res = Tally::new(1e-8);
    let mut cross = Tally::new(0.05);
    let mut finite = true;
    for (r, s) in [(1, 3), (3, 1)] {
        let lam = Rational::new(r, s)?;
        let l12 = 3.0 * lam.to_f64();
        let p = Params::with_rational_lambda(n, l12, l12, lam, 1.0);
        let rep = poly_zeros_report(&char_polynomial(nu, &p)?)?;
        finite &= rep.roots.len() == n * nu && rep.roots.iter().all(|z| z.is_finite());
        sym.add(rep.pairing_error, || format!("lambda={lam}"));
        res.add(rep.residual, || format!("lambda={lam}"));
        if s == 1 {
            // λ₁ = λa with a = 3: zeros of P_N^{(a−1,a−1)}(1−2x)
            let j = jacobi_zeros_unit(n, 2.0, 2.0)?;
            let gap = j.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            let c = cluster_crossings(&rep.roots, n, 0.5 * gap);
            if c.len() != n {
                cross.add(f64::INFINITY, || format!("found {} clusters", c.len()));
            }
            for (k, (a, b)) in c.iter().zip(&j).enumerate() {
                cross.add((a - b).abs(), || format!("cluster {k}: crossing {a:.4} vs Jacobi zero {b:.4}"));
            }
        }
    }
    Ok((
        finite && sym.ok() && res.ok() && cross.ok(),
        format!(
            "all finite: {finite}; {}; {}; {}",
            sym.line("pairing"),
            res.line("residual"),
            cross.line("crossing offset at lambda=3")
        ),
    ))
}

/// Run acceptance check `id` (1-based).
pub fn run_check(id: usize, level: Level) -> CheckOutcome {
    let start = Instant::now();
    let run: fn(Level) -> Checked = match id {
        1 => check_selberg,
        2 => check_ode,
        3 => check_series,
        4 => check_sum_rule,
        5 => check_median_density,
        6 => check_symmetry,
        7 => check_jacobi,
        8 => check_polynomial,
        9 => check_monodromy,
        10 => check_asymptotics,
        11 => check_zeros,
        _ => {
            return CheckOutcome {
                id,
                name: "unknown",
                passed: false,
                detail: format!("no check numbered {id}"),
                seconds: 0.0,
            }
        }
    };
    let (passed, detail) = match run(level) {
        Ok(r) => r,
        Err(e) => (false, format!("{}: {e}", e.kind())),
    };
    CheckOutcome { id, name: CHECK_NAMES[id - 1], passed, detail, seconds: start.elapsed().as_secs_f64() }
}

pub fn run_all(level: Level) -> Vec<CheckOutcome> {
    (1..=CHECK_NAMES.len()).map(|id| run_check(id, level)).collect()
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2} {} ({:.1}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}
