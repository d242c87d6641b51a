//! Brute-force reference values: nested tanh-sinh quadrature over ordered
//! regions (small N) and importance-sampled Monte Carlo.
//!
//! Quadrature nodes carry their exact distances to both ends of their
//! interval, and every integrand factor is written in terms of such
//! distances, so endpoint and coincidence singularities are resolved down
//! to the underflow limit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::Params;
use crate::special::binomial;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_LEVEL: usize = 12;
pub const DEFAULT_SAMPLES: usize = 1_000_000;
/// Fixed number of RNG streams, so results do not depend on thread count.
pub const MC_STREAMS: u64 = 64;
const T_MAX: f64 = 6.5;
const TINY: f64 = 1e-280;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    TanhSinhNested,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleResult {
    pub value: f64,
    pub error_estimate: f64,
    pub method: Method,
    pub samples_or_levels: usize,
    pub seed: Option<u64>,
}

/// A tanh-sinh node mapped to `(a, b)`.
#[derive(Debug, Clone, Copy)]
struct Node {
    /// `x − a`, accurate even when tiny.
    from_a: f64,
    /// `b − x`.
    from_b: f64,
    weight: f64,
}

/// Nodes with abscissa `t = j·h` for odd `j` (or all `j` at level 0).
fn level_nodes(level: usize, width: f64) -> Vec<Node> {
    let h = 0.5f64.powi(level as i32);
    let jmax = (T_MAX / h) as i64;
    let step = if level == 0 { 1 } else { 2 };
    let start = if level == 0 { -jmax } else { -jmax | 1 };
    let mut out = Vec::new();
    let mut j = start;
    while j <= jmax {
        let t = j as f64 * h;
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let e = (2.0 * u).exp();
        let from_a = width / (1.0 + 1.0 / e);
        let from_b = width / (1.0 + e);
        let ch = (u).cosh();
        let weight = h * std::f64::consts::FRAC_PI_2 * t.cosh() / (ch * ch) * 0.5 * width;
        if from_a > 0.0 && from_b > 0.0 && weight > 0.0 && weight.is_finite() {
            out.push(Node { from_a, from_b, weight });
        }
        j += step;
    }
    out
}

/// Level-doubling tanh-sinh on an interval of the given width. `f` gets
/// `(from_a, from_b)` and returns `(value, inner_error)`.
fn tanh_sinh<F>(width: f64, tol: f64, mut f: F) -> Result<(f64, f64, usize)>
where
    F: FnMut(f64, f64) -> Result<(f64, f64)>,
{
    let mut sum = 0.0;
    let mut inner = 0.0;
    let mut prev = f64::NAN;
    for level in 0..=MAX_LEVEL {
        let mut add = 0.0;
        let mut add_err = 0.0;
        for nd in level_nodes(level, width) {
            let (v, e) = f(nd.from_a, nd.from_b)?;
            add += nd.weight * v;
            add_err += nd.weight * e;
        }
        // Halving h: old sum (weights ∝ h) is halved, new odd nodes added.
        if level == 0 {
            sum = add;
            inner = add_err;
        } else {
            sum = 0.5 * sum + add;
            inner = 0.5 * inner + add_err;
        }
        if level >= 3 {
            let diff = (sum - prev).abs();
            // Inner integrals over sub-ulp widths are subnormal noise;
            // they cannot matter at any tolerance we accept.
            if diff <= tol * sum.abs().max(TINY) {
                return Ok((sum, diff + inner.abs(), level));
            }
        }
        prev = sum;
    }
    let est = (sum - prev).abs();
    Err(Error::SlowConvergence { estimate: est / sum.abs().max(f64::MIN_POSITIVE), tol, levels: MAX_LEVEL })
}

/// `|t|^e` with the convention that exponent 0 gives 1 even at `t = 0`.
#[inline]
fn pw(t: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        t.powf(e)
    }
}

/// One integration variable, described by distances (all ≥ 0 except `tx`).
#[derive(Debug, Clone, Copy, Default)]
struct Var {
    d0: f64,
    d1: f64,
    /// Signed `t − x`.
    tx: f64,
    /// Gap to the previous variable of the same block (or to the block start).
    gap: f64,
    /// Distance to the block end.
    to_hi: f64,
    block: usize,
}

#[derive(Debug, Clone, Copy)]
enum Side {
    /// `[0, x]` with `x < 1`.
    Left,
    /// `[x, 1]`.
    Right,
    /// `[0, 1]` with `x ≥ 1`.
    Full,
}

/// An ordered block: variables increase across the block.
#[derive(Debug, Clone, Copy)]
struct Block {
    count: usize,
    side: Side,
    width: f64,
}

impl Block {
    fn var(&self, x: f64, to_lo: f64, to_hi: f64, gap: f64, block: usize) -> Var {
        let (d0, d1, tx) = match self.side {
            Side::Left => (to_lo, (1.0 - x) + to_hi, -to_hi),
            Side::Right => (x + to_lo, to_hi, to_lo),
            Side::Full => (to_lo, to_hi, -((x - 1.0) + to_hi)),
        };
        Var { d0, d1, tx, gap, to_hi, block }
    }
}

struct Integrand<'a> {
    p: &'a Params,
    x: f64,
    /// Exponent on `|t − x|`.
    xexp: f64,
    /// `e_pp(t − x)` factor, when present.
    ep: Option<usize>,
}

impl Integrand<'_> {
    fn single(&self, v: &Var) -> f64 {
        let p = self.p;
        pw(v.d0, p.lambda1) * pw(v.d1, p.lambda2) * pw(v.tx.abs(), self.xexp)
    }

    /// `∏|t_new − t_j|^{2λ}` over the earlier variables.
    fn pair(&self, vars: &[Var], new: &Var) -> f64 {
        let e = 2.0 * self.p.lambda;
        if e == 0.0 {
            return 1.0;
        }
        let mut prod = 1.0;
        let mut acc = new.gap;
        for old in vars.iter().rev() {
            let d = if old.block == new.block {
                let d = acc;
                acc += old.gap;
                d
            } else {
                // the blocks sit on opposite sides of x
                new.tx.abs() + old.tx.abs()
            };
            prod *= pw(d, e);
        }
        prod
    }

    fn ep_factor(&self, vars: &[Var]) -> f64 {
        match self.ep {
            None | Some(0) => 1.0,
            Some(k) => {
                let mut e = vec![0.0; k + 1];
                e[0] = 1.0;
                for v in vars {
                    for j in (1..=k).rev() {
                        e[j] += e[j - 1] * v.tx;
                    }
                }
                e[k]
            }
        }
    }
}

struct Nest<'a> {
    f: &'a Integrand<'a>,
    blocks: &'a [Block],
    tol: f64,
    levels: usize,
}

impl Nest<'_> {
    fn run(&mut self, bi: usize, within: usize, to_lo: f64, vars: &mut Vec<Var>) -> Result<(f64, f64)> {
        if bi == self.blocks.len() {
            return Ok((self.f.ep_factor(vars), 0.0));
        }
        let b = self.blocks[bi];
        if within == b.count {
            return self.run(bi + 1, 0, 0.0, vars);
        }
        let width = if within == 0 { b.width } else { vars.last().expect("previous variable").to_hi };
        let tol = self.tol;
        let x = self.f.x;
        let mut levels = 0;
        let (val, err, lv) = tanh_sinh(width, tol, |from_a, from_b| {
            let v = b.var(x, to_lo + from_a, from_b, from_a, bi);
            let w = self.f.single(&v) * self.f.pair(vars, &v);
            if w == 0.0 {
                return Ok((0.0, 0.0));
            }
            vars.push(v);
            let r = self.run(bi, within + 1, to_lo + from_a, vars);
            vars.pop();
            let (iv, ie) = r?;
            levels = levels.max(self.levels);
            Ok((w * iv, w.abs() * ie))
        })?;
        self.levels = levels.max(lv);
        Ok((val, err))
    }
}

fn check_iq(q: usize, x: f64, p: &Params) -> Result<()> {
    p.check_structure()?;
    if q > p.n {
        return Err(Error::InvalidParams(format!("q={q} exceeds N={}", p.n)));
    }
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidParams(format!("x={x} must lie in (0,1)")));
    }
    Ok(())
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn split_blocks(q: usize, n: usize, x: f64) -> Vec<Block> {
    let mut b = Vec::new();
    if q > 0 {
        b.push(Block { count: q, side: Side::Left, width: x });
    }
    if n > q {
        b.push(Block { count: n - q, side: Side::Right, width: 1.0 - x });
    }
    b
}

fn nested(f: &Integrand, blocks: &[Block], tol: f64) -> Result<OracleResult> {
    let mut vars = Vec::new();
    let mut nest = Nest { f, blocks, tol, levels: 0 };
    let (v, e) = nest.run(0, 0, 0.0, &mut vars)?;
    let levels = nest.levels;
    let n: usize = blocks.iter().map(|b| b.count).sum();
    let nf = factorial(n);
    Ok(OracleResult {
        value: nf * v,
        error_estimate: (nf * e).max(f64::EPSILON * (nf * v).abs()).max(f64::MIN_POSITIVE),
        method: Method::TanhSinhNested,
        samples_or_levels: levels,
        seed: None,
    })
}

/// `I_q^{(α)}(x)` by nested tanh-sinh over the ordered region.
pub fn quad_iq(q: usize, x: f64, p: &Params, tol: f64) -> Result<OracleResult> {
    check_iq(q, x, p)?;
    let f = Integrand { p, x, xexp: p.alpha - 1.0, ep: None };
    nested(&f, &split_blocks(q, p.n, x), tol)
}

/// As [`quad_iq`] with the factor `e_pp(t₁−x, …, t_N−x)`.
pub fn quad_jpq(pp: usize, q: usize, x: f64, p: &Params, tol: f64) -> Result<OracleResult> {
    check_iq(q, x, p)?;
    if pp > p.n {
        return Err(Error::InvalidParams(format!("p={pp} exceeds N={}", p.n)));
    }
    let f = Integrand { p, x, xexp: p.alpha - 1.0, ep: Some(pp) };
    nested(&f, &split_blocks(q, p.n, x), tol)
}

/// `S_N(λ₁,λ₂,λ)` by quadrature over the ordered simplex of `[0,1]^N`.
pub fn quad_selberg(p: &Params, tol: f64) -> Result<OracleResult> {
    p.check_structure()?;
    let f = Integrand { p, x: 2.0, xexp: 0.0, ep: None };
    nested(&f, &[Block { count: p.n, side: Side::Full, width: 1.0 }], tol)
}

/// `⟨∏|t_l − x|^{2μ}⟩`. For `x ≥ 1` the whole of `[0,1]` is one block;
/// otherwise the `N+1` split integrals are summed.
pub fn quad_moment(x: f64, mu: f64, p: &Params, tol: f64) -> Result<OracleResult> {
    p.check_structure()?;
    if !(2.0 * mu > -1.0) {
        return Err(Error::InvalidParams(format!("2mu={} must exceed -1", 2.0 * mu)));
    }
    let norm = quad_selberg(p, tol * 0.1)?;
    let raw = if x >= 1.0 {
        let f = Integrand { p, x, xexp: 2.0 * mu, ep: None };
        nested(&f, &[Block { count: p.n, side: Side::Full, width: 1.0 }], tol)?
    } else if x <= 0.0 {
        let r = quad_moment(1.0 - x, mu, &p.swapped(), tol)?;
        return Ok(r);
    } else {
        let q = p.with_alpha(2.0 * mu + 1.0);
        let mut acc = OracleResult { value: 0.0, error_estimate: 0.0, ..norm };
        for k in 0..=p.n {
            let r = quad_iq(k, x, &q, tol)?;
            acc.value += r.value;
            acc.error_estimate += r.error_estimate;
            acc.samples_or_levels = acc.samples_or_levels.max(r.samples_or_levels);
        }
        acc
    };
    let value = raw.value / norm.value;
    Ok(OracleResult {
        value,
        error_estimate: raw.error_estimate / norm.value.abs() + value.abs() * norm.error_estimate / norm.value.abs(),
        ..raw
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    n: usize,
    sum: f64,
    sumsq: f64,
}

impl Acc {
    fn merge(self, o: Acc) -> Acc {
        Acc { n: self.n + o.n, sum: self.sum + o.sum, sumsq: self.sumsq + o.sumsq }
    }
}

/// Run `samples` draws split over [`MC_STREAMS`] independent ChaCha streams
/// and merge in stream order.
fn monte_carlo<F>(samples: usize, seed: u64, draw: F) -> (f64, f64)
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let per = samples.div_ceil(MC_STREAMS as usize);
    let parts: Vec<Acc> = (0..MC_STREAMS)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let mut a = Acc::default();
            let count = per.min(samples.saturating_sub(s as usize * per));
            for _ in 0..count {
                let w = draw(&mut rng);
                a.sum += w;
                a.sumsq += w * w;
                a.n += 1;
            }
            a
        })
        .collect();
    let a = parts.into_iter().fold(Acc::default(), Acc::merge);
    let n = a.n as f64;
    let mean = a.sum / n;
    let var = (a.sumsq / n - mean * mean).max(0.0);
    (mean, (var / (n - 1.0).max(1.0)).sqrt())
}

fn beta_dist(a: f64, b: f64) -> Result<Beta<f64>> {
    Beta::new(a, b).map_err(|e| Error::InvalidParams(format!("beta proposal ({a},{b}): {e}")))
}

fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

fn pair_weight(ts: &[f64], lam: f64) -> f64 {
    let mut w = 1.0;
    for i in 0..ts.len() {
        for j in 0..i {
            w *= (ts[i] - ts[j]).abs().powf(2.0 * lam);
        }
    }
    w
}

/// Monte Carlo `I_q^{(α)}(x)` with beta proposals `Beta(λ₁+1, α)` on
/// `[0,x]` and `Beta(α, λ₂+1)` on `[x,1]`.
pub fn mc_iq(q: usize, x: f64, p: &Params, samples: usize, seed: u64) -> Result<OracleResult> {
    check_iq(q, x, p)?;
    if p.n > 6 {
        return Err(Error::InvalidParams("Monte Carlo oracle supports N ≤ 6".into()));
    }
    if samples < 2 {
        return Err(Error::InvalidParams("need at least two samples".into()));
    }
    let n = p.n;
    let (l1, l2, al) = (p.lambda1, p.lambda2, p.alpha);
    let left = beta_dist(l1 + 1.0, al)?;
    let right = beta_dist(al, l2 + 1.0)?;
    // Normalisations of the proposals.
    let ln_norm = q as f64 * ((l1 + al) * x.ln() + ln_beta(l1 + 1.0, al))
        + (n - q) as f64 * ((al + l2) * (1.0 - x).ln() + ln_beta(al, l2 + 1.0));
    let scale = binomial(n, q) * ln_norm.exp();
    let (mean, se) = monte_carlo(samples, seed, |rng| {
        let mut ts = [0.0; 6];
        let mut w = 1.0;
        for (i, t) in ts.iter_mut().enumerate().take(n) {
            if i < q {
                let u: f64 = left.sample(rng);
                *t = x * u;
                w *= (1.0 - *t).powf(l2);
            } else {
                let v: f64 = right.sample(rng);
                *t = x + (1.0 - x) * v;
                w *= t.powf(l1);
            }
        }
        w * pair_weight(&ts[..n], p.lambda)
    });
    Ok(OracleResult {
        value: scale * mean,
        error_estimate: (scale * se).max(f64::MIN_POSITIVE),
        method: Method::MonteCarlo,
        samples_or_levels: samples,
        seed: Some(seed),
    })
}

/// Monte Carlo `S_N` with `Beta(λ₁+1, λ₂+1)` proposals.
pub fn mc_selberg(p: &Params, samples: usize, seed: u64) -> Result<OracleResult> {
    p.check_structure()?;
    if p.n > 6 {
        return Err(Error::InvalidParams("Monte Carlo oracle supports N ≤ 6".into()));
    }
    let n = p.n;
    let prop = beta_dist(p.lambda1 + 1.0, p.lambda2 + 1.0)?;
    let scale = (n as f64 * ln_beta(p.lambda1 + 1.0, p.lambda2 + 1.0)).exp();
    let (mean, se) = monte_carlo(samples, seed, |rng| {
        let mut ts = [0.0; 6];
        for t in ts.iter_mut().take(n) {
            *t = prop.sample(rng);
        }
        pair_weight(&ts[..n], p.lambda)
    });
    Ok(OracleResult {
        value: scale * mean,
        error_estimate: (scale * se).max(f64::MIN_POSITIVE),
        method: Method::MonteCarlo,
        samples_or_levels: samples,
        seed: Some(seed),
    })
}

/// Monte Carlo moment for `x ∈ (0,1)`, normalised by the closed-form
/// Selberg integral.
pub fn mc_moment(x: f64, mu: f64, p: &Params, samples: usize, seed: u64) -> Result<OracleResult> {
    let q = p.with_alpha(2.0 * mu + 1.0);
    let s = crate::selberg::selberg(&crate::selberg::SelbergArgs::new(p.n, p.lambda1, p.lambda2, p.lambda))?.value();
    let mut value = 0.0;
    let mut var = 0.0;
    for k in 0..=p.n {
        let r = mc_iq(k, x, &q, samples, seed.wrapping_add(k as u64))?;
        value += r.value;
        var += r.error_estimate * r.error_estimate;
    }
    Ok(OracleResult {
        value: value / s,
        error_estimate: var.sqrt() / s.abs(),
        method: Method::MonteCarlo,
        samples_or_levels: samples,
        seed: Some(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly;
    use crate::selberg::{selberg, SelbergArgs};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn uniform_n1() {
        let p = Params::new(1, 0.0, 0.0, 1.0, 1.0);
        let r = quad_iq(1, 0.25, &p, DEFAULT_TOL).unwrap();
        assert!((r.value - 0.25).abs() < 1e-12, "{r:?}");
        assert!(r.error_estimate > 0.0);
        assert_eq!(r.method, Method::TanhSinhNested);
    }

    #[test]
    fn singular_endpoints_and_interior() {
        let p = Params::new(1, -0.5, -0.5, 1.0, 0.5);
        let r = quad_iq(0, 0.5, &p, DEFAULT_TOL).unwrap();
        // ∫_{1/2}^1 t^{-1/2}(1−t)^{-1/2}(t−1/2)^{-1/2} dt
        let s = assembly::i_q(0, 0.5, &p, assembly::DEFAULT_TOL).unwrap().value;
        assert!(rel(r.value, s) < 1e-9, "{} {s}", r.value);
    }

    #[test]
    fn n2_matches_series() {
        let half = crate::params::Rational::new(1, 2).unwrap();
        let p = Params::with_rational_lambda(2, 0.5, 1.5, half, 1.0);
        let r = quad_iq(1, 0.3, &p, DEFAULT_TOL).unwrap();
        let s = assembly::i_q(1, 0.3, &p, assembly::DEFAULT_TOL).unwrap().value;
        assert!(rel(r.value, s) < 1e-8, "{} {s}", r.value);
    }

    #[test]
    fn selberg_quadrature() {
        for (n, l1, l2, l) in [(1, 0.3, -0.4, 0.7), (2, 0.3, 1.1, 0.45), (2, -0.6, -0.2, 1.3)] {
            let p = Params::new(n, l1, l2, l, 1.0);
            let q = quad_selberg(&p, DEFAULT_TOL).unwrap();
            let s = selberg(&SelbergArgs::new(n, l1, l2, l)).unwrap().value();
            assert!(rel(q.value, s) < 1e-9, "n={n}: {} {s}", q.value);
        }
    }

    #[test]
    fn jpq_examples() {
        let p = Params::new(1, 0.0, 0.0, 1.0, 1.0);
        let x = 0.4;
        let j = quad_jpq(1, 1, x, &p, DEFAULT_TOL).unwrap();
        assert!((j.value + x * x / 2.0).abs() < 1e-12);
        let p = Params::new(2, 0.3, 0.6, 0.7, 0.8);
        let a = quad_jpq(0, 1, x, &p, DEFAULT_TOL).unwrap();
        let b = quad_iq(1, x, &p, DEFAULT_TOL).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn moments() {
        let p = Params::new(1, 0.0, 0.0, 1.0, 1.0);
        let m = quad_moment(0.3, 0.5, &p, DEFAULT_TOL).unwrap();
        assert!((m.value - 0.29).abs() < 1e-11);
        // ⟨(x−t)²⟩ for the uniform density at x = 1.5: x² − x + 1/3
        let m = quad_moment(1.5, 1.0, &p, DEFAULT_TOL).unwrap();
        assert!((m.value - (2.25 - 1.5 + 1.0 / 3.0)).abs() < 1e-11);
    }

    #[test]
    fn monte_carlo_uniform() {
        let p = Params::new(1, 0.0, 0.0, 1.0, 1.0);
        let r = mc_iq(1, 0.25, &p, 200_000, 7).unwrap();
        assert!((r.value - 0.25).abs() <= 3.0 * r.error_estimate.max(1e-15));
        let again = mc_iq(1, 0.25, &p, 200_000, 7).unwrap();
        assert_eq!(r.value.to_bits(), again.value.to_bits());
        assert_eq!(r.seed, Some(7));
    }

    #[test]
    fn monte_carlo_sum_rule_n3() {
        let half = crate::params::Rational::new(1, 2).unwrap();
        let p = Params::with_rational_lambda(3, 1.0, 1.0, half, 1.0);
        let mut v = 0.0;
        let mut var = 0.0;
        for q in 0..=3 {
            let r = mc_iq(q, 0.4, &p, 200_000, 11 + q as u64).unwrap();
            v += r.value;
            var += r.error_estimate.powi(2);
        }
        let s = selberg(&SelbergArgs::new(3, 1.0, 1.0, 0.5)).unwrap().value();
        assert!((v - s).abs() <= 3.0 * var.sqrt(), "{v} {s} {}", var.sqrt());
    }

    #[test]
    fn levels_shrink_error() {
        let p = Params::new(1, 0.2, -0.3, 1.0, 0.7);
        let loose = quad_iq(0, 0.3, &p, 1e-4).unwrap();
        let tight = quad_iq(0, 0.3, &p, 1e-12).unwrap();
        assert!(tight.error_estimate <= loose.error_estimate);
        assert!(tight.samples_or_levels >= loose.samples_or_levels);
    }
}
