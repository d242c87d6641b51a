//! Zeros of the characteristic-polynomial averages.
//!
//! Monomial coefficients of `⟨∏(x − t_l)^ν⟩` are huge and alternate, so
//! values near the roots come out of massive cancellation (for `N = 10`,
//! `ν = 20` well over a hundred digits). We therefore rebuild the
//! coefficients exactly in rational arithmetic, Taylor-shift them to the
//! centre `x = 1/2` of the support (which removes most of the
//! cancellation), warm-start Aberth–Ehrlich in `f64`, and finish in
//! multiprecision, doubling the working precision until the roots stop
//! moving.

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::assembly::CharPolynomial;
use crate::error::{Error, Result};
use crate::params::Params;

const RM: RoundingMode = RoundingMode::ToEven;
/// Starting working precision in bits.
pub const START_PRECISION: usize = 192;
pub const MAX_PRECISION: usize = 3072;
/// Residual acceptance `|P(z)| / ‖coeffs‖`.
pub const RESIDUAL_TOL: f64 = 1e-8;
const AGREE_TOL: f64 = 1e-13;

fn rat(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidParams(format!("{x} is not finite")))
}

fn int(x: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// Exact descending coefficients of `⟨∏(x − t_l)^ν⟩`, obtained from the same
/// Frobenius recurrence as [`crate::assembly::char_polynomial`] run in
/// rational arithmetic. Each f64 parameter is taken at its exact binary
/// value; λ uses the declared rational when present.
pub fn char_polynomial_exact(nu: usize, p: &Params) -> Result<Vec<BigRational>> {
    p.check_structure()?;
    if nu == 0 {
        return Err(Error::InvalidParams("nu must be at least 1".into()));
    }
    let n = p.n;
    let l1 = rat(p.lambda1)?;
    let l2 = int(nu);
    let l = match p.lambda_rational {
        Some(r) => BigRational::new(BigInt::from(r.num), BigInt::from(r.den)),
        None => rat(p.lambda)?,
    };
    let al = rat(p.lambda2)? + BigRational::one();
    let nn = int(n);
    let one = BigRational::one();
    let two = int(2);

    let mut plus_diag = Vec::with_capacity(n + 1);
    let mut minus_diag = Vec::with_capacity(n + 1);
    let mut plus_super = Vec::with_capacity(n);
    let mut minus_sub = Vec::with_capacity(n);
    for row in 0..=n {
        let pf = int(row);
        let nmp = &nn - &pf;
        let a = &nmp * (&l1 + &l2 + &two * &l * (&nmp - &one) + &two * &al);
        let b = -(&nmp) * (&l1 + &l * (&nmp - &one) + &al);
        let d = &pf * (&l * &nmp + &al);
        let e = &l1 + &l2 + &l * (&two * &nn - &pf - &two) + &al + &one;
        plus_diag.push(-b.clone());
        minus_diag.push(-(a + b) + &pf);
        if row < n {
            plus_super.push(&nmp * e);
        }
        if row > 0 {
            minus_sub.push(d);
        }
    }
    // σ_N
    let sigma = &nn * (&l1 + &l * (&nn - &one) + &al);

    let deg = nu * n;
    let mut running = vec![BigRational::zero(); n + 1];
    running[0] = one.clone();
    let mut out = Vec::with_capacity(deg + 1);
    out.push(one.clone());
    let mut rhs = vec![BigRational::zero(); n + 1];
    for lv in 1..=deg + 2 {
        for row in 0..=n {
            let mut s = &minus_diag[row] * &running[row];
            if row > 0 {
                s += &minus_sub[row - 1] * &running[row - 1];
            }
            rhs[row] = s;
        }
        let mut pl = vec![BigRational::zero(); n + 1];
        let shift = &sigma + int(lv);
        for row in (0..=n).rev() {
            let mut r = rhs[row].clone();
            if row < n {
                r += &plus_super[row] * &pl[row + 1];
            }
            let piv = &shift - &plus_diag[row];
            if piv.is_zero() {
                return Err(Error::SingularSolve { row, l: lv });
            }
            pl[row] = r / piv;
        }
        for (a, b) in running.iter_mut().zip(&pl) {
            *a += b;
        }
        if lv <= deg {
            out.push(pl[0].clone());
        } else if !pl[0].is_zero() {
            return Err(Error::ResonanceUnresolvable {
                k: n,
                l: lv,
                detail: "exact series does not terminate at degree nu*N".into(),
            });
        }
    }
    Ok(out)
}

/// Descending coefficients of `P(c + y)` in `y`.
fn taylor_shift(coeffs: &[BigRational], c: &BigRational) -> Vec<BigRational> {
    let mut b = coeffs.to_vec();
    let n = b.len() - 1;
    for i in 0..n {
        for j in 1..=(n - i) {
            let t = &b[j - 1] * c;
            b[j] += t;
        }
    }
    b
}

fn big_from_rational(r: &BigRational, prec: usize, cc: &mut Consts) -> BigFloat {
    let num = BigFloat::parse(&r.numer().to_string(), Radix::Dec, prec, RM, cc);
    let den = BigFloat::parse(&r.denom().to_string(), Radix::Dec, prec, RM, cc);
    num.div(&den, prec, RM)
}

fn big_to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    format!("{x}").parse().unwrap_or(f64::NAN)
}

#[derive(Clone, Debug)]
struct C {
    re: BigFloat,
    im: BigFloat,
}

impl C {
    fn from_c64(z: Complex64, p: usize) -> C {
        C { re: BigFloat::from_f64(z.re, p), im: BigFloat::from_f64(z.im, p) }
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(big_to_f64(&self.re), big_to_f64(&self.im))
    }
    fn add(&self, o: &C, p: usize) -> C {
        C { re: self.re.add(&o.re, p, RM), im: self.im.add(&o.im, p, RM) }
    }
    fn sub(&self, o: &C, p: usize) -> C {
        C { re: self.re.sub(&o.re, p, RM), im: self.im.sub(&o.im, p, RM) }
    }
    fn mul(&self, o: &C, p: usize) -> C {
        let re = self.re.mul(&o.re, p, RM).sub(&self.im.mul(&o.im, p, RM), p, RM);
        let im = self.re.mul(&o.im, p, RM).add(&self.im.mul(&o.re, p, RM), p, RM);
        C { re, im }
    }
    fn norm_sqr(&self, p: usize) -> BigFloat {
        self.re.mul(&self.re, p, RM).add(&self.im.mul(&self.im, p, RM), p, RM)
    }
    fn div(&self, o: &C, p: usize) -> C {
        let d = o.norm_sqr(p);
        let re = self.re.mul(&o.re, p, RM).add(&self.im.mul(&o.im, p, RM), p, RM);
        let im = self.im.mul(&o.re, p, RM).sub(&self.re.mul(&o.im, p, RM), p, RM);
        C { re: re.div(&d, p, RM), im: im.div(&d, p, RM) }
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    /// `log₂|z|` to within one unit.
    fn log2_abs(&self) -> f64 {
        let e = |x: &BigFloat| if x.is_zero() { f64::NEG_INFINITY } else { x.exponent().unwrap_or(0) as f64 };
        e(&self.re).max(e(&self.im))
    }
}

/// `(P(z), P'(z))` by Horner.
fn horner(coeffs: &[C], z: &C, p: usize) -> (C, C) {
    let zero = C { re: BigFloat::from_f64(0.0, p), im: BigFloat::from_f64(0.0, p) };
    let mut v = zero.clone();
    let mut d = zero;
    for c in coeffs {
        d = d.mul(z, p).add(&v, p);
        v = v.mul(z, p).add(c, p);
    }
    (v, d)
}

/// One Aberth–Ehrlich run (Gauss–Seidel updates) at fixed precision.
/// Returns the iteration count.
fn aberth_big(coeffs: &[C], z: &mut [C], p: usize, max_iter: usize) -> Result<usize> {
    let n = z.len();
    let one = C { re: BigFloat::from_f64(1.0, p), im: BigFloat::from_f64(0.0, p) };
    let target = -((p as f64) - 24.0);
    let mut done = vec![false; n];
    // log₂ of the previous relative correction, to spot the noise floor
    let mut last = vec![f64::INFINITY; n];
    for it in 0..max_iter {
        let mut moving = false;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (v, d) = horner(coeffs, &z[i], p);
            if v.is_zero() {
                done[i] = true;
                continue;
            }
            let r = v.div(&d, p);
            let mut s = C { re: BigFloat::from_f64(0.0, p), im: BigFloat::from_f64(0.0, p) };
            for j in 0..n {
                if j != i {
                    s = s.add(&one.div(&z[i].sub(&z[j], p), p), p);
                }
            }
            let w = r.div(&one.sub(&r.mul(&s, p), p), p);
            z[i] = z[i].sub(&w, p);
            let rel = w.log2_abs() - z[i].log2_abs().max(-40.0);
            // Converged, or already tiny and no longer shrinking (rounding
            // noise); the precision ladder decides whether that is enough.
            if rel < target || (rel < -40.0 && rel > last[i] - 1.0) {
                done[i] = true;
            } else {
                moving = true;
            }
            last[i] = rel;
        }
        if !moving {
            return Ok(it + 1);
        }
    }
    Err(Error::ConvergenceFailure(format!("Aberth iteration did not converge in {max_iter} sweeps at {p} bits")))
}

/// Plain `f64` Aberth, used as a warm start; never fails.
fn aberth_f64(coeffs: &[f64], max_iter: usize) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[0];
    let radius = (1..=n).map(|i| (coeffs[i] / lead).abs().powf(1.0 / i as f64)).fold(0.0, f64::max).max(1e-3);
    let mut z: Vec<Complex64> =
        (0..n).map(|k| Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / n as f64 + 0.4)).collect();
    for _ in 0..max_iter {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let mut v = Complex64::new(0.0, 0.0);
            let mut d = Complex64::new(0.0, 0.0);
            for &c in coeffs {
                d = d * z[i] + v;
                v = v * z[i] + c;
            }
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            let r = v / d;
            let s: Complex64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let w = r / (1.0 - r * s);
            if w.is_finite() {
                z[i] -= w;
                moved = moved.max(w.norm() / z[i].norm().max(1e-12));
            }
        }
        if moved < 1e-14 {
            break;
        }
    }
    z
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZerosReport {
    pub roots: Vec<Complex64>,
    /// `max |P(z)| / ‖coeffs‖∞` over the returned roots.
    pub residual: f64,
    /// Largest distance from a root's conjugate to its matched partner.
    pub pairing_error: f64,
    pub precision_bits: usize,
    pub sweeps: usize,
}

fn pairing_error(roots: &[Complex64]) -> f64 {
    let mut pool: Vec<Complex64> = roots.iter().map(|z| z.conj()).collect();
    let mut worst: f64 = 0.0;
    for z in roots {
        let (i, d) = pool
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (z - w).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        worst = worst.max(d);
        pool.swap_remove(i);
    }
    worst
}

/// All `νN` zeros of the polynomial, with residual and symmetry checks.
pub fn poly_zeros_report(cp: &CharPolynomial) -> Result<ZerosReport> {
    if cp.degree() < 1 {
        return Err(Error::InvalidParams("degree must be at least 1".into()));
    }
    let exact = char_polynomial_exact(cp.nu, &cp.params)?;
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let shifted = taylor_shift(&exact, &half);
    let n = shifted.len() - 1;
    let mut cc = Consts::new().map_err(|e| Error::ConvergenceFailure(format!("{e:?}")))?;

    let warm: Vec<f64> = {
        let p = 64;
        shifted.iter().map(|r| big_to_f64(&big_from_rational(r, p, &mut cc))).collect()
    };
    let start = aberth_f64(&warm, 500);

    let mut prec = START_PRECISION;
    let mut sweeps = 0;
    let mut z: Vec<C> = start.iter().map(|&w| C::from_c64(w, prec)).collect();
    let mut prev: Option<Vec<Complex64>> = None;
    loop {
        let coeffs: Vec<C> = shifted
            .iter()
            .map(|r| C { re: big_from_rational(r, prec, &mut cc), im: BigFloat::from_f64(0.0, prec) })
            .collect();
        // lift the current roots to this precision
        for w in z.iter_mut() {
            w.re.set_precision(prec, RM).ok();
            w.im.set_precision(prec, RM).ok();
        }
        match aberth_big(&coeffs, &mut z, prec, 400) {
            Ok(k) => sweeps += k,
            // clusters too tight for this precision: climb
            Err(e) if prec * 2 > MAX_PRECISION => return Err(e),
            Err(_) => {
                sweeps += 400;
                prev = None;
                prec *= 2;
                continue;
            }
        }
        let now: Vec<Complex64> = z.iter().map(C::to_c64).collect();
        if let Some(old) = &prev {
            let moved = old.iter().zip(&now).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if moved <= AGREE_TOL {
                break;
            }
        }
        prev = Some(now);
        if prec * 2 > MAX_PRECISION {
            return Err(Error::ConvergenceFailure(format!("roots still moving at {prec} bits of working precision")));
        }
        prec *= 2;
    }

    // Residual on the unshifted exact polynomial, at working precision.
    let orig: Vec<C> = exact
        .iter()
        .map(|r| C { re: big_from_rational(r, prec, &mut cc), im: BigFloat::from_f64(0.0, prec) })
        .collect();
    let norm = exact.iter().map(|r| big_to_f64(&big_from_rational(&r.abs(), 64, &mut cc))).fold(0.0, f64::max);
    let half_c = C { re: BigFloat::from_f64(0.5, prec), im: BigFloat::from_f64(0.0, prec) };
    let mut roots = Vec::with_capacity(n);
    let mut residual: f64 = 0.0;
    for y in &z {
        let x = y.add(&half_c, prec);
        let (v, _) = horner(&orig, &x, prec);
        let r = v.to_c64().norm() / norm;
        residual = residual.max(r);
        roots.push(x.to_c64());
    }
    if !(residual <= RESIDUAL_TOL) || roots.iter().any(|z| !z.is_finite()) {
        return Err(Error::ConvergenceFailure(format!("root residual {residual:e} above {RESIDUAL_TOL:e}")));
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let pairing_error = pairing_error(&roots);
    Ok(ZerosReport { roots, residual, pairing_error, precision_bits: prec, sweeps })
}

pub fn poly_zeros(cp: &CharPolynomial) -> Result<Vec<Complex64>> {
    Ok(poly_zeros_report(cp)?.roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::char_polynomial;
    use crate::jacobi::{aomoto_parameters, jacobi_zeros_unit};

    #[test]
    fn exact_matches_float_recurrence() {
        let p = Params::new(3, 0.5, 1.25, 0.75, 1.0);
        let cp = char_polynomial(2, &p).unwrap();
        let ex = char_polynomial_exact(2, &p).unwrap();
        let mut cc = Consts::new().unwrap();
        for (a, b) in cp.coeffs.iter().zip(&ex) {
            let b = big_to_f64(&big_from_rational(b, 128, &mut cc));
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300), "{a} {b}");
        }
    }

    #[test]
    fn uniform_first_moment_root() {
        let cp = char_polynomial(1, &Params::new(1, 0.0, 0.0, 1.0, 1.0)).unwrap();
        let z = poly_zeros(&cp).unwrap();
        assert_eq!(z.len(), 1);
        assert!((z[0] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn nu1_zeros_are_jacobi() {
        let p = Params::new(6, 0.7, 1.6, 0.8, 1.0);
        let cp = char_polynomial(1, &p).unwrap();
        let rep = poly_zeros_report(&cp).unwrap();
        let (a, b) = aomoto_parameters(&p);
        let j = jacobi_zeros_unit(6, a, b).unwrap();
        for (z, w) in rep.roots.iter().zip(&j) {
            assert!(z.im.abs() < 1e-12 && (z.re - w).abs() < 1e-10, "{z} {w}");
        }
    }

    #[test]
    fn moderate_degree_is_symmetric() {
        let p = Params::with_rational_lambda(4, 3.0, 3.0, crate::params::Rational::new(1, 1).unwrap(), 1.0);
        let cp = char_polynomial(6, &p).unwrap();
        let rep = poly_zeros_report(&cp).unwrap();
        assert_eq!(rep.roots.len(), 24);
        assert!(rep.pairing_error < 1e-8, "{}", rep.pairing_error);
        assert!(rep.residual < 1e-8);
    }
}
