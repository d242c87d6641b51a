//! One function per subcommand: consume the job's options, compute, fill a report.

use rayon::prelude::*;
use selberg_fuchs::assembly::{
    self, char_polynomial, gap_probs_tol, moment_asymptotic, moment_asymptotic_log, moment_at_edge, moment_average,
    order_stat_densities_at_edge, order_stat_densities_tol, split_integrals, MomentOptions,
};
use selberg_fuchs::fuchsian::{eval_solution, frobenius, frobenius_for_x};
use selberg_fuchs::monodromy::{monodromy_triple, spectrum_residual};
use selberg_fuchs::roots::poly_zeros_report;
use selberg_fuchs::selberg::selberg;
use selberg_fuchs::verify::{self, Level, CHECK_NAMES};
use selberg_fuchs::{oracle, Params, SelbergArgs};
use serde_json::json;

use crate::error::{invalid, CliError, CliResult};
use crate::job::{Format, Grid, Job};
use crate::output::{emit, Cell, Report};

/// Maps `f` over the points in parallel; results keep grid order and the
/// error reported is the one at the smallest x.
fn per_point<T: Send>(xs: &[f64], f: impl Fn(f64) -> CliResult<T> + Sync) -> CliResult<Vec<T>> {
    let all: Vec<CliResult<T>> = xs.par_iter().map(|&x| f(x)).collect();
    all.into_iter().collect()
}

fn is_edge(x: f64) -> bool {
    x == 0.0 || x == 1.0
}

fn selberg_args(p: &Params) -> SelbergArgs {
    SelbergArgs::new(p.n, p.lambda1, p.lambda2, p.lambda)
}

fn require_unit_alpha(p: &Params, what: &str) -> CliResult<()> {
    if p.alpha != 1.0 {
        return Err(invalid(format!("{what} is defined at alpha = 1, got alpha = {}", p.alpha)));
    }
    Ok(())
}

fn indexed(prefix: &str, count: usize, suffix: &str) -> Vec<String> {
    (0..count).map(|i| format!("{prefix}{i}{suffix}")).collect()
}

fn report(job: &Job, columns: &[String]) -> Report {
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    Report::new(&job.command, job.resolved(), &cols)
}

pub struct Outcome {
    pub report: Report,
    pub tabular: bool,
}

fn done(report: Report, tabular: bool) -> CliResult<Outcome> {
    Ok(Outcome { report, tabular })
}

fn selberg_cmd(job: &mut Job) -> CliResult<Outcome> {
    let p = job.params()?;
    job.finish()?;
    let s = selberg(&selberg_args(&p))?;
    let mut r = report(job, &["value".into(), "log_abs".into(), "sign".into()]);
    r.row(vec![s.value().into(), s.logmag.into(), Cell::Int(s.sign as i64)]);
    r.diag("valid", p.validate().all());
    done(r, false)
}

fn series_cmd(job: &mut Job) -> CliResult<Outcome> {
    let p = job.params()?;
    let only = job.uint("k")?;
    if let Some(k) = only {
        if k > p.n {
            return Err(invalid(format!("k={k} exceeds N={}", p.n)));
        }
    }
    let ks: Vec<usize> = match only {
        Some(k) => vec![k],
        None => (0..=p.n).collect(),
    };
    let x = job.real("x")?;
    let mut sigmas = Vec::new();
    let mut resonant = Vec::new();
    let r = match x {
        Some(x) => {
            if !(x > 0.0 && x < 1.0) {
                return Err(invalid(format!("x must lie in (0, 1), got {x}")));
            }
            let tol = job.tol(assembly::DEFAULT_TOL)?;
            job.finish()?;
            let sols = ks.par_iter().map(|&k| frobenius_for_x(k, &p, x, tol)).collect::<Result<Vec<_>, _>>()?;
            let mut r = report(job, &["k", "order", "component", "value", "derivative", "tail"].map(String::from));
            for s in &sols {
                let v = eval_solution(s, x);
                for c in 0..=p.n {
                    r.row(vec![
                        s.k.into(),
                        s.order.into(),
                        c.into(),
                        v.value[c].into(),
                        v.derivative[c].into(),
                        v.tail.into(),
                    ]);
                }
                sigmas.push(s.sigma);
                resonant.push(s.resonant);
            }
            r
        }
        None => {
            let order = job.uint_or("order", 32)?;
            job.finish()?;
            let sols = ks.par_iter().map(|&k| frobenius(k, &p, order)).collect::<Result<Vec<_>, _>>()?;
            let mut r = report(job, &["k", "l", "component", "coefficient"].map(String::from));
            for s in &sols {
                for (l, pl) in s.coeffs.iter().enumerate() {
                    for (c, &v) in pl.iter().enumerate() {
                        r.row(vec![s.k.into(), l.into(), c.into(), v.into()]);
                    }
                }
                sigmas.push(s.sigma);
                resonant.push(s.resonant);
            }
            r
        }
    };
    let mut r = r;
    r.diag("k", json!(ks));
    r.diag("sigma", json!(sigmas));
    r.diag("resonant", json!(resonant));
    done(r, true)
}

fn eval_cmd(job: &mut Job) -> CliResult<Outcome> {
    let p = job.params()?;
    let (xs, tabular) = job.points(None)?;
    let tol = job.tol(assembly::DEFAULT_TOL)?;
    let normalized = job.flag("normalized")?;
    job.finish()?;
    if normalized {
        require_unit_alpha(&p, "the gap probability")?;
    }
    let mut cols = vec!["x".to_string()];
    cols.extend(indexed(if normalized { "E(" } else { "I_" }, p.n + 1, if normalized { ";x)" } else { "" }));
    let mut r = report(job, &cols);
    if normalized {
        let rows = per_point(&xs, |x| Ok(gap_probs_tol(x, &p, tol)?))?;
        for (x, g) in xs.iter().zip(rows) {
            r.row(std::iter::once(*x).chain(g).map(Cell::from).collect());
        }
        r.diag("meaning", "E(n;x): probability that exactly n points lie in (0, x)");
    } else {
        let rows = per_point(&xs, |x| Ok(split_integrals(x, &p, tol)?))?;
        let mut tail: f64 = 0.0;
        let (mut reflected, mut limit, mut terms) = (0usize, 0usize, 0usize);
        for (x, e) in xs.iter().zip(&rows) {
            r.row(std::iter::once(*x).chain(e.iter().map(|v| v.value)).map(Cell::from).collect());
            for v in e {
                tail = tail.max(v.tail_bound / v.value.abs().max(f64::MIN_POSITIVE));
                reflected += v.via_reflection as usize;
                limit += v.limit as usize;
                terms = terms.max(v.terms_used);
            }
        }
        r.diag("max_relative_tail", tail);
        r.diag("max_terms", terms);
        r.diag("reflected_evaluations", reflected);
        r.diag("lambda1_limit_evaluations", limit);
    }
    done(r, tabular)
}

fn dist_cmd(job: &mut Job) -> CliResult<Outcome> {
    let p = job.params()?;
    let (xs, tabular) = job.points(Some(Grid { min: 0.0, max: 1.0, points: 101 }))?;
    let tol = job.tol(assembly::DEFAULT_TOL)?;
    job.finish()?;
    require_unit_alpha(&p, "the order-statistic density")?;
    if let Some(x) = xs.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(invalid(format!("densities live on [0, 1], got x = {x}")));
    }
    let mut cols = vec!["x".to_string()];
    cols.extend(indexed("p(", p.n, ";x)"));
    let mut r = report(job, &cols);
    let rows = per_point(&xs, |x| {
        Ok(if is_edge(x) { order_stat_densities_at_edge(x, &p)? } else { order_stat_densities_tol(x, &p, tol)? })
    })?;
    for (x, d) in xs.iter().zip(rows) {
        r.row(std::iter::once(*x).chain(d).map(Cell::from).collect());
    }
    r.diag("index", "p(n;x) is the density of the (n+1)-st smallest of the N points");
    done(r, tabular)
}

fn moments_cmd(job: &mut Job) -> CliResult<Outcome> {
    let p = job.params()?;
    let mu = job.require_real("mu")?;
    let (xs, tabular) = job.points(None)?;
    let tol = job.tol(assembly::DEFAULT_TOL)?;
    let perturb_poles = job.flag("perturb-poles")?;
    job.finish()?;
    let opts = MomentOptions { perturb_poles, tol };
    let rows = per_point(&xs, |x| {
        Ok(if is_edge(x) {
            (moment_at_edge(x, mu, &p)?, 0.0, false)
        } else {
            let m = moment_average(x, mu, &p, opts)?;
            (m.value, m.tail_bound, m.limit)
        })
    })?;
    let mut r = report(job, &["x", "moment", "tail_bound"].map(String::from));
    let mut limit = 0usize;
    for (x, (v, t, l)) in xs.iter().zip(rows) {
        r.row(vec![(*x).into(), v.into(), t.into()]);
        limit += l as usize;
    }
    r.diag("lambda1_limit_evaluations", limit);
    done(r, tabular)
}

fn asymptotics_cmd(job: &mut Job) -> CliResult<Outcome> {
    let p = job.params()?;
    let mu = job.real("mu")?;
    let log_case = job.uint("log-case")?;
    job.finish()?;
    let a = match (mu, log_case) {
        (Some(mu), None) => moment_asymptotic(mu, &p)?,
        (None, Some(l)) => moment_asymptotic_log(l, &p)?,
        _ => return Err(invalid("asymptotics needs exactly one of --mu and --log-case")),
    };
    let cols = ["exponent", "coefficient", "log_factor", "l", "alpha"].map(String::from);
    let mut r = report(job, &cols);
    r.row(vec![
        a.exponent.into(),
        a.coefficient.value().into(),
        Cell::Text(a.log_factor.to_string()),
        a.l.into(),
        a.alpha.into(),
    ]);
    r.diag("law", if a.log_factor { "coefficient * x^exponent * log(1/x)" } else { "coefficient * x^exponent" });
    done(r, false)
}

fn nu(job: &mut Job) -> CliResult<usize> {
    let nu = job.require_uint("nu")?;
    if nu == 0 {
        return Err(invalid("nu must be at least 1"));
    }
    Ok(nu)
}

fn poly_cmd(job: &mut Job) -> CliResult<Outcome> {
    let p = job.params()?;
    let nu = nu(job)?;
    let points = job.optional_points()?;
    job.finish()?;
    let cp = char_polynomial(nu, &p)?;
    let deg = cp.degree();
    let (r, tabular) = match points {
        None => {
            let mut r = report(job, &["power".into(), "coefficient".into()]);
            for (l, c) in cp.coeffs.iter().enumerate() {
                r.row(vec![(deg - l).into(), (*c).into()]);
            }
            (r, false)
        }
        Some((xs, tabular)) => {
            let mut r = report(job, &["x".into(), "value".into()]);
            for x in xs {
                r.row(vec![x.into(), cp.eval(x).into()]);
            }
            (r, tabular)
        }
    };
    let mut r = r;
    r.diag("degree", deg);
    r.diag("truncation_residue", cp.truncation_residue);
    done(r, tabular)
}

fn zeros_cmd(job: &mut Job) -> CliResult<Outcome> {
    let p = job.params()?;
    let nu = nu(job)?;
    job.finish()?;
    let rep = poly_zeros_report(&char_polynomial(nu, &p)?)?;
    let mut roots = rep.roots.clone();
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut r = report(job, &["index".into(), "re".into(), "im".into()]);
    for (i, z) in roots.iter().enumerate() {
        // −0 and +0 are the same real root
        let im = if z.im == 0.0 { 0.0 } else { z.im };
        r.row(vec![i.into(), z.re.into(), im.into()]);
    }
    r.diag("count", roots.len());
    r.diag("residual", rep.residual);
    r.diag("pairing_error", rep.pairing_error);
    r.diag("precision_bits", rep.precision_bits);
    r.diag("sweeps", rep.sweeps);
    done(r, true)
}

fn monodromy_cmd(job: &mut Job) -> CliResult<Outcome> {
    let p = job.params()?;
    job.finish()?;
    let t = monodromy_triple(&p)?;
    let mut r = report(job, &["matrix", "row", "col", "re", "im"].map(String::from));
    for (name, m) in [("M0", &t.m0), ("M1", &t.m1), ("Minf", &t.minf)] {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                r.row(vec![name.into(), i.into(), j.into(), m[(i, j)].re.into(), m[(i, j)].im.into()]);
            }
        }
    }
    r.diag("product_residual", t.product_residual());
    r.diag("spectrum_residual", spectrum_residual(&t.m0, &p)?);
    r.diag("condition", t.condition);
    r.diag("det_m0_abs", t.m0.determinant().norm());
    done(r, false)
}

fn oracle_cmd(job: &mut Job) -> CliResult<Outcome> {
    let p = job.params()?;
    let quantity = job.choice("quantity", &["selberg", "iq", "moment"])?;
    let method = job.choice("method", &["quad", "mc"])?;
    let (q, x, mu) = match quantity {
        "iq" => (Some(job.require_uint("q")?), Some(job.require_real("x")?), None),
        "moment" => (None, Some(job.require_real("x")?), Some(job.require_real("mu")?)),
        _ => (None, None, None),
    };
    let res = if method == "quad" {
        let tol = job.tol(oracle::DEFAULT_TOL)?;
        job.finish()?;
        match quantity {
            "selberg" => oracle::quad_selberg(&p, tol)?,
            "iq" => oracle::quad_iq(q.unwrap(), x.unwrap(), &p, tol)?,
            _ => oracle::quad_moment(x.unwrap(), mu.unwrap(), &p, tol)?,
        }
    } else {
        let samples = job.uint_or("samples", oracle::DEFAULT_SAMPLES)?;
        let seed = job.seed(Some(0))?.expect("defaulted");
        job.finish()?;
        match quantity {
            "selberg" => oracle::mc_selberg(&p, samples, seed)?,
            "iq" => oracle::mc_iq(q.unwrap(), x.unwrap(), &p, samples, seed)?,
            _ => oracle::mc_moment(x.unwrap(), mu.unwrap(), &p, samples, seed)?,
        }
    };
    let mut r = report(job, &["value".into(), "error_estimate".into()]);
    r.row(vec![res.value.into(), res.error_estimate.into()]);
    r.diag("method", serde_json::to_value(res.method).expect("unit enum"));
    r.diag(if method == "quad" { "levels" } else { "samples" }, res.samples_or_levels);
    done(r, false)
}

/// Runs the checks, printing one line each as they finish; a report is
/// rendered only when a format or output file is asked for.
fn verify_cmd(job: &mut Job) -> CliResult<()> {
    let level = match job.choice("level", &["quick", "full"])? {
        "quick" => Level::Quick,
        _ => Level::Full,
    };
    let ids: Vec<usize> = match job.text("checks") {
        None => (1..=CHECK_NAMES.len()).collect(),
        Some(s) => s
            .split(',')
            .map(|t| match t.trim().parse::<usize>() {
                Ok(i) if (1..=CHECK_NAMES.len()).contains(&i) => Ok(i),
                _ => Err(invalid(format!("checks: expected numbers 1..={}, got {t:?}", CHECK_NAMES.len()))),
            })
            .collect::<CliResult<_>>()?,
    };
    job.finish()?;
    let table = job.output.is_some() || job.format.is_none();
    let mut outcomes = Vec::new();
    for id in &ids {
        let o = verify::run_check(*id, level);
        if table {
            println!("{o}");
        }
        outcomes.push(o);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if table {
        println!("{} of {} checks passed", outcomes.len() - failed, outcomes.len());
    }
    if job.output.is_some() || job.format.is_some() {
        let mut r = report(job, &["id", "name", "passed", "detail"].map(String::from));
        for o in &outcomes {
            r.row(vec![o.id.into(), o.name.into(), Cell::Text(o.passed.to_string()), o.detail.as_str().into()]);
        }
        r.diag("passed", outcomes.len() - failed);
        r.diag("failed", failed);
        write(job, &Outcome { report: r, tabular: false })?;
    }
    if failed > 0 {
        return Err(CliError::ChecksFailed { failed, total: outcomes.len() });
    }
    Ok(())
}

fn write(job: &Job, o: &Outcome) -> CliResult<()> {
    let format = job.format.unwrap_or(if o.tabular { Format::Csv } else { Format::Json });
    let text = match format {
        Format::Json => o.report.to_json(),
        Format::Csv => o.report.to_csv(),
    };
    emit(&text, job.output.as_deref())
}

pub fn run(job: &mut Job) -> CliResult<()> {
    let outcome = match job.command.as_str() {
        "selberg" => selberg_cmd(job)?,
        "series" => series_cmd(job)?,
        "eval" => eval_cmd(job)?,
        "dist" => dist_cmd(job)?,
        "moments" => moments_cmd(job)?,
        "asymptotics" => asymptotics_cmd(job)?,
        "poly" => poly_cmd(job)?,
        "zeros" => zeros_cmd(job)?,
        "monodromy" => monodromy_cmd(job)?,
        "oracle" => oracle_cmd(job)?,
        "verify" => return verify_cmd(job),
        other => return Err(invalid(format!("unknown command `{other}`"))),
    };
    write(job, &outcome)
}
