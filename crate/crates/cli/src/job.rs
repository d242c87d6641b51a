//! Typed job spec built from the merged option map. Every key must be
//! consumed by the command, otherwise the job is rejected.

use std::collections::BTreeMap;

use selberg_fuchs::{Params, Rational};
use serde_json::{json, Map, Value};

use crate::error::{invalid, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Grid {
    pub fn parse(s: &str) -> CliResult<Grid> {
        let bad = || invalid(format!("grid must be min:max:points, got {s:?}"));
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [a, b, n] = parts[..] else { return Err(bad()) };
        let min = parse_real("grid min", a)?;
        let max = parse_real("grid max", b)?;
        let points: usize = n.parse().map_err(|_| bad())?;
        if points < 2 {
            return Err(invalid("grid needs at least 2 points"));
        }
        if min >= max {
            return Err(invalid(format!("grid min {min} must be below max {max}")));
        }
        Ok(Grid { min, max, points })
    }

    /// Evenly spaced; both endpoints are hit exactly.
    pub fn xs(&self) -> Vec<f64> {
        let n = self.points - 1;
        (0..=n)
            .map(|i| if i == n { self.max } else { self.min + (self.max - self.min) * (i as f64 / n as f64) })
            .collect()
    }
}

impl std::fmt::Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", fmt_f64(self.min), fmt_f64(self.max), self.points)
    }
}

/// Finite real; `p/q` is accepted too.
pub fn parse_real(name: &str, s: &str) -> CliResult<f64> {
    let v = match s.split_once('/') {
        Some(_) => s.parse::<Rational>().map(Rational::to_f64).ok(),
        None => s.parse::<f64>().ok(),
    };
    match v {
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(invalid(format!("{name}: not a finite number: {s:?}"))),
    }
}

/// Shortest round-trip text for a float.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        let mut b = ryu::Buffer::new();
        b.format_finite(v).to_string()
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub struct Job {
    pub command: String,
    opts: BTreeMap<String, String>,
    /// Resolved settings echoed into the output, defaults included.
    resolved: Map<String, Value>,
    pub output: Option<String>,
    pub format: Option<Format>,
}

impl Job {
    pub fn new(command: String, mut opts: BTreeMap<String, String>) -> CliResult<Job> {
        let output = opts.remove("output");
        let format = match opts.remove("format").as_deref() {
            None => None,
            Some("json") => Some(Format::Json),
            Some("csv") => Some(Format::Csv),
            Some(f) => return Err(invalid(format!("format must be json or csv, got {f:?}"))),
        };
        Ok(Job { command, opts, resolved: Map::new(), output, format })
    }

    fn record(&mut self, key: &str, v: Value) {
        self.resolved.insert(key.to_string(), v);
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.opts.remove(key)
    }

    pub fn real(&mut self, key: &str) -> CliResult<Option<f64>> {
        let v = self.take(key).map(|s| parse_real(key, &s)).transpose()?;
        if let Some(v) = v {
            self.record(key, json!(v));
        }
        Ok(v)
    }

    pub fn require_real(&mut self, key: &str) -> CliResult<f64> {
        self.real(key)?.ok_or_else(|| invalid(format!("--{key} is required for {}", self.command)))
    }

    pub fn uint(&mut self, key: &str) -> CliResult<Option<usize>> {
        let v = match self.take(key) {
            None => None,
            Some(s) => Some(s.parse::<usize>().map_err(|_| invalid(format!("{key}: not a count: {s:?}")))?),
        };
        if let Some(v) = v {
            self.record(key, json!(v));
        }
        Ok(v)
    }

    pub fn uint_or(&mut self, key: &str, default: usize) -> CliResult<usize> {
        let v = self.uint(key)?.unwrap_or(default);
        self.record(key, json!(v));
        Ok(v)
    }

    pub fn require_uint(&mut self, key: &str) -> CliResult<usize> {
        self.uint(key)?.ok_or_else(|| invalid(format!("--{key} is required for {}", self.command)))
    }

    pub fn flag(&mut self, key: &str) -> CliResult<bool> {
        let v = match self.take(key).as_deref() {
            None | Some("false") => false,
            Some("true") => true,
            Some(s) => return Err(invalid(format!("{key}: expected true or false, got {s:?}"))),
        };
        self.record(key, json!(v));
        Ok(v)
    }

    /// One of `choices`; the first is the default.
    pub fn choice(&mut self, key: &str, choices: &[&'static str]) -> CliResult<&'static str> {
        let v = match self.take(key) {
            None => choices[0],
            Some(s) => *choices
                .iter()
                .find(|c| **c == s)
                .ok_or_else(|| invalid(format!("{key} must be one of {}, got {s:?}", choices.join("|"))))?,
        };
        self.record(key, json!(v));
        Ok(v)
    }

    pub fn text(&mut self, key: &str) -> Option<String> {
        let v = self.take(key);
        if let Some(v) = &v {
            self.record(key, json!(v));
        }
        v
    }

    pub fn tol(&mut self, default: f64) -> CliResult<f64> {
        let t = self.real("tol")?.unwrap_or(default);
        if !(t > 0.0 && t <= 1e-2) {
            return Err(invalid(format!("tol must lie in (0, 1e-2], got {t}")));
        }
        self.record("tol", json!(t));
        Ok(t)
    }

    pub fn seed(&mut self, default: Option<u64>) -> CliResult<Option<u64>> {
        let v = match self.take("seed") {
            None => default,
            Some(s) => Some(s.parse::<u64>().map_err(|_| invalid(format!("seed: not an integer: {s:?}")))?),
        };
        if let Some(v) = v {
            self.record("seed", json!(v));
        }
        Ok(v)
    }

    pub fn grid(&mut self) -> CliResult<Option<Grid>> {
        let g = self.take("grid").map(|s| Grid::parse(&s)).transpose()?;
        if let Some(g) = g {
            self.record("grid", json!(g.to_string()));
        }
        Ok(g)
    }

    /// `--x` or `--grid`, exactly one.
    pub fn points(&mut self, default: Option<Grid>) -> CliResult<(Vec<f64>, bool)> {
        let g = self.grid()?;
        let x = self.real("x")?;
        match (g, x, default) {
            (Some(_), Some(_), _) => Err(invalid("give either --x or --grid, not both")),
            (Some(g), None, _) => Ok((g.xs(), true)),
            (None, Some(x), _) => Ok((vec![x], false)),
            (None, None, Some(g)) => {
                self.record("grid", json!(g.to_string()));
                Ok((g.xs(), true))
            }
            (None, None, None) => Err(invalid(format!("{} needs --x or --grid", self.command))),
        }
    }

    /// Like [`Job::points`] but neither is required.
    pub fn optional_points(&mut self) -> CliResult<Option<(Vec<f64>, bool)>> {
        if self.opts.contains_key("x") || self.opts.contains_key("grid") {
            self.points(None).map(Some)
        } else {
            Ok(None)
        }
    }

    /// The parameter tuple. `lambda` given as an integer or `p/q` is exact.
    pub fn params(&mut self) -> CliResult<Params> {
        let n = self.require_uint("N")?;
        if n == 0 {
            return Err(invalid("N must be at least 1"));
        }
        let ls = self.take("lambda").ok_or_else(|| invalid(format!("--lambda is required for {}", self.command)))?;
        let mut real =
            |key: &str, default: f64| -> CliResult<f64> { self.take(key).map_or(Ok(default), |s| parse_real(key, &s)) };
        let (l1, l2, alpha) = (real("l1", 0.0)?, real("l2", 0.0)?, real("alpha", 1.0)?);
        let p = match ls.parse::<Rational>() {
            Ok(r) => {
                self.record("lambda", json!(r.to_string()));
                Params::with_rational_lambda(n, l1, l2, r, alpha)
            }
            Err(_) => {
                let l = parse_real("lambda", &ls)?;
                self.record("lambda", json!(l));
                Params::new(n, l1, l2, l, alpha)
            }
        };
        self.record("l1", json!(l1));
        self.record("l2", json!(l2));
        self.record("alpha", json!(alpha));
        p.check_structure()?;
        Ok(p)
    }

    /// Rejects anything the command did not consume.
    pub fn finish(&self) -> CliResult<()> {
        match self.opts.keys().next() {
            None => Ok(()),
            Some(k) => Err(invalid(format!("option `{k}` does not apply to {}", self.command))),
        }
    }

    pub fn resolved(&self) -> &Map<String, Value> {
        &self.resolved
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(kv: &[(&str, &str)]) -> Job {
        let m = kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        Job::new("dist".into(), m).unwrap()
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let g = Grid::parse("0:1:401").unwrap();
        let xs = g.xs();
        assert_eq!(xs.len(), 401);
        assert_eq!((xs[0], xs[200], xs[400]), (0.0, 0.5, 1.0));
        assert!(Grid::parse("0:1:1").is_err());
        assert!(Grid::parse("1:0:5").is_err());
        assert!(Grid::parse("0:1").is_err());
    }

    #[test]
    fn lambda_exactness() {
        let p = job(&[("N", "5"), ("lambda", "1/3")]).params().unwrap();
        assert_eq!(p.lambda_rational, Some(Rational::new(1, 3).unwrap()));
        let p = job(&[("N", "5"), ("lambda", "2")]).params().unwrap();
        assert!(p.lambda_rational.unwrap().is_integer());
        let p = job(&[("N", "5"), ("lambda", "0.7")]).params().unwrap();
        assert_eq!((p.lambda, p.lambda_rational), (0.7, None));
        assert!(job(&[("N", "0"), ("lambda", "1")]).params().is_err());
        assert!(job(&[("N", "2"), ("lambda", "inf")]).params().is_err());
    }

    #[test]
    fn tolerance_range_and_leftovers() {
        assert!(job(&[("tol", "0.1")]).tol(1e-14).is_err());
        assert!(job(&[("tol", "0")]).tol(1e-14).is_err());
        assert_eq!(job(&[("tol", "1e-8")]).tol(1e-14).unwrap(), 1e-8);
        let j = job(&[("bogus", "1")]);
        assert!(j.finish().is_err());
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }
}
