//! Rendering of a finished job: a JSON document or a CSV table under a
//! `#`-commented provenance header. Rendering is a pure function of the
//! job and its results (JSON keys keep insertion order), so equal jobs
//! give byte-identical output.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};
use crate::job::fmt_f64;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn json(&self) -> Value {
        match self {
            // JSON has no inf/nan; keep them readable instead of null
            Cell::Num(v) if !v.is_finite() => json!(fmt_f64(*v)),
            Cell::Num(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => fmt_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

pub struct Report {
    pub command: String,
    pub params: Map<String, Value>,
    pub job: Map<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub diagnostics: Map<String, Value>,
}

const PARAM_KEYS: [&str; 5] = ["N", "lambda", "l1", "l2", "alpha"];

impl Report {
    pub fn new(command: &str, resolved: &Map<String, Value>, columns: &[&str]) -> Report {
        let (params, job): (Map<_, _>, Map<_, _>) =
            resolved.clone().into_iter().partition(|(k, _)| PARAM_KEYS.contains(&k.as_str()));
        Report {
            command: command.to_string(),
            params,
            job,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            diagnostics: Map::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn diag(&mut self, key: &str, v: impl Into<Value>) {
        self.diagnostics.insert(key.to_string(), v.into());
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect()))
            .collect();
        let doc = json!({
            "command": self.command,
            "version": selberg_fuchs::VERSION,
            "params": self.params,
            "job": self.job,
            "results": rows,
            "diagnostics": self.diagnostics,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("plain JSON values");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let line =
            |m: &Map<String, Value>| m.iter().map(|(k, v)| format!("{k}={}", plain(v))).collect::<Vec<_>>().join(" ");
        let mut head = format!("# selberg-fuchs {}\n# command: {}\n", selberg_fuchs::VERSION, self.command);
        if !self.params.is_empty() {
            head += &format!("# params: {}\n", line(&self.params));
        }
        if !self.job.is_empty() {
            head += &format!("# job: {}\n", line(&self.job));
        }
        for (k, v) in &self.diagnostics {
            head += &format!("# {k}: {}\n", plain(v));
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells");
        head + &body
    }
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn emit(text: &str, output: Option<&str>) -> CliResult<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::io("stdout", e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut m = Map::new();
        m.insert("N".into(), json!(2));
        m.insert("tol".into(), json!(1e-14));
        let mut r = Report::new("dist", &m, &["x", "p(0;x)"]);
        r.row(vec![0.0.into(), f64::INFINITY.into()]);
        r.row(vec![0.5.into(), 1.25.into()]);
        r.diag("note", "0-based");
        r
    }

    #[test]
    fn csv_layout() {
        let s = sample().to_csv();
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# selberg-fuchs "));
        assert!(lines.contains(&"# params: N=2"));
        assert!(lines.contains(&"# job: tol=1e-14"));
        assert_eq!(&lines[lines.len() - 3..], ["x,p(0;x)", "0.0,inf", "0.5,1.25"]);
    }

    #[test]
    fn json_layout() {
        let v: Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["params"]["N"], 2);
        assert_eq!(v["job"]["tol"], 1e-14);
        assert_eq!(v["results"][0]["p(0;x)"], "inf");
        assert_eq!(v["results"][1]["p(0;x)"], 1.25);
    }
}
