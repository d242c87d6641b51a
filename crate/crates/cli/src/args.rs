//! Flag definitions and the key-value config file. Both end up in one
//! string map keyed by long flag name; the command line wins over the file.

use std::collections::BTreeMap;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::error::{invalid, CliError, CliResult};

pub const COMMANDS: [&str; 11] =
    ["selberg", "series", "eval", "dist", "moments", "asymptotics", "poly", "zeros", "monodromy", "oracle", "verify"];

fn opt(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name).long(name).value_name("VALUE").help(help).allow_hyphen_values(true)
}

fn flag(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name).long(name).help(help).action(ArgAction::SetTrue)
}

fn params() -> Vec<Arg> {
    vec![
        opt("N", "number of points").value_name("N"),
        opt("lambda", "repulsion exponent; \"p/q\" or an integer selects the exact-lambda branches"),
        opt("l1", "exponent lambda1 of t (default 0)"),
        opt("l2", "exponent lambda2 of 1-t (default 0)"),
        opt("alpha", "exponent alpha of the split integrals (default 1)"),
    ]
}

fn io() -> Vec<Arg> {
    vec![
        opt("config", "key = value file supplying any of these options").value_name("PATH"),
        opt("output", "write the result here instead of stdout").value_name("PATH"),
        opt("format", "json or csv (default: csv for grids and root lists, json otherwise)"),
    ]
}

fn tol() -> Arg {
    opt("tol", "tolerance in (0, 1e-2]")
}

fn grid() -> Vec<Arg> {
    vec![opt("grid", "x grid as min:max:points (points >= 2)"), opt("x", "a single point")]
}

fn sub(name: &'static str, about: &'static str) -> Command {
    Command::new(name).about(about).args(io())
}

pub fn cli() -> Command {
    Command::new("selberg-fuchs")
        .version(selberg_fuchs::VERSION)
        .about("Selberg integrals, order statistics, moments, characteristic polynomials and monodromy")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(sub("selberg", "closed-form Selberg integral S_N").args(params()))
        .subcommand(
            sub("series", "Frobenius series about 0: coefficients, or values at --x")
                .args(params())
                .arg(opt("order", "number of series terms (default 32)"))
                .arg(opt("k", "only solution k"))
                .arg(tol())
                .arg(opt("x", "evaluate at x with the order chosen from --tol")),
        )
        .subcommand(
            sub("eval", "split integrals I_q(x), q = 0..N")
                .args(params())
                .args(grid())
                .arg(tol())
                .arg(flag("normalized", "divide by S_N: gap probabilities E_N(q;(0,x)) (needs alpha = 1)")),
        )
        .subcommand(
            sub("dist", "order-statistic densities p(n;x), n = 0..N-1 (p(n;x) is the (n+1)-st smallest)")
                .args(params())
                .args(grid())
                .arg(tol()),
        )
        .subcommand(
            sub("moments", "<prod |t_j - x|^(2 mu)> over the Selberg density")
                .args(params())
                .args(grid())
                .arg(opt("mu", "moment exponent"))
                .arg(tol())
                .arg(flag("perturb-poles", "evaluate log points through the lambda1 limit")),
        )
        .subcommand(
            sub("asymptotics", "leading small-x law of the moment")
                .args(params())
                .arg(opt("mu", "moment exponent"))
                .arg(opt("log-case", "the log case at alpha = -2 l lambda - lambda1, for this l")),
        )
        .subcommand(
            sub("poly", "<prod (x - t_j)^nu> as a polynomial; values with --x/--grid")
                .args(params())
                .args(grid())
                .arg(opt("nu", "power nu >= 1")),
        )
        .subcommand(
            sub("zeros", "all zeros of the characteristic-polynomial average")
                .args(params())
                .arg(opt("nu", "power nu >= 1")),
        )
        .subcommand(sub("monodromy", "monodromy matrices M0, M1, Minf and their checks").args(params()))
        .subcommand(
            sub("oracle", "brute-force integrals: tanh-sinh quadrature or Monte Carlo")
                .args(params())
                .arg(opt("quantity", "selberg, iq or moment"))
                .arg(opt("method", "quad or mc (default quad)"))
                .arg(opt("q", "index q for iq"))
                .arg(opt("x", "point for iq and moment"))
                .arg(opt("mu", "exponent for moment"))
                .arg(opt("samples", "Monte Carlo sample count (default 1000000)"))
                .arg(tol())
                .arg(opt("seed", "Monte Carlo seed (default 0)")),
        )
        .subcommand(
            sub("verify", "run the acceptance checks and print a pass/fail table")
                .arg(opt("level", "quick or full (default quick)"))
                .arg(opt("checks", "comma-separated check numbers (default all)")),
        )
        .subcommand(
            Command::new("run")
                .about("run the job described by a config file (its `command` key picks the computation)")
                .arg(opt("config", "key = value job file").value_name("PATH").required(true))
                .arg(opt("output", "override the file's output").value_name("PATH"))
                .arg(opt("format", "override the file's format")),
        )
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("config line {}: expected key = value, got {raw:?}", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(invalid(format!("config line {}: empty key", i + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(invalid(format!("config line {}: duplicate key {k}", i + 1)));
        }
    }
    Ok(out)
}

fn read_config(path: &str) -> CliResult<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(Path::new(path)).map_err(|e| CliError::io(path, e))?;
    parse_config(&text)
}

/// Values given on the command line, by long name.
fn given(m: &ArgMatches) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for id in m.ids() {
        let id = id.as_str();
        if m.value_source(id) != Some(ValueSource::CommandLine) {
            continue;
        }
        if let Ok(Some(true)) = m.try_get_one::<bool>(id) {
            out.insert(id.to_string(), "true".to_string());
        } else if let Some(mut raw) = m.get_raw(id) {
            if let Some(v) = raw.next() {
                out.insert(id.to_string(), v.to_string_lossy().into_owned());
            }
        }
    }
    out
}

/// The command and its merged options.
pub fn resolve(m: &ArgMatches) -> CliResult<(String, BTreeMap<String, String>)> {
    let (name, sub) = m.subcommand().expect("subcommand is required");
    let mut cli = given(sub);
    let mut merged = match cli.remove("config") {
        Some(path) => read_config(&path)?,
        None => BTreeMap::new(),
    };
    let command = if name == "run" {
        merged.remove("command").ok_or_else(|| invalid("config file has no `command` key"))?
    } else {
        if let Some(c) = merged.remove("command") {
            if c != name {
                return Err(invalid(format!("config file is for `{c}`, not `{name}`")));
            }
        }
        name.to_string()
    };
    if !COMMANDS.contains(&command.as_str()) {
        return Err(invalid(format!("unknown command `{command}`")));
    }
    merged.extend(cli);
    Ok((command, merged))
}
