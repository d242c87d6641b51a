//! End-to-end runs of the binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_selberg-fuchs"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Header and data lines of a CSV artefact.
fn csv_table(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let head = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| if c == "inf" { f64::INFINITY } else { c.parse().unwrap() }).collect())
        .collect();
    (head, rows)
}

fn ln_gamma_int(n: u32) -> f64 {
    (1..n).map(|k| (k as f64).ln()).sum()
}

#[test]
fn dist_median_column_matches_beta_density() {
    let o = run(&["dist", "--N", "5", "--lambda", "1/3", "--l1", "1", "--l2", "1", "--grid", "0:1:401"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("# selberg-fuchs "));
    assert!(text.contains("lambda=1/3"));
    let (head, rows) = csv_table(&text);
    assert_eq!(head, ["x", "p(0;x)", "p(1;x)", "p(2;x)", "p(3;x)", "p(4;x)"]);
    assert_eq!(rows.len(), 401);
    // the middle of five points has the Beta(8, 8) density
    let ln_b = 2.0 * ln_gamma_int(8) - ln_gamma_int(16);
    let mut worst: f64 = 0.0;
    for r in &rows {
        let x = r[0];
        let want = if x == 0.0 || x == 1.0 { 0.0 } else { (7.0 * (x * (1.0 - x)).ln() - ln_b).exp() };
        worst = worst.max((r[3] - want).abs());
        // densities are nonnegative everywhere, edges included
        assert!(r.iter().skip(1).all(|v| *v >= -1e-10));
    }
    assert!(worst < 1e-10, "max abs error {worst:e}");
}

#[test]
fn zeros_example_gives_conjugate_pairs() {
    let o = run(&["zeros", "--N", "10", "--lambda", "3", "--l1", "9", "--l2", "9", "--nu", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (head, rows) = csv_table(&stdout(&o));
    assert_eq!(head, ["index", "re", "im"]);
    assert_eq!(rows.len(), 200);
    for r in &rows {
        let partner = rows.iter().map(|s| (s[1] - r[1]).hypot(s[2] + r[2])).fold(f64::INFINITY, f64::min);
        assert!(partner < 1e-10, "root {} {} has no conjugate", r[1], r[2]);
    }
}

#[test]
fn repeat_runs_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["dist", "--N", "4", "--lambda", "0.7", "--l1", "0.5", "--l2", "1.5", "--grid", "0:1:64"];
    let mut outs = Vec::new();
    for (i, threads) in ["1", "4", "4"].iter().enumerate() {
        let path = dir.path().join(format!("out{i}.csv"));
        let o = bin()
            .args(args)
            .args(["--output", path.to_str().unwrap()])
            .env("SELBERG_FUCHS_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(o.stdout.is_empty());
        outs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[1], outs[2]);

    let mc = ["oracle", "--N", "2", "--lambda", "1", "--quantity", "selberg", "--method", "mc", "--samples", "20000"];
    let a = run(&[&mc[..], &["--seed", "5"]].concat());
    let b = run(&[&mc[..], &["--seed", "5"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_merges_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("job.conf");
    std::fs::write(&conf, "# density grid\ncommand = dist\nN = 3\nlambda = 1/2\nl1 = 2 # overridden\ngrid = 0:1:9\n")
        .unwrap();
    let c = conf.to_str().unwrap();
    let from_file = run(&["run", "--config", c]);
    let from_flags = run(&["dist", "--N", "3", "--lambda", "1/2", "--l1", "2", "--grid", "0:1:9"]);
    assert!(from_file.status.success(), "{}", stderr(&from_file));
    assert_eq!(from_file.stdout, from_flags.stdout);

    let overridden = run(&["dist", "--config", c, "--l1", "0.5", "--format", "json"]);
    assert!(overridden.status.success(), "{}", stderr(&overridden));
    let v: serde_json::Value = serde_json::from_slice(&overridden.stdout).unwrap();
    assert_eq!(v["params"]["l1"], 0.5);
    assert_eq!(v["params"]["lambda"], "1/2");
    assert_eq!(v["job"]["grid"], "0.0:1.0:9");
    assert_eq!(v["results"].as_array().unwrap().len(), 9);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn json_embeds_provenance() {
    let o = run(&["selberg", "--N", "3", "--lambda", "1/2"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["command"], "selberg");
    assert_eq!(v["params"]["N"], 3);
    assert_eq!(v["params"]["alpha"], 1.0);
    // S_3(0,0,1/2) = 1/30
    let s = v["results"][0]["value"].as_f64().unwrap();
    assert!((s - 1.0 / 30.0).abs() < 1e-15);
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn validation_failures_exit_2() {
    for args in [
        &["selberg", "--N", "0", "--lambda", "1"][..],
        &["selberg", "--N", "2"],
        &["selberg", "--N", "2", "--lambda", "1", "--frobnicate", "1"],
        &["dist", "--N", "2", "--lambda", "1", "--grid", "0:1:1"],
        &["dist", "--N", "2", "--lambda", "1", "--tol", "0.5"],
        &["dist", "--N", "2", "--lambda", "1", "--alpha", "2"],
        &["dist", "--N", "2", "--lambda", "1", "--format", "xml"],
        &["zeros", "--N", "2", "--lambda", "1", "--nu", "0"],
        &["eval", "--N", "2", "--lambda", "1"],
    ] {
        let o = run(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "command = selberg\nN = 2\nlambda = 1\ncolour = blue\n").unwrap();
    let o = run(&["run", "--config", conf.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("colour"));
    let o = bin().args(["selberg", "--N", "2", "--lambda", "1"]).env("SELBERG_FUCHS_THREADS", "0").output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn numerical_failures_exit_3_with_the_error_name() {
    // Γ(λ₁ + 1) at λ₁ = −2: a pole of the closed form
    let o = run(&["selberg", "--N", "1", "--lambda", "1", "--l1", "-2"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("error[PoleError]"));
}

#[test]
fn io_failures_exit_4() {
    let missing = Path::new("/nonexistent-dir/x.json");
    let o = run(&["selberg", "--N", "2", "--lambda", "1", "--output", missing.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    let o = run(&["run", "--config", "/nonexistent-dir/job.conf"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn verify_subset_passes_and_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("verify.json");
    let o = run(&["verify", "--checks", "1,4,9", "--output", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    let table = stdout(&o);
    assert_eq!(table.lines().filter(|l| l.starts_with("[PASS]")).count(), 3);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(v["results"].as_array().unwrap().len(), 3);
    assert_eq!(v["diagnostics"]["failed"], 0);
}

#[test]
fn verify_quick_runs_every_check_and_fails_on_the_unmet_ones() {
    let o = run(&["verify", "--level", "quick"]);
    let table = stdout(&o);
    let lines: Vec<&str> = table.lines().filter(|l| l.starts_with('[')).collect();
    assert_eq!(lines.len(), 11, "{table}");
    // the two asymptotic-regime criteria are not met; see the README
    assert_eq!(code(&o), 1);
    for l in &lines {
        let id: usize = l.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert_eq!(l.starts_with("[PASS]"), id <= 9, "{l}");
    }
}
