use std::path::Path;
use std::process::{Command, Output};

use spin_core::distributions::{draw_iid, TestDistribution};
use spin_core::rng::RngStream;

fn spin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spin")).args(args).output().unwrap()
}

fn write_draws(dir: &Path, name: &str, values: &[f64]) -> String {
    let path = dir.join(name);
    let text: String = values.iter().map(|v| format!("{v}\n")).collect();
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn spin_on_normal_draws_is_near_pm_1_96() {
    let dir = tempfile::tempdir().unwrap();
    let draws = draw_iid(&TestDistribution::STANDARD_NORMAL, 500, &mut RngStream::new(11));
    let input = write_draws(dir.path(), "normal.txt", &draws);
    let v = json(&spin(&["interval", "--input", &input, "--method", "spin", "--json"]));
    assert_eq!(v["schema"], 1);
    let r = &v["results"][0];
    assert_eq!(r["method"], "spin");
    assert_eq!(r["n"], 500);
    assert_eq!(r["alpha"], 0.05);
    // Spin RMSE at n = 500 is about 0.1.
    assert!((r["lower"].as_f64().unwrap() + 1.96).abs() < 0.3, "{r}");
    assert!((r["upper"].as_f64().unwrap() - 1.96).abs() < 0.3, "{r}");
    assert_eq!(r["diagnostics"]["bandwidth"], 22);
    assert_eq!(r["diagnostics"]["dropped_replicates"], 0);
}

#[test]
fn shortest_on_five_points() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_draws(dir.path(), "five.txt", &[0.0, 1.0, 2.0, 3.0, 10.0]);
    let v = json(&spin(&["interval", "--input", &input, "--method", "shortest", "--alpha", "0.2", "--json"]));
    let r = &v["results"][0];
    assert_eq!(r["lower"], 0.0);
    assert_eq!(r["upper"], 3.0);
    assert_eq!(r["diagnostics"]["lower_index"], 1);
    assert_eq!(r["diagnostics"]["upper_index"], 4);
}

#[test]
fn all_methods_in_text_mode() {
    let dir = tempfile::tempdir().unwrap();
    let draws = draw_iid(&TestDistribution::GAMMA3, 300, &mut RngStream::new(12));
    let input = write_draws(dir.path(), "g.txt", &draws);
    let mut args = vec!["interval", "--input", input.as_str(), "--bootstrap", "10"];
    for m in ["spin", "shortest", "central", "central-qp", "gaussian"] {
        args.extend(["--method", m]);
    }
    let out = spin(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    for m in ["spin", "shortest", "central", "central-qp", "gaussian"] {
        assert!(text.lines().any(|l| l.starts_with(m)), "{text}");
    }
}

#[test]
fn json_is_deterministic_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let draws = draw_iid(&TestDistribution::T5, 200, &mut RngStream::new(13));
    let input = write_draws(dir.path(), "t.txt", &draws);
    let run = |seed: &str| spin(&["interval", "--input", &input, "--json", "--seed", seed, "--bootstrap", "8"]).stdout;
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
}

#[test]
fn bounded_exponential() {
    let dir = tempfile::tempdir().unwrap();
    let draws = draw_iid(&TestDistribution::EXP1, 500, &mut RngStream::new(14));
    let input = write_draws(dir.path(), "e.txt", &draws);
    let v = json(&spin(&["interval", "--input", &input, "--lower-bound", "0", "--json"]));
    let lower = v["results"][0]["lower"].as_f64().unwrap();
    assert!((0.0..0.05).contains(&lower), "{lower}");
    assert_eq!(v["results"][0]["diagnostics"]["n"], 501);

    let out = spin(&["interval", "--input", &input, "--lower-bound", "0.5"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bound"));
}

#[test]
fn compat_and_bandwidth_flags() {
    let dir = tempfile::tempdir().unwrap();
    let draws = draw_iid(&TestDistribution::STANDARD_NORMAL, 300, &mut RngStream::new(15));
    let input = write_draws(dir.path(), "n.txt", &draws);
    let base = json(&spin(&["interval", "--input", &input, "--json", "--bootstrap", "5"]));
    let compat = json(&spin(&[
        "interval", "--input", &input, "--json", "--bootstrap", "5", "--compat", "paper-matrix,paper-qpp",
    ]));
    assert_ne!(base["results"][0]["lower"], compat["results"][0]["lower"]);
    let fixed = json(&spin(&["interval", "--input", &input, "--json", "--bootstrap", "5", "--bandwidth", "8"]));
    assert_eq!(fixed["results"][0]["diagnostics"]["bandwidth"], 8);
    assert_eq!(spin(&["interval", "--input", &input, "--bandwidth", "wide"]).status.code(), Some(2));
    assert_eq!(spin(&["interval", "--input", &input, "--compat", "other"]).status.code(), Some(2));
}

#[test]
fn missing_file_fails_with_diagnostic() {
    let out = spin(&["interval", "--input", "/nonexistent/draws.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cannot read input"), "{err}");
}

#[test]
fn malformed_line_is_reported_by_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "1.0\n2.0\nthree\n4.0\n").unwrap();
    let out = spin(&["interval", "--input", path.to_str().unwrap(), "--method", "shortest"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn crlf_csv_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("draws.csv");
    let body: String = (1..=20).map(|i| format!("{i}\r\n")).collect();
    std::fs::write(&path, format!("theta\r\n{body}")).unwrap();
    let v = json(&spin(&["interval", "--input", path.to_str().unwrap(), "--method", "central", "--json"]));
    assert_eq!(v["results"][0]["n"], 20);
}

#[test]
fn too_few_draws_for_spin() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_draws(dir.path(), "few.txt", &[1.0, 2.0, 3.0, 4.0, 5.0]);
    let out = spin(&["interval", "--input", &input, "--method", "spin"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("draws"));
}

#[test]
fn bench_writes_csv_raw_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = spin(&[
        "bench", "--dist", "normal,gibbs", "--n", "100", "--reps", "20", "--methods", "shortest,spin", "--bootstrap", "5",
        "--out", out_dir.to_str().unwrap(), "--dump-raw", "--thin", "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "cell_id,dist,n,alpha,method,endpoint,rmse,bias,variance,coverage_mean,efficiency,mc_stderr_rmse,failures"
    );
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 3);
    let raw = std::fs::read_to_string(out_dir.join("raw.csv")).unwrap();
    assert_eq!(raw.lines().count(), 1 + 2 * 20 * 2 * 2);
    assert!(out_dir.join("efficiency-normal-a0.05.svg").exists());
    assert!(out_dir.join("coverage-gibbs-n100-a0.05.svg").exists());
    assert!(out_dir.join("bias-variance-normal-n100-a0.05.svg").exists());
}

#[test]
fn bench_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out_dir = dir.path().join(name);
        let out = spin(&[
            "bench", "--dist", "t5", "--n", "80", "--reps", "12", "--bootstrap", "4", "--no-plots", "--threads", threads,
            "--out", out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        std::fs::read(out_dir.join("report.csv")).unwrap()
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "3"));
}

#[test]
fn bench_rejects_bad_grids() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("x");
    let o = out_dir.to_str().unwrap();
    assert_eq!(spin(&["bench", "--reps", "0", "--out", o]).status.code(), Some(2));
    assert_eq!(spin(&["bench", "--n", "5", "--out", o]).status.code(), Some(2));
    assert_eq!(spin(&["bench", "--methods", "best", "--out", o]).status.code(), Some(2));
    assert_eq!(spin(&["bench", "--dist", "cauchy", "--out", o]).status.code(), Some(1));
    assert_eq!(spin(&["bench", "--alpha", "1.5", "--out", o]).status.code(), Some(1));
}
