use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use rmab_cli::{execute, run, Cli, EXIT_BUDGET, EXIT_CONDITIONS, EXIT_OK, EXIT_PARSE, EXIT_VERIFY};
use serde_json::Value;

const INSTANCE: &[&str] = &[
    "--n", "3", "--k", "1", "--horizon", "3", "--beta", "0.9", "--p01", "0.3", "--p11", "0.7",
    "--epsilon", "0.1", "--initial", "0.6,0.5,0.4",
];

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn rmab(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["rmab", "--out", out.to_str().unwrap()];
    argv.extend_from_slice(args);
    run(argv)
}

fn with_instance<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    [INSTANCE, extra].concat()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn check_reports_conditions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("check.json");
    assert_eq!(rmab(&out, &with_instance(&["check"])), EXIT_OK);
    let v = json(&out);
    assert_eq!(v["all_ok"], true);
    assert!(v["beta_bound"].as_f64().unwrap() > 1.0);

    let args = [INSTANCE, &["--epsilon", "0.3", "check"]].concat();
    assert_eq!(rmab(&out, &args), EXIT_CONDITIONS);
    assert_eq!(json(&out)["epsilon_ok"], false);
}

#[test]
fn shipped_configs_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    let st = config("sum-throughput.toml");
    let st = st.to_str().unwrap();
    assert_eq!(rmab(&out, &["-c", st, "check"]), EXIT_OK);
    assert_eq!(rmab(&out, &["-c", st, "solve"]), EXIT_OK);
    assert!(json(&out)["gap"].as_f64().unwrap().abs() <= 1e-9);
    let any = config("any-success.toml");
    assert_eq!(rmab(&out, &["-c", any.to_str().unwrap(), "check"]), EXIT_OK);
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    assert_eq!(rmab(&out, &["check", "--bogus"]), EXIT_PARSE);
    assert_eq!(rmab(&out, &["--n", "3", "check"]), EXIT_PARSE);
    assert_eq!(rmab(&out, &with_instance(&["--p11", "0.2", "check"])), EXIT_PARSE);
    assert_eq!(rmab(&out, &with_instance(&["--reward", "max", "check"])), EXIT_PARSE);
    assert_eq!(rmab(&out, &with_instance(&["--threads", "0", "check"])), EXIT_PARSE);

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[instance]\nn = 3\nk = \"one\"\n").unwrap();
    assert_eq!(rmab(&out, &["-c", bad.to_str().unwrap(), "check"]), EXIT_PARSE);
    assert_eq!(rmab(&out, &["-c", "/nonexistent/x.toml", "check"]), EXIT_PARSE);
    assert!(!out.exists());
}

#[test]
fn solve_outputs_values_and_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solve.json");
    assert_eq!(rmab(&out, &with_instance(&["solve"])), EXIT_OK);
    let v = json(&out);
    let my = v["myopic_value"].as_f64().unwrap();
    let opt = v["optimal_value"].as_f64().unwrap();
    assert!(opt >= my - 1e-12);
    assert_eq!(v["gap"].as_f64().unwrap(), opt - my);
    assert_eq!(v["first_optimal_action"], serde_json::json!([0]));

    let args = [INSTANCE, &["--horizon", "1", "solve"]].concat();
    assert_eq!(rmab(&out, &args), EXIT_OK);
    assert_eq!(json(&out)["gap"].as_f64().unwrap(), 0.0);
}

#[test]
fn budget_exceeded_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solve.json");
    assert_eq!(rmab(&out, &with_instance(&["solve", "--budget", "10"])), EXIT_BUDGET);
    assert!(!out.exists());
}

#[test]
fn verify_passes_for_single_channel_sensing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify.json");
    assert_eq!(rmab(&out, &with_instance(&["verify", "--trials", "300"])), EXIT_OK);
    let v = json(&out);
    assert_eq!(v["passed"], true);
    assert!(v["theorem"]["passed"].as_bool().unwrap());
}

#[test]
fn verify_failure_writes_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify.json");
    let artifacts = dir.path().join("artifacts");
    let args = with_instance(&[
        "verify",
        "--trials",
        "300",
        "--inject-phi-fault",
        "3",
        "--artifact-dir",
        artifacts.to_str().unwrap(),
    ]);
    assert_eq!(rmab(&out, &args), EXIT_VERIFY);
    assert_eq!(json(&out)["passed"], false);
    let found: Vec<_> = fs::read_dir(&artifacts).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(!found.is_empty());
    let a = json(&artifacts.join(&found[0]));
    assert!(a["violation"]["beliefs"].is_array());
    assert!(a["violation"]["instance"]["p01"].is_number());
}

#[test]
fn verify_with_zero_trials_is_vacuous() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify.json");
    assert_eq!(rmab(&out, &with_instance(&["verify", "--trials", "0"])), EXIT_OK);
    let v = json(&out);
    assert!(v["warnings"][0].as_str().unwrap().contains("vacuous"));
}

#[test]
fn simulate_writes_result_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim.json");
    let trace = dir.path().join("trace.csv");
    let args = with_instance(&[
        "simulate",
        "--episodes",
        "2000",
        "--seed",
        "3",
        "--policy",
        "fixed",
        "--channels",
        "2",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(rmab(&out, &args), EXIT_OK);
    let v = json(&out);
    assert_eq!(v["episodes"], 2000);
    assert!(v["std_error"].as_f64().unwrap() > 0.0);
    let csv = fs::read_to_string(&trace).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("t,"));

    let args = with_instance(&["simulate", "--policy", "fixed"]);
    assert_eq!(rmab(&out, &args), EXIT_PARSE);
}

#[test]
fn simulate_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let args = |seed| with_instance(&["simulate", "--episodes", "5000", "--seed", seed]);
    assert_eq!(rmab(&a, &args("1")), EXIT_OK);
    assert_eq!(rmab(&b, &[&["--threads", "3"][..], &args("1")].concat()), EXIT_OK);
    assert_eq!(rmab(&c, &args("2")), EXIT_OK);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn sweep_example_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let cfg = config("sweep-sum-throughput.toml");
    assert_eq!(rmab(&out, &["-c", cfg.to_str().unwrap(), "sweep"]), EXIT_OK);
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let eps = header.iter().position(|h| *h == "epsilon").unwrap();
    let class = header.len() - 1;
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 121);
    let bound = 0.3 * 0.3 / (0.7 * 0.7);
    for r in &rows {
        let e: f64 = r[eps].parse().unwrap();
        let want = if e < bound { "PROVEN" } else { "EMPIRICAL-OPTIMAL" };
        assert_eq!(r[class], want, "{r:?}");
    }
}

#[test]
fn sweep_budget_truncates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let cfg = config("sweep-sum-throughput.toml");
    assert_eq!(rmab(&out, &["-c", cfg.to_str().unwrap(), "sweep", "--budget", "100"]), EXIT_OK);
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.lines().count() < 122);
    assert!(csv.trim_end().ends_with("TRUNCATED"));
}

#[test]
fn out_dir_names_default_files() {
    let dir = tempfile::tempdir().unwrap();
    let cli = Cli::parse_from([&["rmab"], INSTANCE, &["solve"]].concat());
    assert_eq!(execute(&cli, Some(dir.path())).unwrap(), EXIT_OK);
    assert!(json(&dir.path().join("solve.json"))["optimal_value"].is_number());

    let explicit = dir.path().join("nested/own.json");
    let cli = Cli::parse_from(
        [&["rmab", "--out", explicit.to_str().unwrap()], INSTANCE, &["check"]].concat(),
    );
    assert_eq!(execute(&cli, Some(dir.path())).unwrap(), EXIT_OK);
    assert!(explicit.exists());
    assert!(!dir.path().join("check.json").exists());
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(["rmab", "--version"]), EXIT_OK);
    assert_eq!(run(["rmab", "solve", "--help"]), EXIT_OK);
}
