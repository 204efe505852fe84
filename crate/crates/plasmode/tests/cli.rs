//! End-to-end checks of the command-line binary: exit codes, output
//! formats, and run-to-run determinism of a full study.

use plasmode::copula::{MarginalSpec, SynthesisParams};
use plasmode::datagen::{CovariateTerm, ExposureModel, OutcomeModel};
use plasmode::ergm::{ErgmModel, TermSpec};
use std::path::Path;
use std::process::{Command, Output};

fn plasmode(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plasmode"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn version_and_help_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let v = plasmode(&["--version"], dir.path());
    assert_eq!(v.status.code(), Some(0));
    assert!(stdout(&v).contains(env!("CARGO_PKG_VERSION")));
    let h = plasmode(&["--help"], dir.path());
    assert_eq!(h.status.code(), Some(0));
    for sub in ["run-study", "simulate-graph", "fit-ergm", "gof", "synth", "summarize"] {
        assert!(stdout(&h).contains(sub), "help is missing {sub}");
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(plasmode(&["no-such-command"], dir.path()).status.code(), Some(1));
    assert_eq!(plasmode(&["summarize"], dir.path()).status.code(), Some(1));
}

#[test]
fn runtime_faults_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = plasmode(&["summarize", "missing.edges"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn summarize_reports_triangle_stats() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tri.edges"), "0 1\n0 2\n1 2\n").unwrap();
    let out = plasmode(&["summarize", "tri.edges"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("nodes          3"), "{text}");
    assert!(text.contains("edges          3"), "{text}");
    assert!(text.contains("density        1"), "{text}");
    assert!(text.contains("transitivity   1"), "{text}");
}

#[test]
fn simulate_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    ErgmModel::new(vec![TermSpec::Edges], vec![-1.5])
        .unwrap()
        .write_json(dir.path().join("model.json"))
        .unwrap();
    std::fs::write(
        dir.path().join("attrs.csv"),
        {
            let mut s = String::from("id\n");
            for i in 0..80 {
                s.push_str(&format!("{i}\n"));
            }
            s
        },
    )
    .unwrap();
    let sim = plasmode(
        &["simulate-graph", "model.json", "attrs.csv", "--seed", "7"],
        dir.path(),
    );
    assert_eq!(sim.status.code(), Some(0), "{}", String::from_utf8_lossy(&sim.stderr));
    std::fs::write(dir.path().join("sim.edges"), &sim.stdout).unwrap();

    std::fs::write(dir.path().join("terms.json"), r#"[{"kind":"edges"}]"#).unwrap();
    let fit = plasmode(&["fit-ergm", "sim.edges", "attrs.csv", "terms.json"], dir.path());
    assert_eq!(fit.status.code(), Some(0), "{}", String::from_utf8_lossy(&fit.stderr));
    assert!(stdout(&fit).contains("edges"), "{}", stdout(&fit));
}

fn write_tiny_study(base: &Path) {
    ErgmModel::new(vec![TermSpec::Edges], vec![-1.2])
        .unwrap()
        .write_json(base.join("net.json"))
        .unwrap();
    SynthesisParams {
        variables: vec![
            MarginalSpec::new("Z", vec!["No".into(), "Yes".into()], vec![0.5, 0.5]).unwrap(),
            MarginalSpec::new("A", vec!["No".into(), "Yes".into()], vec![0.5, 0.5]).unwrap(),
            MarginalSpec::new("B", vec!["No".into(), "Yes".into()], vec![0.6, 0.4]).unwrap(),
        ],
        spearman: vec![
            vec![1.0, 0.1, 0.0],
            vec![0.1, 1.0, 0.1],
            vec![0.0, 0.1, 1.0],
        ],
    }
    .write_json(base.join("synth.json"))
    .unwrap();
    ExposureModel {
        intercept: -0.3,
        covariates: vec![CovariateTerm {
            column: "A".into(),
            level: Some("Yes".into()),
            coef: 0.5,
        }],
        school_variance: 0.1,
    }
    .write_json(base.join("exposure.json"))
    .unwrap();
    OutcomeModel {
        intercept: 0.0,
        exposure: 0.4,
        neighborhood: 0.3,
        interaction: -0.1,
        covariates: vec![CovariateTerm {
            column: "A".into(),
            level: Some("Yes".into()),
            coef: 0.5,
        }],
        residual_variance: 0.3,
        school_variance: 0.05,
    }
    .write_json(base.join("outcome.json"))
    .unwrap();
    std::fs::write(
        base.join("study.json"),
        r#"{
  "master_seed": 11,
  "replicates": 2,
  "exposure_scheme": "logistic",
  "alpha_grid": [0.5],
  "school_types": [
    {"name": "t", "size": 30, "replicas": 2, "ergm": "net.json", "synthesis": "synth.json"}
  ],
  "exposure_model": "exposure.json",
  "outcome_model": "outcome.json",
  "scenarios": [{"name": "none", "drop": []}],
  "output_dir": "out"
}"#,
    )
    .unwrap();
}

#[test]
fn run_study_is_deterministic_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    write_tiny_study(dir.path());
    let first = plasmode(&["run-study", "study.json"], dir.path());
    assert_eq!(
        first.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let metrics = dir.path().join("out/metrics.csv");
    let bytes_first = std::fs::read(&metrics).unwrap();
    assert!(!bytes_first.is_empty());

    let second = plasmode(&["run-study", "study.json"], dir.path());
    assert_eq!(second.status.code(), Some(0));
    let bytes_second = std::fs::read(&metrics).unwrap();
    assert_eq!(bytes_first, bytes_second, "metrics.csv changed between runs");
    assert_eq!(first.stdout, second.stdout, "study summary changed between runs");
}

#[test]
fn synth_writes_csv_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    SynthesisParams {
        variables: vec![
            MarginalSpec::new("X", vec!["a".into(), "b".into()], vec![0.5, 0.5]).unwrap(),
            MarginalSpec::new("Y", vec!["a".into(), "b".into()], vec![0.5, 0.5]).unwrap(),
        ],
        spearman: vec![vec![1.0, 0.2], vec![0.2, 1.0]],
    }
    .write_json(dir.path().join("params.json"))
    .unwrap();
    let out = plasmode(&["synth", "params.json", "--n", "12", "--seed", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().contains("X"));
    assert_eq!(lines.count(), 12);
}
