// Copyright 2026 The lupi-meta Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Drives the `lupi` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use lupi_core::runner::{read_report, Evaluation, LossMode, ModelRole};

const SMALL: &[&str] = &[
    "--train-n",
    "60",
    "--test-n",
    "80",
    "--d",
    "8",
    "--epochs",
    "100",
    "--reps",
    "2",
];

fn lupi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lupi"))
        .args(args)
        .output()
        .expect("failed to launch lupi")
}

fn ok(args: &[&str]) -> Output {
    let out = lupi(args);
    assert!(
        out.status.success(),
        "lupi {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn with_small<'a>(head: &[&'a str]) -> Vec<&'a str> {
    head.iter().copied().chain(SMALL.iter().copied()).collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synthetic_json_report_reflects_the_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let args = with_small(&[
        "synthetic",
        "--scenario",
        "relevant_features",
        "--task",
        "classification",
        "--loss",
        "eq2",
        "--T",
        "0.5",
        "--out",
        s(&out),
    ]);
    let run = ok(&args);
    let report = read_report(&out).unwrap();
    assert_eq!(report.plan.repetitions, 2);
    assert_eq!(report.plan.temperature, 0.5);
    assert_eq!(report.plan.student_train.epochs, 100);
    assert_eq!(report.repetitions.len(), 2);
    assert!(report.mean(ModelRole::Lupi, "accuracy").is_some());
    // the human summary goes to stderr, nothing to stdout
    assert!(run.stdout.is_empty());
    assert!(String::from_utf8_lossy(&run.stderr).contains("lupi"));
}

#[test]
fn plan_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.txt");
    std::fs::write(
        &plan,
        "# small run\nscenario = clean_labels\ntask = regression\nreps = 3\nT = 2\nloss = eq2\nepochs = 40\ntrain-n = 50\ntest-n = 50\nd = 6\n",
    )
    .unwrap();
    let out = dir.path().join("r.json");
    ok(&[
        "synthetic",
        "--plan",
        s(&plan),
        "--reps",
        "1",
        "--out",
        s(&out),
    ]);
    let report = read_report(&out).unwrap();
    assert_eq!(report.plan.repetitions, 1);
    assert_eq!(report.plan.temperature, 2.0);
    assert_eq!(report.plan.loss, LossMode::MetaEq2);
    assert_eq!(report.plan.teacher_train.epochs, 40);
}

#[test]
fn identical_invocations_print_identical_bytes() {
    let args = with_small(&["synthetic", "--scenario", "clean_labels", "--loss", "eq1"]);
    let a = ok(&args);
    let b = ok(&args);
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn csv_format_writes_the_summary_table() {
    let args = with_small(&["synthetic", "--task", "regression", "--format", "csv"]);
    let out = ok(&args);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("model,metric,mean,std,n_runs,rep_0,rep_1")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("rmse")));
}

#[test]
fn timings_flag_adds_phase_seconds() {
    let args = with_small(&["synthetic", "--timings"]);
    let text = String::from_utf8(ok(&args).stdout).unwrap();
    assert!(text.contains("\"teacher_seconds\""));
    let plain = String::from_utf8(ok(&with_small(&["synthetic"])).stdout).unwrap();
    assert!(!plain.contains("timings"));
}

#[test]
fn generated_table_runs_through_leave_one_group_out() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    ok(&[
        "gen-tabular",
        "--rows",
        "40",
        "--groups",
        "4",
        "--d",
        "6",
        "--out",
        s(&csv),
    ]);
    let header = std::fs::read_to_string(&csv).unwrap();
    assert!(header.lines().next().unwrap().starts_with("group,"));
    assert_eq!(header.lines().count(), 41);

    let out = dir.path().join("r.json");
    ok(&[
        "tabular",
        "--csv",
        s(&csv),
        "--affinity-cutoff",
        "0.5",
        "--positive",
        "above",
        "--epochs",
        "60",
        "--out",
        s(&out),
    ]);
    let report = read_report(&out).unwrap();
    assert_eq!(report.evaluation, Evaluation::PooledLoocv { folds: 4 });
    for metric in ["rmse", "spearman", "auc_roc", "auc_pr"] {
        assert!(report.mean(ModelRole::Lupi, metric).is_some(), "{metric}");
    }
}

#[test]
fn negative_cutoffs_parse_as_values() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    ok(&[
        "gen-tabular",
        "--task",
        "regression",
        "--rows",
        "30",
        "--groups",
        "3",
        "--d",
        "5",
        "--out",
        s(&csv),
    ]);
    let out = ok(&[
        "tabular",
        "--csv",
        s(&csv),
        "--affinity-cutoff",
        "-0.25",
        "--epochs",
        "30",
    ]);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("\"affinity_cutoff\": -0.25"));
}

#[test]
fn sweep_writes_one_block_per_temperature() {
    let args = with_small(&["sweep", "--task", "regression", "--t-values", "0,1,100"]);
    let text = String::from_utf8(ok(&args).stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("T,model,metric,mean,std"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);
    for t in ["0", "1", "100"] {
        assert_eq!(
            rows.iter()
                .filter(|r| r.split(',').next() == Some(t))
                .count(),
            3
        );
    }
}

#[test]
fn sweep_json_pairs_each_temperature_with_a_report() {
    let args = with_small(&["sweep", "--t-values", "0,5", "--format", "json"]);
    let text = String::from_utf8(ok(&args).stdout).unwrap();
    assert_eq!(text.matches("\"T\":").count(), 2);
    assert_eq!(text.matches("\"schema_version\": 1").count(), 2);
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let cases: Vec<Vec<&str>> = vec![
        vec!["synthetic", "--scenario", "nope"],
        vec!["synthetic", "--task", "regression", "--loss", "eq1"],
        vec!["synthetic", "--reps", "0"],
        vec!["synthetic", "--hidden", "0:relu"],
        vec!["tabular", "--csv", s(&missing)],
        vec!["tabular"],
        vec!["mnist", "--mnist-dir", s(dir.path())],
        vec!["sweep", "--t-values", "1,-2"],
        vec!["sweep", "--loss", "eq1", "--t-values", "1"],
        vec!["synthetic", "--plan", s(&missing)],
        vec!["synthetic", "--format", "xml"],
    ];
    for args in cases {
        let out = lupi(&args);
        assert!(!out.status.success(), "{args:?} should fail");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.starts_with("error: "), "{args:?}: {err}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn unknown_plan_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.txt");
    std::fs::write(&plan, "temperature = 3\n").unwrap();
    let out = lupi(&["synthetic", "--plan", s(&plan)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("temperature"));
}
