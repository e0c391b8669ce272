//! Binary-level tests: subcommand plumbing, config guards, exit codes, and
//! idempotence over an unchanged input tree.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{default_intended, golden_fixture, snapshot_tree, Intended};

fn forge() -> Command {
    Command::new(env!("CARGO_BIN_EXE_constraint-forge"))
}

fn write_config(
    dir: &Path,
    config: &constraint_forge::config::PipelineConfig,
) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn run_then_validate_succeeds() {
    let input = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let fixture = golden_fixture(input.path(), out.path(), 3, 7, default_intended);
    let config_path = write_config(input.path(), &fixture.config);

    let run = forge()
        .args(["run", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(run.status.success(), "run failed: {}", stderr(&run));
    assert!(stdout(&run).contains("run complete"));

    let validate = forge()
        .args(["validate", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(
        validate.status.success(),
        "validate failed: {}",
        stdout(&validate)
    );
    assert!(stdout(&validate).contains("passes validation"));
}

#[test]
fn run_is_idempotent_over_unchanged_inputs() {
    let input = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let fixture = golden_fixture(input.path(), out.path(), 2, 3, default_intended);
    let config_path = write_config(input.path(), &fixture.config);

    let first = forge()
        .args(["run", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(first.status.success(), "{}", stderr(&first));
    let snapshot_first = snapshot_tree(out.path());

    let second = forge()
        .args(["run", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(second.status.success(), "{}", stderr(&second));
    assert_eq!(snapshot_first, snapshot_tree(out.path()));
}

#[test]
fn subcommand_sequence_reproduces_run_artifacts() {
    let input = tempfile::tempdir().unwrap();
    let out_run = tempfile::tempdir().unwrap();
    let out_steps = tempfile::tempdir().unwrap();
    let fixture = golden_fixture(input.path(), out_run.path(), 2, 11, default_intended);
    let run_config = write_config(input.path(), &fixture.config);

    let run = forge()
        .args(["run", "--config"])
        .arg(&run_config)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", stderr(&run));

    let mut step_config_value = fixture.config.clone();
    step_config_value.output_dir = out_steps.path().to_path_buf();
    let steps_dir = tempfile::tempdir().unwrap();
    let step_config = write_config(steps_dir.path(), &step_config_value);
    for subcommand in ["seeds", "build", "judge", "assemble", "stats"] {
        let output = forge()
            .args([subcommand, "--config"])
            .arg(&step_config)
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "{subcommand} failed: {}",
            stderr(&output)
        );
    }
    let verbs = forge()
        .args(["verbs", "--top-n", "20", "--config"])
        .arg(&step_config)
        .output()
        .unwrap();
    assert!(verbs.status.success(), "{}", stderr(&verbs));

    // The staged pipeline must produce the same core artifacts as run.
    let run_tree = snapshot_tree(out_run.path());
    let step_tree = snapshot_tree(out_steps.path());
    for artifact in [
        "seeds.jsonl",
        "chains.jsonl",
        "pairs.jsonl",
        "records.jsonl",
        "training_manifest.json",
        "stage_k1-3/dpo.jsonl",
        "stage_k1-3/sft.jsonl",
        "stage_k4-5/dpo.jsonl",
        "stage_k4-5/sft.jsonl",
        "reports/stats.json",
        "reports/verbs.json",
    ] {
        assert_eq!(
            run_tree.get(artifact),
            step_tree.get(artifact),
            "artifact {artifact} differs between run and subcommand pipeline"
        );
    }
}

#[test]
fn config_guard_rejects_uncovered_merge_plan_before_any_call() {
    let input = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut fixture = golden_fixture(input.path(), out.path(), 1, 0, default_intended);
    fixture.config.merge_plan = vec![vec![1, 2, 3], vec![4]];
    // Point the mock script somewhere nonexistent: validation must fire
    // before the provider is ever constructed.
    fixture.config.provider.mock_script = Some(input.path().join("missing.json"));
    let config_path = write_config(input.path(), &fixture.config);

    let run = forge()
        .args(["run", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(!run.status.success());
    assert!(
        stderr(&run).contains("does not cover k=5"),
        "stderr: {}",
        stderr(&run)
    );
}

#[test]
fn always_tie_judge_yields_empty_pairs_and_valid_tree() {
    let input = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let fixture = golden_fixture(input.path(), out.path(), 2, 5, |_, _| Intended::Tie);
    let config_path = write_config(input.path(), &fixture.config);

    let run = forge()
        .args(["run", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", stderr(&run));
    assert!(stderr(&run).contains("zero preference pairs"));

    let pairs = std::fs::read_to_string(out.path().join("pairs.jsonl")).unwrap();
    assert!(
        pairs.is_empty(),
        "pairs.jsonl should be empty, got {pairs:?}"
    );

    let validate = forge()
        .args(["validate", "--dir"])
        .arg(out.path())
        .output()
        .unwrap();
    assert!(validate.status.success(), "{}", stdout(&validate));
}

#[test]
fn validate_flags_corruption_with_nonzero_exit() {
    let input = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let fixture = golden_fixture(input.path(), out.path(), 2, 13, default_intended);
    let config_path = write_config(input.path(), &fixture.config);
    let run = forge()
        .args(["run", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", stderr(&run));

    common::edit_jsonl_line(&out.path().join("pairs.jsonl"), 0, |v| {
        v["rejected"] = v["chosen"].clone();
    });
    let validate = forge()
        .args(["validate", "--dir"])
        .arg(out.path())
        .output()
        .unwrap();
    assert!(!validate.status.success());
    assert!(stdout(&validate).contains("chosen equals rejected"));
}

#[test]
fn verbs_report_respects_top_n() {
    let input = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let fixture = golden_fixture(input.path(), out.path(), 3, 7, default_intended);
    let config_path = write_config(input.path(), &fixture.config);
    let run = forge()
        .args(["run", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", stderr(&run));

    let verbs = forge()
        .args(["verbs", "--top-n", "1", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(verbs.status.success(), "{}", stderr(&verbs));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.path().join("reports/verbs.json")).unwrap(),
    )
    .unwrap();
    assert!(report.as_array().unwrap().len() <= 1);
}

#[test]
fn stats_on_missing_tree_names_the_path() {
    let scratch = tempfile::tempdir().unwrap();
    let missing = scratch.path().join("no-such-dir");
    let stats = forge()
        .args(["stats", "--output-dir"])
        .arg(&missing)
        .output()
        .unwrap();
    assert!(!stats.status.success());
    assert!(
        stderr(&stats).contains("no-such-dir"),
        "stderr: {}",
        stderr(&stats)
    );
}

