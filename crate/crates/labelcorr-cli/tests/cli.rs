//! Behavior of the command-line binary: file round-trips, sidecar contents,
//! exit codes, and schema checking.

use std::path::Path;
use std::process::{Command, Output};

use labelcorr::{LabeledDataset, TransitionMatrix};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_labelcorr"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "command {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout is text")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process should exit normally")
}

#[test]
fn generated_dataset_round_trips_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        dir.path(),
        &[
            "synth-gen",
            "--benchmark",
            "--n",
            "300",
            "--seed",
            "7",
            "--out",
            "d.csv",
        ],
    );

    let first = std::fs::read(dir.path().join("d.csv")).unwrap();
    let data = LabeledDataset::load_csv(dir.path().join("d.csv")).unwrap();
    assert_eq!(data.len(), 300);
    assert_eq!(data.dim(), 10);
    assert_eq!(data.n_classes(), 2);
    assert!(data.clean_labels().is_some());
    assert!(data.bayes_labels().is_some());

    data.save_csv(dir.path().join("again.csv")).unwrap();
    let second = std::fs::read(dir.path().join("again.csv")).unwrap();
    assert_eq!(first, second, "read-then-write must reproduce the file");

    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("d.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["kind"], "synth-meta");
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["weights"].as_array().unwrap().len(), 2);
}

#[test]
fn noise_sidecar_records_matrix_and_observed_rates() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        dir.path(),
        &[
            "synth-gen",
            "--benchmark",
            "--n",
            "2000",
            "--seed",
            "1",
            "--out",
            "d.csv",
        ],
    );
    run_ok(
        dir.path(),
        &[
            "inject-noise",
            "--data",
            "d.csv",
            "--binary",
            "0.2,0.3",
            "--seed",
            "2",
            "--out",
            "n.csv",
        ],
    );

    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("n.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["kind"], "noise-meta");
    let tau: TransitionMatrix = serde_json::from_value(meta["tau"].clone()).unwrap();
    assert_eq!(tau.binary_rates().unwrap(), (0.2, 0.3));
    let zero_to_one = meta["observed_rates"][0][1].as_f64().unwrap();
    let one_to_zero = meta["observed_rates"][1][0].as_f64().unwrap();
    assert!(
        (zero_to_one - 0.3).abs() < 0.05,
        "observed 0->1 rate {zero_to_one} far from 0.3"
    );
    assert!(
        (one_to_zero - 0.2).abs() < 0.05,
        "observed 1->0 rate {one_to_zero} far from 0.2"
    );

    let noisy = LabeledDataset::load_csv(dir.path().join("n.csv")).unwrap();
    assert!(
        noisy.clean_labels().is_some(),
        "clean labels survive injection"
    );
    assert!(
        noisy.bayes_labels().is_some(),
        "Bayes labels survive injection"
    );
}

#[test]
fn explicit_matrix_file_drives_injection() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        dir.path(),
        &[
            "synth-gen",
            "--classes",
            "3",
            "--dim",
            "3",
            "--spread",
            "3.0",
            "--n",
            "500",
            "--seed",
            "5",
            "--out",
            "d.csv",
        ],
    );
    let tau = TransitionMatrix::pair_flip(3, 0.25).unwrap();
    std::fs::write(
        dir.path().join("tau.json"),
        serde_json::to_vec_pretty(&tau).unwrap(),
    )
    .unwrap();
    run_ok(
        dir.path(),
        &[
            "inject-noise",
            "--data",
            "d.csv",
            "--tau-file",
            "tau.json",
            "--seed",
            "2",
            "--out",
            "n.csv",
        ],
    );
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("n.meta.json")).unwrap()).unwrap();
    let loaded: TransitionMatrix = serde_json::from_value(meta["tau"].clone()).unwrap();
    assert_eq!(loaded, tau, "sidecar carries the matrix verbatim");
}

#[test]
fn usage_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        dir.path(),
        &[
            "synth-gen",
            "--benchmark",
            "--n",
            "50",
            "--seed",
            "1",
            "--out",
            "d.csv",
        ],
    );

    let unknown = run_in(dir.path(), &["no-such-command"]);
    assert_eq!(exit_code(&unknown), 2);

    let no_pattern = run_in(
        dir.path(),
        &[
            "inject-noise",
            "--data",
            "d.csv",
            "--seed",
            "1",
            "--out",
            "n.csv",
        ],
    );
    assert_eq!(
        exit_code(&no_pattern),
        2,
        "missing noise pattern is a usage error"
    );

    let no_seed = run_in(
        dir.path(),
        &[
            "adacorr", "--train", "d.csv", "--test", "d.csv", "--trace", "t.csv",
        ],
    );
    assert_eq!(exit_code(&no_seed), 2, "absent seed must be rejected");
    assert!(
        String::from_utf8_lossy(&no_seed.stderr).contains("seed"),
        "the message should name the seed"
    );

    let both_deltas = run_in(
        dir.path(),
        &[
            "lrt-correct",
            "--data",
            "d.csv",
            "--model",
            "oracle-clean",
            "--synth-meta",
            "d.meta.json",
            "--delta",
            "0.5",
            "--delta-mode",
            "binary-optimal",
            "--out",
            "x.csv",
        ],
    );
    assert_eq!(exit_code(&both_deltas), 2, "conflicting threshold flags");
}

#[test]
fn runtime_errors_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = run_in(
        dir.path(),
        &[
            "fit-tsybakov",
            "--data",
            "absent.csv",
            "--synth-meta",
            "absent.json",
            "--out",
            "f.json",
        ],
    );
    assert_eq!(exit_code(&missing), 1);
    assert!(
        String::from_utf8_lossy(&missing.stderr).contains("absent.csv"),
        "error should name the missing file"
    );

    run_ok(
        dir.path(),
        &[
            "synth-gen",
            "--benchmark",
            "--n",
            "50",
            "--seed",
            "1",
            "--out",
            "d.csv",
        ],
    );
    std::fs::write(dir.path().join("bad.bin"), b"not a checkpoint").unwrap();
    let bad_model = run_in(
        dir.path(),
        &[
            "lrt-correct",
            "--data",
            "d.csv",
            "--model",
            "checkpoint:bad.bin",
            "--delta",
            "0.9",
            "--out",
            "x.csv",
        ],
    );
    assert_eq!(
        exit_code(&bad_model),
        1,
        "corrupt checkpoint is a runtime error"
    );
}

#[test]
fn report_refuses_unknown_schema_major_version() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("future.json"),
        serde_json::json!({
            "schema_version": "2.0",
            "kind": "fit",
            "tool_version": "9.9.9",
            "rng_algorithm": "chacha8",
        })
        .to_string(),
    )
    .unwrap();
    let out = run_in(dir.path(), &["report", "future.json"]);
    assert_eq!(exit_code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("schema_version"),
        "refusal must name the offending field, got: {stderr}"
    );
}

#[test]
fn oracle_bounds_document_hits_zero_at_zero_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.toml"),
        "[synth]\nkind = \"benchmark\"\nn = 1500\nseed = 7\n\n\
         [noise]\nkind = \"binary\"\ntau10 = 0.3\ntau01 = 0.3\nseed = 11\n\n\
         [fit]\nt_min = 0.01\nt_max = 0.9\nn_grid = 30\n\n\
         [correction]\nmode = \"binary-optimal\"\n\n\
         [bounds]\nepsilons = [0.0, 0.1]\nt0 = 0.5\nperturb_seed = 23\n",
    )
    .unwrap();
    run_ok(
        dir.path(),
        &["eval-bounds", "--config", "exp.toml", "--out", "b.json"],
    );

    let doc: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("b.json")).unwrap()).unwrap();
    let records = doc["records"].as_array().unwrap();
    let zero: Vec<_> = records
        .iter()
        .filter(|r| r["epsilon"].as_f64() == Some(0.0))
        .collect();
    assert_eq!(zero.len(), 2, "joint and correction records at epsilon 0");
    for record in zero {
        assert_eq!(record["bound_value"].as_f64(), Some(0.0), "{record}");
        assert_eq!(record["empirical_value"].as_f64(), Some(0.0), "{record}");
        assert_eq!(record["valid"], true);
    }
}

#[test]
fn trained_checkpoint_feeds_the_correction_command() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        dir.path(),
        &[
            "synth-gen",
            "--benchmark",
            "--n",
            "600",
            "--seed",
            "3",
            "--out",
            "train.csv",
        ],
    );
    run_ok(
        dir.path(),
        &[
            "synth-gen",
            "--benchmark",
            "--n",
            "300",
            "--seed",
            "4",
            "--out",
            "test.csv",
        ],
    );
    run_ok(
        dir.path(),
        &[
            "inject-noise",
            "--data",
            "train.csv",
            "--binary",
            "0.3,0.3",
            "--seed",
            "5",
            "--out",
            "noisy.csv",
        ],
    );
    run_ok(
        dir.path(),
        &[
            "adacorr",
            "--train",
            "noisy.csv",
            "--test",
            "test.csv",
            "--seed",
            "6",
            "--epochs",
            "8",
            "--burn-in",
            "3",
            "--hidden",
            "8",
            "--trace",
            "trace.csv",
            "--checkpoint",
            "model.bin",
        ],
    );
    let stdout = run_ok(
        dir.path(),
        &[
            "lrt-correct",
            "--data",
            "noisy.csv",
            "--model",
            "checkpoint:model.bin",
            "--delta",
            "0.95",
            "--out",
            "corrected.csv",
            "--report",
            "report.json",
        ],
    );
    assert!(
        stdout.contains("flipped"),
        "correction should report flips: {stdout}"
    );

    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["kind"], "correction");
    assert_eq!(report["model"], "checkpoint");
    assert_eq!(report["delta_used"].as_f64(), Some(0.95));
}

#[test]
fn flags_override_config_file_values() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        dir.path(),
        &[
            "synth-gen",
            "--benchmark",
            "--n",
            "400",
            "--seed",
            "3",
            "--out",
            "train.csv",
        ],
    );
    run_ok(
        dir.path(),
        &[
            "synth-gen",
            "--benchmark",
            "--n",
            "200",
            "--seed",
            "4",
            "--out",
            "test.csv",
        ],
    );
    std::fs::write(
        dir.path().join("exp.toml"),
        "[synth]\nkind = \"benchmark\"\nn = 400\nseed = 3\n\n\
         [noise]\nkind = \"binary\"\ntau10 = 0.3\ntau01 = 0.3\nseed = 11\n\n\
         [fit]\nt_min = 0.01\nt_max = 0.9\nn_grid = 30\n\n\
         [correction]\nmode = \"binary-optimal\"\n\n\
         [bounds]\nepsilons = [0.0]\nt0 = 0.5\nperturb_seed = 23\n\n\
         [train]\nseed = 9\nepochs = 6\nburn_in = 2\nhidden = [8]\n",
    )
    .unwrap();
    run_ok(
        dir.path(),
        &[
            "adacorr",
            "--train",
            "train.csv",
            "--test",
            "test.csv",
            "--config",
            "exp.toml",
            "--epochs",
            "4",
            "--trace",
            "trace.csv",
        ],
    );
    let trace = labelcorr::train::TrainingTrace::load_csv(dir.path().join("trace.csv")).unwrap();
    assert_eq!(
        trace.records.len(),
        4,
        "the flag beats the config's epoch count"
    );
}
