//! Black-box tests of the command-line binary: exit codes, the CSV
//! contract on stdout (diagnostics stay on stderr), and the dumped
//! Matrix Market files.

use std::fs;
use std::process::{Command, Output};

use matiso::data::write_synth_corpus;
use matiso::mat::market::read_coords;

fn matiso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matiso"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn verify_all_reports_every_suite_and_exits_zero() {
    let out = matiso(&["verify", "--suite", "all", "--trials", "10", "--seed", "0"]);
    assert_eq!(out.status.code(), Some(0));

    let stdout = stdout_of(&out);
    let mut lines = stdout.lines();
    assert_eq!(
        lines.next(),
        Some("suite,trials,seed,max_abs_err,tolerance,passed")
    );
    let rows: Vec<&str> = lines.collect();
    let suites: Vec<&str> = rows
        .iter()
        .map(|r| r.split(',').next().unwrap())
        .collect();
    assert_eq!(
        suites,
        ["conv", "pool", "rnn", "attn_tensor", "attn_lifted"]
    );
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 6, "row {row:?} breaks the schema");
        assert_eq!(fields[1], "10");
        assert_eq!(fields[2], "0");
        fields[3].parse::<f64>().expect("max_abs_err parses");
        fields[4].parse::<f64>().expect("tolerance parses");
        assert_eq!(fields[5], "true");
    }
    // The config echo goes to stderr, never into the CSV stream.
    assert!(stderr_of(&out).contains("config:"));
    assert!(!stdout.contains("config:"));
}

#[test]
fn verify_with_impossible_tolerance_exits_one() {
    let out = matiso(&["verify", "--suite", "conv", "--trials", "5", "--tol", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_of(&out).contains("false"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["verify", "--suite", "sideways"] as &[&str],
        &["verify", "--no-such-flag"],
        &["train"],
        &["bench", "--op", "conv", "--sizes", "4,x"],
        &[],
    ] {
        let out = matiso(args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
    }
}

#[test]
fn help_exits_zero_and_names_the_subcommands() {
    let out = matiso(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    for sub in ["verify", "train", "bench", "dump"] {
        assert!(text.contains(sub), "help does not mention {sub}");
    }
}

#[test]
fn train_series_emits_epoch_rows_and_a_final_row() {
    let out = matiso(&[
        "train", "--task", "series", "--epochs", "2", "--seed", "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = stdout_of(&out);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "epoch,train_loss,eval_metric");
    assert_eq!(lines.len(), 4, "expected header, two epochs, final row");
    for (i, row) in lines[1..3].iter().enumerate() {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[0], (i + 1).to_string());
        fields[1].parse::<f64>().expect("train_loss parses");
        fields[2].parse::<f64>().expect("eval_metric parses");
    }
    assert!(lines[3].starts_with("final,"));
    // Diagnostics (gradient preflight, persistence baseline) stay on stderr.
    let stderr = stderr_of(&out);
    assert!(stderr.contains("preflight"));
    assert!(stderr.contains("persistence"));
}

#[test]
fn train_digits_runs_on_a_generated_corpus_directory() {
    let dir = tempfile::tempdir().unwrap();
    write_synth_corpus(dir.path(), 96, 24, 3).unwrap();
    let out = matiso(&[
        "train",
        "--task",
        "mnist",
        "--data-dir",
        dir.path().to_str().unwrap(),
        "--subset",
        "64",
        "--epochs",
        "1",
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let stdout = stdout_of(&out);
    assert!(stdout.starts_with("epoch,train_loss,eval_metric"));
    assert!(stdout.lines().last().unwrap().starts_with("final,"));
}

#[test]
fn train_digits_with_empty_data_dir_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = matiso(&[
        "train",
        "--task",
        "mnist",
        "--data-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("missing data file"));
}

#[test]
fn train_series_reads_a_csv_directory() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = String::new();
    for t in 0..80 {
        rows.push_str(&format!("{}\n", (t as f64 * 0.37).sin()));
    }
    fs::write(dir.path().join("series.csv"), rows).unwrap();
    let out = matiso(&[
        "train",
        "--task",
        "series",
        "--data-dir",
        dir.path().to_str().unwrap(),
        "--epochs",
        "1",
        "--w",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).lines().last().unwrap().starts_with("final,"));
}

#[test]
fn dump_writes_conv_band_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("conv.mtx");
    let out = matiso(&[
        "dump", "--layer", "conv", "--m", "6", "--n", "6", "--r", "3", "--s", "1",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let coo = read_coords(&path).unwrap();
    assert_eq!((coo.rows, coo.cols), (16, 36));
    assert_eq!(coo.entries.len(), 16 * 9);
    let header = fs::read_to_string(&path).unwrap();
    assert!(header.starts_with("%%MatrixMarket matrix coordinate real general"));
}

#[test]
fn dump_writes_attention_bilinear_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("attn.mtx");
    let out = matiso(&[
        "dump", "--layer", "attn", "--seq", "4", "--out-dim", "3",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let coo = read_coords(&path).unwrap();
    assert_eq!((coo.rows, coo.cols), (3, 16));
    assert_eq!(coo.entries.len(), 3 * 16);
}

#[test]
fn bench_reports_three_implementations_per_size() {
    let out = matiso(&[
        "bench", "--op", "conv", "--sizes", "4,6", "--repeats", "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = stdout_of(&out);
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("op,size,repeats,median_ns,ops_per_sec"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6, "three implementations times two sizes");
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 5);
        assert!(fields[3].parse::<u128>().unwrap() >= 1);
        assert!(fields[4].parse::<f64>().unwrap() > 0.0);
    }
}

#[test]
fn bench_parallel_adds_a_fourth_row_per_size() {
    let out = matiso(&[
        "bench", "--op", "rnn", "--sizes", "4", "--repeats", "3", "--parallel",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = stdout_of(&out);
    assert_eq!(stdout.lines().count(), 1 + 4);
    assert!(stdout.contains("rnn_block_par"));
}
