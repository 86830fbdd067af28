use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use specsense_cli::{classify, read_raw_capture, write_raw_capture};
use specsense_core::dataset;
use specsense_core::eval::parse_confusion_csv;
use specsense_core::nnet::{self, predict};

fn specsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specsense"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = specsense(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    specsense(args).status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_dataset(dir: &Path, task: &str, name: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    ok(&["generate", "--task", task, "--per-class", "3", "--snrs=0:10:10", "--seed", "3", "--out", p(&path)]);
    path
}

fn summary_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn generate_counts_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.spds");
    let b = dir.path().join("b.spds");
    for out in [&a, &b] {
        let msg = ok(&["generate", "--task", "mod", "--per-class", "10", "--snrs", "-20:2:18", "--seed", "7", "--out", p(out)]);
        assert!(msg.contains("2200 records"), "{msg}");
    }
    assert_eq!(dataset::load(&a).unwrap().len(), 11 * 20 * 10);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.spds");
    assert_eq!(code(&["generate", "--task", "mod", "--per-class", "1", "--snrs", "-40:2:0", "--seed", "1", "--out", p(&out)]), 2);
    assert_eq!(code(&["generate", "--task", "mod", "--per-class", "1", "--snrs", "0:0:4", "--seed", "1", "--out", p(&out)]), 2);
    assert_eq!(code(&["generate", "--task", "radar", "--per-class", "1", "--snrs", "0:2:4", "--seed", "1", "--out", p(&out)]), 2);
    assert_eq!(code(&["generate", "--task", "mod", "--per-class", "1", "--snrs", "0:2:4", "--out", p(&out)]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert!(!out.exists());
}

#[test]
fn io_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.spds");
    let out = dir.path().join("run");
    assert_eq!(code(&["train", "--dataset", p(&missing), "--repr", "iq", "--seed", "1", "--out", p(&out)]), 3);
}

#[test]
fn corrupt_dataset_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small_dataset(dir.path(), "mod", "d.spds");
    let mut bytes = fs::read(&ds).unwrap();
    bytes[0] = b'Z';
    fs::write(&ds, bytes).unwrap();
    assert_eq!(code(&["train", "--dataset", p(&ds), "--repr", "iq", "--seed", "1", "--out", p(&dir.path().join("r"))]), 4);
}

#[test]
fn train_evaluate_predict_round() {
    let dir = tempfile::tempdir().unwrap();
    let ds_path = dir.path().join("d.spds");
    ok(&["generate", "--task", "mod", "--per-class", "10", "--snrs=-20:2:18", "--seed", "7", "--out", p(&ds_path)]);
    let run = dir.path().join("run");
    let summary = ok(&[
        "train", "--dataset", p(&ds_path), "--repr", "ap", "--epochs", "1", "--batch", "64", "--seed", "7", "--deterministic",
        "--out", p(&run),
    ]);
    assert!(run.join("model.spnn").exists());
    let history = fs::read_to_string(run.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 2);
    assert!(history.starts_with("epoch,train_loss,val_loss,val_acc"));

    let report = dir.path().join("report");
    let ev = ok(&["evaluate", "--model", p(&run.join("model.spnn")), "--dataset", p(&ds_path), "--out", p(&report)]);
    assert!((summary_value(&summary, "test_accuracy") - summary_value(&ev, "accuracy")).abs() <= 1e-9);

    let (names, cm) = parse_confusion_csv(&fs::read_to_string(report.join("confusion.csv")).unwrap()).unwrap();
    assert_eq!(names.len(), 11);
    assert_eq!(cm.total() as f64, summary_value(&summary, "test_examples"));
    let per_snr = fs::read_to_string(report.join("per_snr.csv")).unwrap();
    let snrs: Vec<i16> = per_snr.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(snrs.windows(2).all(|w| w[0] < w[1]));
    assert!(report.join("summary.txt").exists() && report.join("curve.svg").exists());

    // predict from the container and from a raw capture file
    let model = nnet::load_model(run.join("model.spnn")).unwrap();
    let ds = dataset::load(&ds_path).unwrap();
    let raw = dir.path().join("c.iq");
    write_raw_capture(&raw, &ds.examples[5].capture).unwrap();
    assert_eq!(read_raw_capture(&raw).unwrap(), ds.examples[5].capture);
    let from_file = ok(&["predict", "--model", p(&run.join("model.spnn")), "--input", p(&raw)]);
    let from_ds = ok(&["predict", "--model", p(&run.join("model.spnn")), "--dataset", p(&ds_path), "--index", "5"]);
    assert_eq!(from_file, from_ds);

    let probs: Vec<f64> = from_file.lines().skip(1).map(|l| l.split_whitespace().last().unwrap().parse().unwrap()).collect();
    assert_eq!(probs.len(), 11);
    assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-4);
    let repr = specsense_core::transforms::Representation::AmpPhase;
    let (top, _) = predict(&model, &repr.apply(&ds.examples[5].capture)).unwrap();
    assert_eq!(classify(&model, &ds.examples[5].capture).unwrap().0, top);
    let printed = from_file.lines().next().unwrap().strip_prefix("prediction = ").unwrap();
    assert_eq!(printed, ds.class_names[top]);
}

#[test]
fn zero_epochs_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small_dataset(dir.path(), "mod", "d.spds");
    let r0 = dir.path().join("r0");
    ok(&["train", "--dataset", p(&ds), "--repr", "iq", "--epochs", "0", "--seed", "2", "--out", p(&r0)]);
    assert_eq!(fs::read_to_string(r0.join("history.csv")).unwrap().lines().count(), 1);

    let mut histories = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        ok(&["train", "--dataset", p(&ds), "--repr", "fft", "--epochs", "2", "--batch", "8", "--seed", "7", "--deterministic", "--out", p(&out)]);
        histories.push(fs::read(out.join("history.csv")).unwrap());
    }
    assert_eq!(histories[0], histories[1]);
}

#[test]
fn data_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let modds = small_dataset(dir.path(), "mod", "m.spds");
    let ifds = small_dataset(dir.path(), "if", "i.spds");
    let run = dir.path().join("run");
    ok(&["train", "--dataset", p(&modds), "--repr", "iq", "--epochs", "0", "--seed", "1", "--out", p(&run)]);
    let model = run.join("model.spnn");
    assert_eq!(code(&["evaluate", "--model", p(&model), "--dataset", p(&ifds), "--out", p(&dir.path().join("rep"))]), 4);

    // unknown representation tag recorded in the model
    let mut m = nnet::load_model(&model).unwrap();
    m.meta.repr_tag = 42;
    let bad = dir.path().join("bad.spnn");
    nnet::save_model(&m, &bad).unwrap();
    assert_eq!(code(&["predict", "--model", p(&bad), "--dataset", p(&modds), "--index", "0"]), 4);

    // malformed raw capture
    let raw = dir.path().join("short.iq");
    fs::write(&raw, [0u8; 13]).unwrap();
    assert_eq!(code(&["predict", "--model", p(&model), "--input", p(&raw)]), 2);
    let raw64 = dir.path().join("n64.iq");
    fs::write(&raw64, vec![0u8; 64 * 8]).unwrap();
    assert_eq!(code(&["predict", "--model", p(&model), "--input", p(&raw64)]), 2);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gen.cfg");
    let out = dir.path().join("d.spds");
    fs::write(&cfg, format!("# generation\ntask = if\nper_class = 2\nsnrs = -8,18\nseed = 5\nout = {}\n", out.display())).unwrap();
    ok(&["generate", "--config", p(&cfg), "--per-class", "1"]);
    let ds = dataset::load(&out).unwrap();
    assert_eq!(ds.len(), 15 * 2);
    assert_eq!(ds.snr_grid, vec![-8, 18]);

    fs::write(&cfg, "task = if\ncolour = blue\n").unwrap();
    assert_eq!(code(&["generate", "--config", p(&cfg)]), 2);
}

#[test]
fn thread_cap_is_respected() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.spds");
    let b = dir.path().join("b.spds");
    ok(&["generate", "--task", "if", "--per-class", "2", "--snrs=0:2:4", "--seed", "9", "--out", p(&a)]);
    let out = Command::new(env!("CARGO_BIN_EXE_specsense"))
        .args(["generate", "--task", "if", "--per-class", "2", "--snrs=0:2:4", "--seed", "9", "--out", p(&b)])
        .env("SPECSENSE_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let bad = Command::new(env!("CARGO_BIN_EXE_specsense"))
        .args(["generate", "--task", "if", "--per-class", "2", "--snrs=0:2:4", "--seed", "9", "--out", p(&b)])
        .env("SPECSENSE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
