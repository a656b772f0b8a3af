use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_radarcnn"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn radarcnn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Trained {
    data: PathBuf,
    model: PathBuf,
}

/// Seed-42 dataset plus a one-epoch real-part model, built once per test binary.
fn trained() -> &'static Trained {
    static CELL: OnceLock<Trained> = OnceLock::new();
    CELL.get_or_init(|| {
        let root = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-fixture");
        let _ = std::fs::remove_dir_all(&root);
        std::fs::create_dir_all(&root).unwrap();
        let data = root.join("data");
        let model = root.join("real.ckpt");
        let g = run(&["generate", "--out", p(&data), "--seed", "42"]);
        assert!(g.status.success(), "{}", String::from_utf8_lossy(&g.stderr));
        let t = run(&[
            "train",
            "--data",
            p(&data),
            "--mode",
            "real",
            "--epochs",
            "1",
            "--seed",
            "7",
            "--out",
            p(&model),
        ]);
        assert!(t.status.success(), "{}", String::from_utf8_lossy(&t.stderr));
        Trained { data, model }
    })
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        run(&["train", "--data", "x", "--out", "y"]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["train", "--data", "x", "--mode", "polar", "--out", "y"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["--threads", "0", "gradcheck"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.rcub");
    std::fs::write(&junk, b"not a frame at all").unwrap();
    assert_eq!(
        run(&["inspect", "--frame", p(&junk)]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["inspect", "--frame", p(&dir.path().join("missing"))])
            .status
            .code(),
        Some(2)
    );
    let model = dir.path().join("m.ckpt");
    std::fs::write(&model, b"RCNNgarbage").unwrap();
    let o = run(&["eval", "--model", p(&model), "--data", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gradcheck_passes() {
    let o = run(&["gradcheck"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    for layer in [
        "conv2d",
        "batchnorm",
        "relu",
        "maxpool",
        "linear",
        "softmax_cross_entropy",
        "model_end_to_end",
    ] {
        assert!(out.contains(layer), "missing {layer} in\n{out}");
    }
    assert!(!out.contains("FAILED"));
}

#[test]
fn inspect_reports_a_generated_frame() {
    let t = trained();
    let o = run(&["inspect", "--frame", p(&t.data.join("frames/000000.rcub"))]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("class:      0 (cup)"), "{out}");
    assert!(out.contains("20 tx × 20 rx × 100 samples"), "{out}");
}

#[test]
fn eval_prints_a_confusion_matrix() {
    let t = trained();
    let o = run(&["eval", "--model", p(&t.model), "--data", p(&t.data)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("true\\pred"), "{out}");
    for name in radarcnn::CLASS_NAMES {
        assert!(out.contains(name), "{out}");
    }
    assert!(out.contains("overall accuracy:"), "{out}");
    assert!(out.contains("/100)"), "{out}");

    let occ = run(&[
        "eval",
        "--model",
        p(&t.model),
        "--data",
        p(&t.data),
        "--occluded",
    ]);
    assert!(occ.status.success());
    assert!(stdout(&occ).contains("/200)"));
}

#[test]
fn eval_with_the_wrong_mode_is_a_usage_error() {
    let t = trained();
    let o = run(&[
        "eval",
        "--model",
        p(&t.model),
        "--data",
        p(&t.data),
        "--mode",
        "imag",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn eval_report_round_trips() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "eval",
        "--model",
        p(&t.model),
        "--data",
        p(&t.data),
        "--report",
        p(dir.path()),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    let counts = &report["evaluations"][0]["confusion"]["counts"];
    let total: u64 = counts
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|row| row.as_array().unwrap().iter().map(|v| v.as_u64().unwrap()))
        .sum();
    assert_eq!(total, 100);
    assert!(dir.path().join("confusion.txt").exists());
}

#[test]
fn sweep_with_the_default_grid_writes_six_rows() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let o = run(&[
        "sweep-noise",
        "--model",
        p(&t.model),
        "--data",
        p(&t.data),
        "--csv",
        p(&csv),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 7, "{text}");
    assert_eq!(
        lines[0],
        "sigma2,accuracy_real,accuracy_imag,accuracy_complex"
    );
    let grid: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(grid, vec![0.0, 1e-6, 4e-6, 9e-6, 1.6e-5, 2.5e-5]);
    for l in &lines[1..] {
        let cells: Vec<&str> = l.split(',').collect();
        assert_eq!(cells.len(), 4);
        assert!(cells[1].parse::<f64>().is_ok());
        assert!(cells[2].is_empty() && cells[3].is_empty());
    }
}

#[test]
fn sweep_rejects_a_decreasing_grid() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let (model, data) = (dir.path().join("m"), dir.path().join("d"));
    let o = run(&[
        "sweep-noise",
        "--model",
        p(&model),
        "--data",
        p(&data),
        "--csv",
        p(&csv),
        "--sigma2",
        "1e-5,1e-6",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!csv.exists());
}
