use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ds"))
        .args(args)
        .env_remove("DS_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TOY: &str = "x,y\n1,0\n2,0\n3,1\n4,1\n";

#[test]
fn train_then_evaluate_separable_toy() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let model = dir.path().join("toy.json");
    let o = ds(&["train", "--data", s(&data), "--label", "y", "--model", s(&model)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("toy.schema.json").exists());
    let trace = std::fs::read_to_string(dir.path().join("toy.trace.csv")).unwrap();
    assert!(trace.lines().count() >= 2);

    let o = ds(&["evaluate", "--model", s(&model), "--data", s(&data)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "error=0.00 metric=accuracy rows=4");
}

#[test]
fn predict_writes_one_row_per_input() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let model = dir.path().join("m.json");
    assert!(ds(&["train", "--data", s(&data), "--label", "y", "--model", s(&model)])
        .status
        .success());
    let query = write(dir.path(), "q.csv", "x\n1.5\n3.5\n");
    let out = dir.path().join("pred.csv");
    let o = ds(&["predict", "--model", s(&model), "--data", s(&query), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "y\n0\n1\n");
}

#[test]
fn inspect_single_leaf() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "flat.csv", "x,y\n1,0\n2,0\n3,0\n4,0\n");
    let model = dir.path().join("flat.json");
    assert!(ds(&["train", "--data", s(&data), "--label", "y", "--model", s(&model)])
        .status
        .success());
    let o = ds(&["inspect", "--model", s(&model)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "nodes=1 depth=0 leaves=1 max_fanin=0");
}

#[test]
fn tune_writes_one_row_per_grid_value() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("syn.csv");
    let o = ds(&["synth", "--n-samples", "200", "--seed", "3", "--out", s(&data)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let schema = dir.path().join("syn.schema.json");
    let sweep = dir.path().join("sweep.csv");
    let o = ds(&[
        "tune",
        "--data",
        s(&data),
        "--schema",
        s(&schema),
        "--mode",
        "scalable",
        "--grid",
        "1e-4,0.005,0.05",
        "--out",
        s(&sweep),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&sweep).unwrap();
    assert_eq!(text.lines().count(), 4, "{text}");
    assert!(stdout(&o).starts_with("best_p_lim="));
}

#[test]
fn runs_are_deterministic_under_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = ds(&[
            "synth",
            "--task",
            "regression",
            "--n-samples",
            "120",
            "--seed",
            "9",
            "--out",
            s(p),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let schema = dir.path().join("a.schema.json");
    let (ma, mb) = (dir.path().join("ma.json"), dir.path().join("mb.json"));
    for m in [&ma, &mb] {
        let o = ds(&[
            "train",
            "--data",
            s(&a),
            "--schema",
            s(&schema),
            "--mode",
            "scalable",
            "--ensemble",
            "bagging",
            "--members",
            "3",
            "--seed",
            "4",
            "--model",
            s(m),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&ma).unwrap(), std::fs::read(&mb).unwrap());
    let o = ds(&["inspect", "--model", s(&ma)]);
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("member=")).count(), 3);
    let o = ds(&["evaluate", "--model", s(&ma), "--data", s(&a)]);
    assert!(stdout(&o).contains("metric=wape rows=120"), "{}", stdout(&o));
}

#[test]
fn experiment_emits_both_models() {
    let o = ds(&["experiment", "--n-samples", "300", "--runs", "1", "--grid", "0.01"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("seed,model"));
    let models: Vec<&str> = lines.map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(models, ["ds", "tree"]);
}

#[test]
fn usage_errors_exit_one() {
    let o = ds(&["train", "--data", "x.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
    let o = ds(&["synth", "--task", "ranking", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).is_empty());
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let o = ds(&[
        "train",
        "--data",
        s(&missing),
        "--label",
        "y",
        "--model",
        s(&dir.path().join("m.json")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));
    assert_eq!(stderr(&o).lines().count(), 1);

    let bad = write(dir.path(), "bad.json", "{\"not\": \"a model\"}");
    let o = ds(&["inspect", "--model", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));
}
