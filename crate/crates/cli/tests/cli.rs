use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cyclezsl_core::datamodel::load_dataset;
use cyclezsl_core::evaluation::EvalReport;

const SYNTH: &str = "num_classes = 5\nnum_seen = 3\nsamples_per_class = 12\nd_s = 8\nd_v = 6\nnum_superclasses = 2\n";
const TRAIN: &str = "iterations = 3\nbatch_size = 8\n\n[arch]\nd_noise = 4\nd_hidden = 12\nd_hidden_disc = 10\n";

fn cyclezsl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyclezsl")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = cyclezsl(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    data: PathBuf,
    split: PathBuf,
    config: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    fs::write(root.join("synth.toml"), SYNTH).unwrap();
    fs::write(root.join("train.toml"), TRAIN).unwrap();
    let data = root.join("data");
    ok(&["synth-data", "--config", s(&root.join("synth.toml")), "--seed", "3", "--relative-noise", "0.05", "--out", s(&data)]);
    Fixture { split: data.join("split.json"), config: root.join("train.toml"), data, root, _dir: dir }
}

fn train_to(f: &Fixture, out: &Path, extra: &[&str]) -> String {
    let mut args = vec!["train", "--dataset", s(&f.data), "--split", s(&f.split), "--out", s(out)];
    args.extend_from_slice(extra);
    ok(&args)
}

#[test]
fn train_eval_and_gzsl_round_trip() {
    let f = fixture();
    let ck = f.root.join("ck");
    let summary: serde_json::Value =
        serde_json::from_str(&train_to(&f, &ck, &["--config", s(&f.config), "--seed", "5", "--precision", "f64"])).unwrap();
    assert_eq!(summary["iterations"], 3);
    assert!(ck.join("meta.json").exists() && ck.join("params.bin").exists());
    let history = fs::read_to_string(ck.join("loss_history.csv")).unwrap();
    assert_eq!(history.lines().count(), 4);

    let eval = |out: &Path| {
        ok(&["eval", "--checkpoint", s(&ck), "--dataset", s(&f.data), "--split", s(&f.split), "--seed", "2", "--n-per-class", "10", "--out", s(out)]);
        fs::read_to_string(out).unwrap()
    };
    let a = eval(&f.root.join("a.json"));
    assert_eq!(a, eval(&f.root.join("b.json")));
    let rep: EvalReport = serde_json::from_str(&a).unwrap();
    assert_eq!((rep.seed, rep.n_per_class, rep.k), (2, 10, 1));
    assert!((0.0..=1.0).contains(&rep.top1_unseen));

    let curve = f.root.join("curve.csv");
    let out = ok(&["gzsl", "--checkpoint", s(&ck), "--dataset", s(&f.data), "--split", s(&f.split), "--n-per-class", "10", "--curve", s(&curve)]);
    let g: serde_json::Value = serde_json::from_str(&out).unwrap();
    let text = fs::read_to_string(&curve).unwrap();
    assert_eq!(text.lines().next(), Some("gamma,unseen_acc,seen_acc"));
    assert_eq!(text.lines().count(), g["points"].as_u64().unwrap() as usize + 1);
    assert!(text.lines().nth(1).unwrap().starts_with("-inf,0.0,"));
    assert!(g["ausuc"].as_f64().unwrap() >= 0.0);
}

#[test]
fn resumed_training_matches_an_uninterrupted_run() {
    let f = fixture();
    let straight = f.root.join("straight");
    let resumed = f.root.join("resumed");
    train_to(&f, &straight, &["--config", s(&f.config), "--iterations", "5", "--precision", "f64"]);
    train_to(&f, &resumed, &["--config", s(&f.config), "--iterations", "2", "--precision", "f64"]);
    train_to(&f, &resumed, &["--resume", "--iterations", "5"]);
    for file in ["loss_history.csv", "params.bin", "meta.json"] {
        assert_eq!(fs::read(straight.join(file)).unwrap(), fs::read(resumed.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn ablate_tabulates_every_variant() {
    let f = fixture();
    let table = f.root.join("ablation.csv");
    let out = ok(&[
        "ablate", "--dataset", s(&f.data), "--split", s(&f.split), "--config", s(&f.config), "--iterations", "2",
        "--seed", "0,1", "--single-gan", "--out", s(&table),
    ]);
    for v in ["full", "cyc_only", "adv_cyc", "cla_cyc", "single_gan"] {
        assert!(out.contains(&format!("| {v} |")), "{out}");
    }
    let csv = fs::read_to_string(&table).unwrap();
    assert_eq!(csv.lines().next(), Some("variant,seed,top1_unseen,ausuc"));
    assert_eq!(csv.lines().count(), 1 + 5 * 2);
}

#[test]
fn split_command_writes_a_valid_split() {
    let f = fixture();
    let out = f.root.join("sce.json");
    ok(&["split", "--dataset", s(&f.data), "--style", "sce", "--unseen-fraction", "0.4", "--seed", "1", "--out", s(&out)]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["style"], "SCE");
    let n = v["seen_classes"].as_array().unwrap().len() + v["unseen_classes"].as_array().unwrap().len();
    assert_eq!(n, 5);
}

#[test]
fn prepare_builds_a_tfidf_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    fs::write(corpus.join("crow.txt"), "black bird black beak").unwrap();
    fs::write(corpus.join("jay.txt"), "blue bird").unwrap();
    fs::write(corpus.join("wren.txt"), "small brown bird").unwrap();
    let features = dir.path().join("features.csv");
    fs::write(&features, "crow,1.0,0.5\njay,0.2,0.1\nwren,-1,3\ncrow,0.9,0.4\n").unwrap();
    let supers = dir.path().join("supers.csv");
    fs::write(&supers, "crow,0\njay,1\nwren,1\n").unwrap();
    let out = dir.path().join("ds");
    ok(&["prepare", "--corpus", s(&corpus), "--features", s(&features), "--super-classes", s(&supers), "--out", s(&out)]);
    let ds = load_dataset(&out).unwrap();
    assert_eq!(ds.class_names, ["crow", "jay", "wren"]);
    assert_eq!(ds.labels, [0, 1, 2, 0]);
    assert_eq!(ds.super_class, Some(vec![0, 1, 1]));
    assert_eq!(ds.semantic.shape(), &[3, 6]);
    assert_eq!(ds.visual.row(2), &[-1.0, 3.0]);

    fs::write(&features, "raven,1,2\n").unwrap();
    let bad = cyclezsl(&["prepare", "--corpus", s(&corpus), "--features", s(&features), "--out", s(&out)]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("raven"));
}

#[test]
fn usage_errors_fail_cleanly() {
    let f = fixture();
    fs::write(f.root.join("bad.toml"), "iterations = 3\nlearning_rate = 0.1\n").unwrap();
    let out = cyclezsl(&[
        "train", "--dataset", s(&f.data), "--split", s(&f.split), "--config", s(&f.root.join("bad.toml")), "--out",
        s(&f.root.join("x")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rate"));

    let ck = f.root.join("ck");
    train_to(&f, &ck, &["--config", s(&f.config)]);
    let out = cyclezsl(&["train", "--dataset", s(&f.data), "--split", s(&f.split), "--out", s(&ck), "--resume", "--seed", "1"]);
    assert!(!out.status.success());

    let out = cyclezsl(&["eval", "--checkpoint", s(&f.root.join("missing")), "--dataset", s(&f.data), "--split", s(&f.split)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
