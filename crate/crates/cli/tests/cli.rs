use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use icboost::tree::{Node, Tree};
use icboost::{persist, synthetic, Dataset, EnsembleModel, GrowthMode, LossKind, LossSpec};
use tempfile::TempDir;

fn icboost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_icboost"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_dataset(path: &Path, data: &Dataset) {
    let mut text = data.names().join(",");
    text.push_str(",y\n");
    for i in 0..data.n_rows() {
        let row: Vec<String> = data.row(i).iter().map(|v| format!("{v:?}")).collect();
        text.push_str(&row.join(","));
        text.push_str(&format!(",{:?}\n", data.response()[i]));
    }
    fs::write(path, text).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: TempDir::new().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn dataset(&self, name: &str, data: &Dataset) -> PathBuf {
        let p = self.path(name);
        write_dataset(&p, data);
        p
    }
}

fn predictions(out: &Output) -> Vec<f64> {
    let text = stdout(out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("prediction"));
    lines.map(|l| l.parse().unwrap()).collect()
}

#[test]
fn train_writes_model_log_and_verbose_lines() {
    let ws = Workspace::new();
    let data = ws.dataset("d.csv", &synthetic::binary(600, 3, 1));
    let (model, log) = (ws.path("m.gbt"), ws.path("log.csv"));
    let out = icboost(&[
        "train",
        "--loss",
        "logloss",
        "--data",
        s(&data),
        "--target",
        "y",
        "--out",
        s(&model),
        "--log",
        s(&log),
        "--verbose",
        "10",
        "--learning-rate",
        "0.1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("it: 1 | n-leaves: "), "{first}");
    assert!(first.contains(" | tr loss: ") && first.contains(" | gen loss: "));
    assert!(text.lines().skip(1).all(|l| {
        let it: usize = l["it: ".len()..]
            .split(' ')
            .next()
            .unwrap()
            .parse()
            .unwrap();
        it.is_multiple_of(10)
    }));
    let log_text = fs::read_to_string(&log).unwrap();
    assert!(log_text.starts_with("iteration,leaves,train_loss,gen_loss\n"));
    assert!(fs::read_to_string(&model)
        .unwrap()
        .starts_with("icboost-model 1\n"));
}

#[test]
fn negbinom_requires_dispersion() {
    let ws = Workspace::new();
    let data = ws.dataset("d.csv", &synthetic::pure_noise(20, 1, 1));
    let out = icboost(&[
        "train",
        "--loss",
        "negbinom",
        "--data",
        s(&data),
        "--out",
        s(&ws.path("m")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("dispersion"));
}

#[test]
fn unknown_loss_is_a_usage_error() {
    let out = icboost(&["train", "--loss", "hinge", "--data", "x.csv", "--out", "m"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn training_is_deterministic() {
    let ws = Workspace::new();
    let data = ws.dataset("d.csv", &synthetic::linear_gaussian(400, 2));
    let run = |name: &str| {
        let m = ws.path(name);
        let out = icboost(&[
            "train",
            "--loss",
            "mse",
            "--algorithm",
            "vanilla",
            "--learning-rate",
            "0.1",
            "--seed",
            "7",
            "--data",
            s(&data),
            "--out",
            s(&m),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        fs::read(m).unwrap()
    };
    assert_eq!(run("a.gbt"), run("b.gbt"));
}

#[test]
fn constant_response_gives_constant_predictions() {
    let ws = Workspace::new();
    let data = Dataset::new(vec![vec![1.0, 2.0, 3.0, 4.0]], vec![2.5; 4]).unwrap();
    let csv = ws.dataset("d.csv", &data);
    let m = ws.path("m.gbt");
    assert!(
        icboost(&["train", "--loss", "mse", "--data", s(&csv), "--out", s(&m)])
            .status
            .success()
    );
    let out = icboost(&[
        "predict",
        "--model",
        s(&m),
        "--data",
        s(&csv),
        "--target",
        "y",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(predictions(&out), vec![2.5; 4]);
}

#[test]
fn response_scale_logloss_is_a_probability() {
    let ws = Workspace::new();
    let csv = ws.dataset("d.csv", &synthetic::binary(500, 3, 4));
    let m = ws.path("m.gbt");
    let out = icboost(&[
        "train",
        "--loss",
        "logloss",
        "--learning-rate",
        "0.2",
        "--data",
        s(&csv),
        "--out",
        s(&m),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = icboost(&[
        "predict",
        "--model",
        s(&m),
        "--data",
        s(&csv),
        "--target",
        "y",
        "--response-scale",
    ]);
    let p = predictions(&out);
    assert_eq!(p.len(), 500);
    assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
}

#[test]
fn saved_model_predicts_identically() {
    let ws = Workspace::new();
    let data = synthetic::additive_first_feature(300, 2, 9);
    let csv = ws.dataset("d.csv", &data);
    let config = icboost::TrainConfig {
        learning_rate: 0.2,
        ..Default::default()
    };
    let model = icboost::train(&data, LossSpec::simple(LossKind::Mse).unwrap(), &config).unwrap();
    let m = ws.path("m.gbt");
    persist::save_path(&model, &m).unwrap();
    let out = icboost(&[
        "predict",
        "--model",
        s(&m),
        "--data",
        s(&csv),
        "--target",
        "y",
    ]);
    let got = predictions(&out);
    let want = model.predict(&data).unwrap();
    assert!(got
        .iter()
        .zip(&want)
        .all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn arity_mismatch_names_counts() {
    let ws = Workspace::new();
    let csv = ws.dataset("d.csv", &synthetic::linear_gaussian(50, 1));
    let other = ws.dataset("o.csv", &synthetic::pure_noise(10, 3, 1));
    let m = ws.path("m.gbt");
    assert!(
        icboost(&["train", "--loss", "mse", "--data", s(&csv), "--out", s(&m)])
            .status
            .success()
    );
    let out = icboost(&[
        "predict",
        "--model",
        s(&m),
        "--data",
        s(&other),
        "--target",
        "y",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(
        stderr(&out).contains("expected 1") && stderr(&out).contains("got 3"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn validate_reports_statistic_and_histogram() {
    let ws = Workspace::new();
    let data = synthetic::linear_gaussian(2000, 21);
    let csv = ws.dataset("d.csv", &data);
    let m = ws.path("m.gbt");
    let hist = ws.path("h.csv");
    assert!(
        icboost(&["train", "--loss", "mse", "--data", s(&csv), "--out", s(&m)])
            .status
            .success()
    );
    let out = icboost(&[
        "validate",
        "--model",
        s(&m),
        "--data",
        s(&csv),
        "--hist",
        s(&hist),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("D = ") && text.contains("p-value = "),
        "{text}"
    );
    assert!(text.contains("variance = "));
    let p: f64 = text
        .split("p-value = ")
        .nth(1)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(p > 0.01, "{text}");
    let counts: usize = fs::read_to_string(&hist)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(counts, 2000);
}

#[test]
fn validate_rejects_the_wrong_family() {
    let ws = Workspace::new();
    let csv = ws.dataset("d.csv", &synthetic::exponential(10_000, 3));
    let m = ws.path("m.gbt");
    assert!(
        icboost(&["train", "--loss", "mse", "--data", s(&csv), "--out", s(&m)])
            .status
            .success()
    );
    let out = icboost(&["validate", "--model", s(&m), "--data", s(&csv)]);
    let text = stdout(&out);
    let p: f64 = text
        .split("p-value = ")
        .nth(1)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(p < 0.01, "{text}");
}

fn stump_model() -> EnsembleModel {
    let leaf = |w| Node::Leaf {
        weight: w,
        n_node: 1,
        train_loss: 0.0,
        optimism: 0.0,
    };
    let tree = Tree::from_nodes(vec![
        Node::Internal {
            feature: 2,
            threshold: 0.5,
            left: 1,
            right: 2,
            reduction: 0.3,
            optimism: -0.1,
        },
        leaf(-1.0),
        leaf(1.0),
    ])
    .unwrap();
    EnsembleModel {
        loss: LossSpec::simple(LossKind::Mse).unwrap(),
        initial_prediction: 0.0,
        learning_rate: 0.1,
        trees: vec![tree],
        feature_names: vec!["a".into(), "b".into(), "c".into(), "d".into()],
        mode: GrowthMode::GlobalSubset,
        seed: 1,
        n_sim: 1000,
        log: vec![],
        termination: None,
    }
}

fn importance_rows(out: &Output) -> Vec<(String, f64, f64)> {
    stdout(out)
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].to_string(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn importance_of_a_stump() {
    let ws = Workspace::new();
    let m = ws.path("m.gbt");
    persist::save_path(&stump_model(), &m).unwrap();
    let out = icboost(&["importance", "--model", s(&m)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = importance_rows(&out);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].0, "c");
    assert_eq!(rows[0].2, 1.0);
    assert_eq!(rows.iter().filter(|r| r.1 != 0.0).count(), 1);
}

#[test]
fn importance_finds_the_signal_feature() {
    let ws = Workspace::new();
    let csv = ws.dataset("d.csv", &synthetic::additive_first_feature(1500, 5, 2));
    let m = ws.path("m.gbt");
    assert!(
        icboost(&["train", "--loss", "mse", "--data", s(&csv), "--out", s(&m)])
            .status
            .success()
    );
    let rows = importance_rows(&icboost(&["importance", "--model", s(&m)]));
    assert_eq!(rows[0].0, "x1");
    assert!(rows[0].2 > 0.95, "{rows:?}");
    let total: f64 = rows.iter().map(|r| r.2).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn benchmark_compares_both_algorithms() {
    let out = icboost(&[
        "benchmark",
        "--loss",
        "logloss",
        "--n",
        "600",
        "--n-test",
        "3000",
        "--learning-rate",
        "0.1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "vanilla");
    assert_eq!(rows[1][0], "global-subset");
    let loss = |r: &Vec<&str>| r[1].parse::<f64>().unwrap();
    assert!(
        (loss(&rows[0]) - loss(&rows[1])).abs() / loss(&rows[0]) < 0.05,
        "{text}"
    );
    let auc: f64 = rows[0][2].parse().unwrap();
    assert!(auc > 0.5 && auc <= 1.0);
}

#[test]
fn auc_on_regression_is_a_configuration_error() {
    let out = icboost(&[
        "benchmark",
        "--loss",
        "mse",
        "--auc",
        "--n",
        "50",
        "--n-test",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_csv_reports_coordinates() {
    let ws = Workspace::new();
    let csv = ws.path("bad.csv");
    fs::write(&csv, "a,y\n1,2\n3,oops\n").unwrap();
    let out = icboost(&[
        "train",
        "--loss",
        "mse",
        "--data",
        s(&csv),
        "--out",
        s(&ws.path("m")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("row 3, column 2"), "{}", stderr(&out));
    fs::write(&csv, "a,y\n1,2\n3\n").unwrap();
    let out = icboost(&[
        "train",
        "--loss",
        "mse",
        "--data",
        s(&csv),
        "--out",
        s(&ws.path("m")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn domain_violation_exit_code() {
    let ws = Workspace::new();
    let csv = ws.path("neg.csv");
    fs::write(&csv, "a,y\n1,-2\n2,3\n").unwrap();
    let out = icboost(&[
        "train",
        "--loss",
        "gamma::log",
        "--data",
        s(&csv),
        "--out",
        s(&ws.path("m")),
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn missing_file_is_an_io_error() {
    let ws = Workspace::new();
    let missing = ws.path("nope.csv");
    let out = icboost(&[
        "train",
        "--loss",
        "mse",
        "--data",
        s(&missing),
        "--out",
        s(&ws.path("m")),
    ]);
    assert_eq!(out.status.code(), Some(5));
    assert!(stderr(&out).contains("nope.csv"));
}

#[test]
fn unsupported_model_version_is_rejected() {
    let ws = Workspace::new();
    let m = ws.path("m.gbt");
    let text = persist::to_string(&stump_model()).replacen("icboost-model 1", "icboost-model 2", 1);
    fs::write(&m, text).unwrap();
    let out = icboost(&["importance", "--model", s(&m)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("version"));
}

#[test]
fn columns_are_matched_by_name() {
    let ws = Workspace::new();
    let data = synthetic::additive_first_feature(200, 2, 5);
    let csv = ws.dataset("d.csv", &data);
    let m = ws.path("m.gbt");
    let out = icboost(&[
        "train",
        "--loss",
        "mse",
        "--learning-rate",
        "0.2",
        "--data",
        s(&csv),
        "--out",
        s(&m),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let swapped = ws.path("swapped.csv");
    let mut text = String::from("y,x2,x1\n");
    for i in 0..data.n_rows() {
        let row = data.row(i);
        text.push_str(&format!(
            "{:?},{:?},{:?}\n",
            data.response()[i],
            row[1],
            row[0]
        ));
    }
    fs::write(&swapped, text).unwrap();
    let a = predictions(&icboost(&[
        "predict",
        "--model",
        s(&m),
        "--data",
        s(&csv),
        "--target",
        "y",
    ]));
    let b = predictions(&icboost(&[
        "predict",
        "--model",
        s(&m),
        "--data",
        s(&swapped),
        "--target",
        "y",
    ]));
    assert_eq!(a, b);
}
