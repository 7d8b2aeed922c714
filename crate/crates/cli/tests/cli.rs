use std::path::Path;
use std::process::{Command, Output};

fn evtail(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evtail"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    assert!(!o.status.success(), "expected failure");
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn fit_tail_on_hand_sample() {
    let dir = tempfile::tempdir().unwrap();
    let errors = dir.path().join("e.csv");
    std::fs::write(&errors, "error\n3\n1\n5\n2\n4\n").unwrap();
    let fit = dir.path().join("fit.toml");
    let text = stdout(&evtail(&["fit-tail", "--errors", p(&errors), "--k", "2", "--out", p(&fit)]));
    assert!(text.contains("u = 3.0"), "{text}");
    assert!(text.contains("xstar_hat = 5.41503749927884"), "{text}");

    let me = stdout(&evtail(&["tail-query", "--fit", p(&fit)]));
    assert!(me.trim().parse::<f64>().unwrap() > 0.0);
    let below = evtail(&["tail-query", "--fit", p(&fit), "--x", "2.5"]);
    assert!(stderr(&below).contains("threshold"));
}

#[test]
fn tail_query_at_threshold_prints_k_over_n() {
    let dir = tempfile::tempdir().unwrap();
    let errors = dir.path().join("gpd.csv");
    let fit = dir.path().join("fit.toml");
    stdout(&evtail(&[
        "gpd-sample", "--gamma", "-0.5", "--sigma", "0.01", "--n", "100000", "--seed", "3", "--out", p(&errors),
    ]));
    let text = stdout(&evtail(&["fit-tail", "--errors", p(&errors), "--k", "270", "--out", p(&fit)]));
    let u = text
        .lines()
        .find_map(|l| l.strip_prefix("u = "))
        .unwrap()
        .to_string();
    let out = stdout(&evtail(&["tail-query", "--fit", p(&fit), "--x", &u]));
    assert_eq!(out.trim(), "0.0027");
}

#[test]
fn markov_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let errors = dir.path().join("e.csv");
    let e = 1.65e-8f64.sqrt();
    std::fs::write(&errors, format!("error\n{e}\n{e}\n{e}\n")).unwrap();
    let out = stdout(&evtail(&["markov", "--errors", p(&errors), "--m", "2", "--x", "0.0033"]));
    let b: f64 = out.trim().parse().unwrap();
    assert!((b - 0.0015).abs() < 2e-5, "{b}");
}

#[test]
fn gpd_sample_is_seeded() {
    let a = stdout(&evtail(&["gpd-sample", "--gamma", "-0.2", "--sigma", "1", "--n", "50", "--seed", "9"]));
    let b = stdout(&evtail(&["gpd-sample", "--gamma", "-0.2", "--sigma", "1", "--n", "50", "--seed", "9"]));
    assert_eq!(a, b);
    assert!(a.starts_with("error\n"));
    assert_eq!(a.lines().count(), 51);
}

#[test]
fn price_one_contract() {
    let out = stdout(&evtail(&[
        "price", "--strike", "1.6", "--maturity", "12", "--rate", "0.02", "--vol", "0.05",
    ]));
    assert!(out.trim().parse::<f64>().unwrap() >= 60.0);
    let bad = evtail(&["price", "--strike", "1", "--maturity", "12", "--rate", "0.02", "--vol", "0"]);
    assert!(stderr(&bad).contains("volatility"));
}

#[test]
fn malformed_inputs_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let errors = dir.path().join("e.csv");
    std::fs::write(&errors, "error\n1\n2\nfoo\n").unwrap();
    let msg = stderr(&evtail(&["markov", "--errors", p(&errors), "--m", "2", "--x", "1"]));
    assert!(msg.contains("row 4"), "{msg}");

    let config = dir.path().join("c.toml");
    std::fs::write(&config, "test_sets = 2\nbogus_key = 1\n").unwrap();
    let msg = stderr(&evtail(&["experiment", "--config", p(&config), "--out", p(dir.path())]));
    assert!(msg.contains("bogus_key"), "{msg}");

    let msg = stderr(&evtail(&["fit-tail", "--errors", p(&errors)]));
    assert!(msg.contains("--k"), "{msg}");
}

#[test]
fn dataset_train_errors_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let train_csv = dir.path().join("train.csv");
    let test_csv = dir.path().join("test.csv");
    let model = dir.path().join("model.json");
    let errors = dir.path().join("errors.csv");
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "widths = [5, 8, 1]\nepochs = 2\nbatch_size = 50\n").unwrap();

    stdout(&evtail(&["dataset", "--domain", "train", "--count", "300", "--steps", "50", "--seed", "1", "--out", p(&train_csv)]));
    stdout(&evtail(&["dataset", "--domain", "test", "--count", "100", "--steps", "50", "--seed", "2", "--out", p(&test_csv)]));
    assert!(std::fs::read_to_string(&train_csv).unwrap().starts_with("K,T,r,q,sigma,price\n"));
    stdout(&evtail(&["train", "--data", p(&train_csv), "--config", p(&config), "--out", p(&model)]));
    stdout(&evtail(&["errors", "--model", p(&model), "--data", p(&test_csv), "--out", p(&errors)]));
    let text = std::fs::read_to_string(&errors).unwrap();
    assert!(text.starts_with("error\n"));
    assert_eq!(text.lines().count(), 101);
}

#[test]
fn tiny_experiment_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(
        &config,
        "version = 1\ntrain_samples = 400\ntest_sets = 3\ntest_set_size = 400\ntree_steps = 30\n\
         widths = [5, 8, 1]\nepochs = 2\ngrid_points = 5\n",
    )
    .unwrap();
    let out = dir.path().join("run");
    stdout(&evtail(&["experiment", "--config", p(&config), "--k", "10", "--seed", "4", "--out", p(&out)]));
    let fig = std::fs::read_to_string(out.join("figure1.csv")).unwrap();
    assert_eq!(fig.lines().next().unwrap(), "x,evt_mean,evt_lo,evt_hi,empirical,markov_m2,markov_m4");
    assert_eq!(fig.lines().count(), 6);
    let echoed = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echoed.contains("k = 10") && echoed.contains("master_seed = 4") && echoed.contains("tree_steps = 30"));
    assert!(out.join("report.json").exists() && out.join("model.json").exists());
}
