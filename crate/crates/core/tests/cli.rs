use std::fs;
use std::process::Command;

fn plumestack() -> Command {
    Command::new(env!("CARGO_BIN_EXE_plumestack"))
}

const SMALL: &str = r#"
seed = 5
holdout_times = [120.0]

[scenario]
grid_size = 21
cell_m = 360.0
n_timesteps = 9
step_minutes = 30.0
target_positive_fraction = 0.06

[classification]
preset = "fast-classification"

[regression]
preset = "fast-regression"

[search]
task = "classification"
family = "random_forest"

[search.space]
max_depth = { type = "integer", low = 2, high = 12 }
criterion = { type = "categorical", choices = ["gini", "entropy"] }

[search.settings]
max_budget = 9
eta = 3
"#;

#[test]
fn exit_codes() {
    let usage = plumestack().arg("frobnicate").output().unwrap();
    assert_eq!(usage.status.code(), Some(1));
    let help = plumestack().arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout);
    for sub in ["generate", "train", "evaluate", "predict", "tune", "report"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }

    let dir = tempfile::tempdir().unwrap();
    let missing = plumestack()
        .args(["evaluate", "nope.model", "nope.csv"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "train_fraction = 2.0\n").unwrap();
    let out = plumestack().args(["train", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let threads = plumestack().arg("report").env("PLUMESTACK_THREADS", "many").output().unwrap();
    assert_eq!(threads.status.code(), Some(1));
}

#[test]
fn generate_train_predict_tune_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    fs::write(&config, SMALL).unwrap();
    let run = |args: &[&str]| {
        let out = plumestack()
            .args(args)
            .env("PLUMESTACK_THREADS", "1")
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    };

    run(&["generate", "--config", "small.toml", "--out", "gen"]);
    assert!(dir.path().join("gen/scenario.csv").exists());
    assert!(dir.path().join("gen/scenario_stats.json").exists());

    let text = run(&["train", "--config", "small.toml", "--out", "run", "--seed", "8", "--layers", "1", "--task", "regression"]);
    assert!(text.contains("WeightedEnsemble_L2"));
    assert!(!text.contains("WeightedEnsemble_L3"));

    run(&["predict", "run/regression.model", "run/holdout.csv", "--out", "pred", "--grid"]);
    assert!(dir.path().join("pred/grid/regression_t120.csv").exists());

    let report = run(&["report", "--out", "run"]);
    assert!(report.contains("master seed 8"));

    let tuned = run(&["tune", "--config", "small.toml", "--out", "tune"]);
    assert!(tuned.contains("trials"), "{tuned}");
    let history = fs::read_to_string(dir.path().join("tune/tuning_history.csv")).unwrap();
    assert!(history.starts_with("trial_id,bracket,rung,criterion,max_depth,budget,objective,status"));
    assert_eq!(history.lines().count(), 1 + 22);
}
