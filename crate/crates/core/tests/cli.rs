use std::path::Path;
use std::process::{Command, Output};

use uavpath::eval::read_trajectories;
use uavpath::trainer::read_trace;
use uavpath::ScenarioConfig;

fn uavpath(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uavpath"))
        .args(args)
        .current_dir(dir)
        .env("UAVPATH_OUT_DIR", dir)
        .output()
        .expect("run uavpath")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_config(dir: &Path, name: &str, preset: &str, devices: &str) -> String {
    let out = uavpath(dir, &["gen-scenario", "--preset", preset, "--devices", devices, "--out", name]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    name.to_string()
}

#[test]
fn gen_scenario_is_complete_and_reproducible() {
    let d = tempfile::tempdir().unwrap();
    small_config(d.path(), "a.json", "single", "40");
    small_config(d.path(), "b.json", "single", "40");
    let a = std::fs::read(d.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(d.path().join("b.json")).unwrap());
    let c = ScenarioConfig::load(&d.path().join("a.json")).unwrap();
    assert_eq!((c.n_t1, c.n_devices, c.n_t2, c.jammer), (1, 40, 10, false));
    assert_eq!(ScenarioConfig::from_json(&c.to_json().unwrap()).unwrap(), c);
    // every field is materialized, none left to serde defaults
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert!(v["channel"]["rayleigh_fading"].is_boolean());
    assert!(v["train"]["hidden_sizes"].is_array());

    small_config(d.path(), "j.json", "jammed", "10");
    assert!(ScenarioConfig::load(&d.path().join("j.json")).unwrap().jammer);
}

#[test]
fn gen_scenario_usage_errors() {
    let d = tempfile::tempdir().unwrap();
    let zero = uavpath(d.path(), &["gen-scenario", "--preset", "single", "--devices", "0"]);
    assert_eq!(code(&zero), 2);
    let unknown = uavpath(d.path(), &["gen-scenario", "--preset", "triple"]);
    assert_eq!(code(&unknown), 2);
    let none = uavpath(d.path(), &[]);
    assert_eq!(code(&none), 2);
}

#[test]
fn out_dir_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let out = uavpath(d.path(), &["gen-scenario", "--preset", "swarm2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(ScenarioConfig::load(&d.path().join("scenario.json")).unwrap().n_t1, 2);
}

#[test]
fn train_flag_consistency() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small_config(d.path(), "j.json", "jammed", "10");
    let out = uavpath(d.path(), &["train", "--config", &cfg, "--scenario-kind", "jammer", "--episodes", "1"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--frozen-t1"), "{}", stderr(&out));
    let out = uavpath(d.path(), &["train", "--config", &cfg, "--scenario-kind", "retrain", "--episodes", "1"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--frozen-jammer"));
    let single = small_config(d.path(), "s.json", "single", "10");
    let out = uavpath(d.path(), &["train", "--config", &single, "--scenario-kind", "swarm", "--episodes", "0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn smoke_train_then_eval_then_plot() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small_config(d.path(), "s.json", "single", "10");
    let out = uavpath(
        d.path(),
        &["train", "--config", &cfg, "--scenario-kind", "single", "--episodes", "1", "--out-checkpoint", "p.d3qn", "--trace", "t.csv"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(read_trace(&d.path().join("t.csv")).unwrap().len(), 1);

    let eval = |metrics: &str, traj: &str| {
        uavpath(
            d.path(),
            &[
                "eval", "--config", &cfg, "--checkpoints", "p.d3qn", "--episodes", "4", "--seed", "11", "--metrics-out", metrics, "--traj-out",
                traj,
            ],
        )
    };
    let a = eval("m1.csv", "t1.jsonl");
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert!(String::from_utf8_lossy(&a.stdout).contains("success rate (SR)"));
    assert_eq!(code(&eval("m2.csv", "t2.jsonl")), 0);
    assert_eq!(std::fs::read(d.path().join("m1.csv")).unwrap(), std::fs::read(d.path().join("m2.csv")).unwrap());
    assert_eq!(read_trajectories(&d.path().join("t1.jsonl")).unwrap().header.episodes.len(), 4);

    let p = uavpath(d.path(), &["plot", "--traj", "t1.jsonl", "--episode", "3", "--out", "f.svg"]);
    assert_eq!(code(&p), 0, "{}", stderr(&p));
    assert!(std::fs::read_to_string(d.path().join("f.svg")).unwrap().starts_with("<svg"));
    let p = uavpath(d.path(), &["plot", "--traj", "t1.jsonl", "--episode", "4"]);
    assert_eq!(code(&p), 2);
    assert!(stderr(&p).contains("out of range"));
}

#[test]
fn eval_error_codes() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small_config(d.path(), "s.json", "single", "10");
    let missing = uavpath(d.path(), &["eval", "--config", &cfg, "--checkpoints", "nope.d3qn", "--episodes", "1"]);
    assert_eq!(code(&missing), 4);

    // a checkpoint trained on 10 devices does not fit a 20-device scenario
    let out = uavpath(d.path(), &["train", "--config", &cfg, "--scenario-kind", "single", "--episodes", "1", "--out-checkpoint", "p.d3qn"]);
    assert_eq!(code(&out), 0);
    let wide = small_config(d.path(), "w.json", "single", "20");
    let mismatch = uavpath(d.path(), &["eval", "--config", &wide, "--checkpoints", "p.d3qn", "--episodes", "1"]);
    assert_eq!(code(&mismatch), 3);
    assert!(stderr(&mismatch).contains("width"), "{}", stderr(&mismatch));

    std::fs::write(d.path().join("bad.json"), "{}").unwrap();
    let bad = uavpath(d.path(), &["eval", "--config", "bad.json", "--episodes", "1"]);
    assert_eq!(code(&bad), 3);
}

#[test]
fn baseline_eval_without_checkpoint() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small_config(d.path(), "s.json", "single", "10");
    let out = uavpath(d.path(), &["eval", "--config", &cfg, "--baseline", "hover", "--episodes", "2", "--workers", "2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let m = std::fs::read_to_string(d.path().join("metrics.csv")).unwrap();
    let row: Vec<&str> = m.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[2], "0");
}

#[test]
fn selfcheck_passes_and_reports_corruption() {
    let d = tempfile::tempdir().unwrap();
    let ok = uavpath(d.path(), &["selfcheck"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    let text = String::from_utf8_lossy(&ok.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5);

    let bad = uavpath(d.path(), &["selfcheck", "--corrupt-gradient"]);
    assert_ne!(code(&bad), 0);
    let text = String::from_utf8_lossy(&bad.stdout);
    assert!(text.lines().any(|l| l.starts_with("FAIL gradient")));
}
