use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use risktool::report::{CompareReport, DemoReport, EvalReport, ModelFile, TrainReport};
use tempfile::TempDir;

fn risktool(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_risktool")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, contents).unwrap();
    p
}

fn run_ok(args: &[&str]) -> String {
    let out = risktool(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn eval_config(dir: &Path, losses: &str, risks: &str) -> String {
    write(dir, "losses.csv", losses);
    write(dir, "eval.json", &format!(r#"{{"losses": "losses.csv", "risks": {risks}}}"#)).display().to_string()
}

#[test]
fn eval_constant_file() {
    let dir = TempDir::new().unwrap();
    let losses = "loss\n".to_owned() + &"5\n".repeat(40);
    let cfg = eval_config(
        dir.path(),
        &losses,
        r#"[{"kind": "mean"}, {"kind": "cvar", "beta": 0.9}, {"kind": "entropic", "gamma": 1}]"#,
    );
    let rep: EvalReport = serde_json::from_str(&run_ok(&["eval", "--config", &cfg])).unwrap();
    assert_eq!(rep.n, 40);
    assert_eq!(rep.rows.len(), 3);
    for r in &rep.rows {
        assert!((r.value - 5.0).abs() < 1e-12, "{r:?}");
    }
}

#[test]
fn eval_cvar_example_and_round_trip() {
    let dir = TempDir::new().unwrap();
    let cfg = eval_config(dir.path(), "loss\n1\n2\n3\n4\n", r#"[{"kind": "cvar", "beta": 0.5}]"#);
    let text = run_ok(&["eval", "--config", &cfg]);
    let rep: EvalReport = serde_json::from_str(&text).unwrap();
    assert!((rep.rows[0].value - 3.5).abs() < 1e-12);
    assert_eq!(rep.rows[0].theta, Some(2.0));
    assert_eq!(serde_json::to_string_pretty(&rep).unwrap() + "\n", text);

    let human = run_ok(&["eval", "--config", &cfg, "--format", "text"]);
    assert!(human.contains("cvar(beta=0.5)") && human.contains("3.5"), "{human}");
}

#[test]
fn eval_grouped_fairness() {
    let dir = TempDir::new().unwrap();
    let cfg = eval_config(dir.path(), "loss,group\n1,a\n3,a\n10,b\n", r#"[{"kind": "fairness_mean_var"}]"#);
    let rep: EvalReport = serde_json::from_str(&run_ok(&["eval", "--config", &cfg])).unwrap();
    // group means 2 and 10 with weights 2/3 and 1/3
    let mean = 14.0 / 3.0;
    let var = (2.0 / 3.0) * (2.0 - mean) * (2.0 - mean) + (1.0 / 3.0) * (10.0 - mean) * (10.0 - mean);
    assert!(rep.grouped);
    assert!((rep.rows[0].value - (mean + var)).abs() < 1e-12);
}

#[test]
fn malformed_row_exits_2_with_line_number() {
    let dir = TempDir::new().unwrap();
    let cfg = eval_config(dir.path(), "loss\n1\n2\nabc\n", r#"[{"kind": "mean"}]"#);
    let out = risktool(&["eval", "--config", &cfg]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn bad_inputs_exit_2_without_panicking() {
    let dir = TempDir::new().unwrap();
    let cases = [
        "not json",
        "[]",
        r#"{"losses": "missing.csv", "risks": [{"kind": "mean"}]}"#,
        r#"{"losses": "x.csv", "risks": []}"#,
        r#"{"losses": "x.csv", "risks": [{"kind": "cvar", "beta": 2}]}"#,
        r#"{"losses": "x.csv", "risks": [{"kind": "nope"}]}"#,
        r#"{"losses": "x.csv", "risks": [{"kind": "mean"}], "typo": 1}"#,
    ];
    for (i, c) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("c{i}.json"), c);
        let out = risktool(&["eval", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code(&out), 2, "{c}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!String::from_utf8_lossy(&out.stderr).contains("panicked"));
    }
    assert_eq!(code(&risktool(&["eval"])), 2);
    assert_eq!(code(&risktool(&["eval", "--config", "/no/such/file.json"])), 2);
    assert_eq!(code(&risktool(&["frobnicate"])), 2);
}

fn train_config(objective: &str, noise: &str, extra: &str) -> String {
    format!(
        r#"{{
  "seed": 3,
  "data": {{"source": "synthetic", "n": 200, "w_star": [2.0, -1.0], "noise": {noise}}},
  "train": {{"loss_kind": "squared", "steps": 3000, "step_size": {{"kind": "inv_sqrt", "a": 0.3}}{extra}}},
  "objective": {objective},
  "risks": [{{"kind": "mean"}}, {{"kind": "cvar", "beta": 0.9}}]
}}"#
    )
}

const ZERO_NOISE: &str = r#"{"family": "finite", "atoms": [[0.0, 1.0]]}"#;

#[test]
fn train_recovers_noiseless_weights() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "t.json", &train_config(r#"{"kind": "mean"}"#, ZERO_NOISE, ""));
    let out = dir.path().join("report.json");
    run_ok(&["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let rep: TrainReport = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!((rep.model.weights[0] - 2.0).abs() < 1e-2, "{:?}", rep.model);
    assert!((rep.model.weights[1] + 1.0).abs() < 1e-2, "{:?}", rep.model);
    assert!(rep.model.bias.abs() < 1e-2);
    assert_eq!(rep.trace.len(), 3000);
    assert_eq!(rep.test.len(), 2);

    let model: ModelFile =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.model.json")).unwrap()).unwrap();
    assert_eq!(model.model(), rep.model);
    assert_eq!(model.config_hash, rep.config_hash);
}

#[test]
fn train_is_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let noise = r#"{"family": "lognormal", "mu": 0.0, "sigma": 1.0}"#;
    let body = train_config(r#"{"kind": "cvar", "beta": 0.8}"#, noise, r#", "batch": {"kind": "minibatch", "m": 32}"#);
    let cfg = write(dir.path(), "t.json", &body);
    let a = run_ok(&["train", "--config", cfg.to_str().unwrap()]);
    let b = run_ok(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(a, b);
    let rep: TrainReport = serde_json::from_str(&a).unwrap();
    assert!(rep.theta.is_some());
}

#[test]
fn zero_gamma_objective_is_rejected_by_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "t.json", &train_config(r#"{"kind": "exp_smooth", "gamma": 0}"#, ZERO_NOISE, ""));
    let out = risktool(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("objective") && err.contains("gamma"), "{err}");
}

#[test]
fn missing_seed_is_a_schema_error() {
    let dir = TempDir::new().unwrap();
    let body = train_config(r#"{"kind": "mean"}"#, ZERO_NOISE, "").replace(r#""seed": 3,"#, "");
    let cfg = write(dir.path(), "t.json", &body);
    let out = risktool(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn divergence_exits_1_with_trace_prefix() {
    let dir = TempDir::new().unwrap();
    let body = train_config(r#"{"kind": "mean"}"#, ZERO_NOISE, "")
        .replace(r#"{"kind": "inv_sqrt", "a": 0.3}"#, r#"{"kind": "constant", "a": 50.0}"#);
    let cfg = write(dir.path(), "t.json", &body);
    let out = risktool(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trace prefix"));
}

#[test]
fn train_from_csv_files() {
    let dir = TempDir::new().unwrap();
    let mut rows = String::from("f1,label\n");
    for i in 0..50 {
        let x = i as f64 / 10.0 - 2.5;
        rows += &format!("{x},{}\n", 3.0 * x + 1.0);
    }
    write(dir.path(), "train.csv", &rows);
    let cfg = write(
        dir.path(),
        "t.json",
        r#"{"seed": 1, "data": {"source": "file", "path": "train.csv"},
            "train": {"loss_kind": "squared", "steps": 4000, "step_size": {"kind": "inv_sqrt", "a": 0.2}},
            "objective": {"kind": "mean"}}"#,
    );
    let rep: TrainReport = serde_json::from_str(&run_ok(&["train", "--config", cfg.to_str().unwrap()])).unwrap();
    assert!((rep.model.weights[0] - 3.0).abs() < 1e-2 && (rep.model.bias - 1.0).abs() < 1e-2, "{:?}", rep.model);
    assert_eq!(rep.n_test, 50);
}

fn compare_config(objectives: &str) -> String {
    format!(
        r#"{{
  "seed": 5,
  "data": {{"source": "synthetic", "n": 1000, "w_star": [1.0],
           "noise": {{"family": "finite", "atoms": [[-0.5, 0.45], [0.5, 0.45], [10.0, 0.1]]}}}},
  "train": {{"loss_kind": "squared", "steps": 3000, "step_size": {{"kind": "inv_sqrt", "a": 0.2}}, "averaging": "best"}},
  "objectives": {objectives},
  "risks": [{{"kind": "mean"}}, {{"kind": "cvar", "beta": 0.9}}]
}}"#
    )
}

#[test]
fn compare_identical_objectives_give_identical_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &compare_config(r#"[{"kind": "avg_top_k", "k": 30}, {"kind": "avg_top_k", "k": 30}]"#),
    );
    let rep: CompareReport = serde_json::from_str(&run_ok(&["compare", "--config", cfg.to_str().unwrap()])).unwrap();
    assert_eq!(rep.matrix[0], rep.matrix[1]);
    assert_eq!(rep.summaries[0], rep.summaries[1]);
}

#[test]
fn compare_cvar_model_wins_on_cvar() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", &compare_config(r#"[{"kind": "mean"}, {"kind": "cvar", "beta": 0.9}]"#));
    let rep: CompareReport = serde_json::from_str(&run_ok(&["compare", "--config", cfg.to_str().unwrap()])).unwrap();
    assert_eq!(rep.matrix.len(), 2);
    assert!(rep.matrix[1][1] < rep.matrix[0][1], "{:?}", rep.matrix);
    assert!(rep.matrix[1][0] > rep.matrix[0][0], "{:?}", rep.matrix);
    assert_eq!(rep.summaries[0].quantiles.len(), rep.levels.len());
    let text = run_ok(&["compare", "--config", cfg.to_str().unwrap(), "--format", "text"]);
    assert!(text.contains("cvar(beta=0.9)"));
}

#[test]
fn compare_needs_two_objectives() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", &compare_config(r#"[{"kind": "mean"}]"#));
    assert_eq!(code(&risktool(&["compare", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn demo_builtin_and_configured() {
    let rep: DemoReport = serde_json::from_str(&run_ok(&["demo"])).unwrap();
    assert_eq!(rep.rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![100, 1_000, 10_000, 100_000]);
    for r in &rep.rows {
        assert!(r.median_range[0] >= 2.0 && r.median <= r.cvar_90 && r.mean <= r.entropic, "{r:?}");
        assert!(r.mean_range[1] - r.mean_range[0] > r.median_range[1] - r.median_range[0]);
    }

    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "d.json",
        r#"{"seed": 9, "demo": {"preset": "stpetersburg", "sizes": [500], "replicates": 4}}"#,
    );
    let rep: DemoReport = serde_json::from_str(&run_ok(&["demo", "--config", cfg.to_str().unwrap()])).unwrap();
    assert_eq!(rep.rows.len(), 1);
    assert_eq!(rep.replicates, 4);
    let cfg = write(dir.path(), "e.json", r#"{"demo": {"preset": "stpetersburg"}}"#);
    assert_eq!(code(&risktool(&["demo", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn shipped_configs_run() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for (cmd, file) in
        [("eval", "eval.json"), ("train", "train.json"), ("compare", "compare_outliers.json"), ("demo", "demo.json")]
    {
        let p = configs.join(file);
        run_ok(&[cmd, "--config", p.to_str().unwrap(), "--format", "text"]);
    }
}
