use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_singlerail"))
        .args(args)
        .output()
        .unwrap()
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_singlerail"))
        .args(args)
        .env(key, value)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn qubit(alpha: f64, beta: f64, e: f64) -> String {
    format!(r#"{{"alpha": [{alpha}, 0], "beta": [{beta}, 0], "efficiency": {e}}}"#)
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn close(a: &Value, b: f64, tol: f64) -> bool {
    (a.as_f64().unwrap() - b).abs() < tol
}

#[test]
fn efficiency_examples() {
    let out = run(&["efficiency", &qubit(1.0, 0.0, 0.0)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["gen_efficiency"].as_f64(), Some(0.0));

    let out = run(&["efficiency", &qubit(S, S, 0.8)]);
    assert_eq!(json(&out)["gen_efficiency"].as_f64(), Some(0.666666666667));

    let dir = TempDir::new().unwrap();
    let rho = write(
        &dir,
        "rho.json",
        r#"{"rho": [[[0.7, 0], [0.3, 0]], [[0.3, 0], [0.3, 0]]]}"#,
    );
    let v = json(&run(&["efficiency", p(&rho)]));
    assert_eq!(v["gen_efficiency"].as_f64(), Some(0.428571428571));
    assert_eq!(v["density_matrix"]["rho"][0][1][0].as_f64(), Some(0.3));
}

#[test]
fn efficiency_errors() {
    let out = run(&["efficiency", r#"{"alpha": 1}"#]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("efficiency"));
    assert_eq!(
        run(&["efficiency", "/nonexistent/state.json"])
            .status
            .code(),
        Some(2)
    );
    let out = run(&[
        "efficiency",
        r#"{"rho": [[[0.7, 0], [0.6, 0]], [[0.6, 0], [0.3, 0]]]}"#,
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(
        run(&["efficiency", &qubit(S, S, 1.5)]).status.code(),
        Some(3)
    );
}

#[test]
fn convert_standard_example() {
    let out = run(&[
        "convert",
        &qubit(0.0, 1.0, 0.8),
        "--bs-t",
        &S.to_string(),
        "--Q",
        "0.5",
        "--phi",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["success_density"].as_f64(), Some(0.483941449038));
    assert_eq!(v["output"]["efficiency"].as_f64(), Some(0.8));
    assert!(close(&v["output"]["alpha"][0], S, 1e-11));
    assert!(v["residuals"]["amplitude_relation"].as_f64().unwrap() < 1e-12);
    assert!(v["residuals"]["transfer_relation"].as_f64().unwrap() < 1e-10);
    assert!(v["residuals"]["success_density_formula"].as_f64().unwrap() < 1e-10);

    // negative outcome flips the sign of the vacuum amplitude
    let v = json(&run(&[
        "convert",
        &qubit(0.0, 1.0, 0.8),
        "--bs-t",
        &S.to_string(),
        "--Q",
        "-0.5",
    ]));
    assert!(close(&v["output"]["beta"][0], -S, 1e-11));
}

#[test]
fn convert_errors() {
    let out = run(&[
        "convert",
        &qubit(0.0, 1.0, 0.8),
        "--bs-t",
        "0.5",
        "--Q",
        "40",
    ]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(
        run(&[
            "convert",
            &qubit(0.0, 1.0, 0.8),
            "--bs-t",
            "1.5",
            "--Q",
            "0"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        run(&["convert", &qubit(0.0, 1.0, 0.8), "--bs-t", "0.5"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn plan_standard_pair() {
    let out = run(&["plan", &qubit(0.0, 1.0, 0.8), &qubit(S, S, 0.85)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"]["verdict"], "FEASIBLE_STRICT");
    let stage = &v["plan"]["stages"][0];
    assert!(close(&stage["beam_splitter_t"], 0.84163, 1e-5));
    assert!(close(&stage["homodyne"]["Q"], 0.77920, 1e-5));
    assert!(close(&stage["homodyne"]["phi"], 0.0, 1e-12));
    assert!(v["plan"]["predicted_success_density"].as_f64().unwrap() > 0.0);
}

#[test]
fn plan_infeasible_prints_verdict() {
    let out = run(&["plan", &qubit(S, S, 0.85), &qubit(0.0, 1.0, 0.8)]);
    assert_eq!(out.status.code(), Some(4));
    let v = json(&out);
    assert_eq!(v["verdict"]["verdict"], "INFEASIBLE");
    assert_eq!(
        v["verdict"]["reason"],
        "generalized efficiency would increase"
    );
    assert!(v.get("plan").is_none());
}

#[test]
fn plan_identical_states() {
    let state = qubit(0.6, 0.8, 0.7);
    let v = json(&run(&["plan", &state, &state]));
    assert_eq!(v["verdict"]["verdict"], "FEASIBLE_EQUAL_PHASE");
    let stage = &v["plan"]["stages"][0];
    assert_eq!(stage["beam_splitter_t"].as_f64(), Some(1.0));
    assert_eq!(stage["homodyne"]["Q"].as_f64(), Some(0.0));
}

#[test]
fn plan_flags() {
    let pure = qubit(S, S, 1.0);
    let photon = qubit(0.0, 1.0, 0.9);
    let v = json(&run(&["plan", &pure, &photon, "--attenuation-mid", "0.25"]));
    assert_eq!(v["verdict"]["verdict"], "FEASIBLE_VIA_ATTENUATION");
    // ℰ after attenuation = 0.9 + 0.25·0.1, and attenuation scales ℰ by τ²
    assert!(close(
        &v["plan"]["stages"][0]["attenuation"],
        0.925f64.sqrt(),
        1e-11
    ));

    let v = json(&run(&[
        "plan",
        &qubit(0.0, 1.0, 1.0),
        &pure,
        "--case1-t",
        "0.5",
    ]));
    assert_eq!(v["verdict"]["verdict"], "FEASIBLE_EQUAL_PURE");
    assert_eq!(
        v["plan"]["stages"][0]["beam_splitter_t"].as_f64(),
        Some(0.5)
    );
    assert_eq!(
        run(&["plan", &pure, &photon, "--attenuation-mid", "1.5"])
            .status
            .code(),
        Some(2)
    );
}

fn standard_plan(dir: &TempDir) -> PathBuf {
    let out = run(&["plan", &qubit(0.0, 1.0, 0.8), &qubit(S, S, 0.85)]);
    write(dir, "plan.json", std::str::from_utf8(&out.stdout).unwrap())
}

#[test]
fn verify_standard_plan() {
    let dir = TempDir::new().unwrap();
    let plan = standard_plan(&dir);
    let out = run(&["verify", p(&plan)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert!(v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["pass"] == true));
    assert_eq!(v["monte_carlo"]["rate_pass"], true);
    assert_eq!(v["monte_carlo"]["state_pass"], true);
}

#[test]
fn verify_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let plan = standard_plan(&dir);
    let args = [
        "verify",
        p(&plan),
        "--samples",
        "50000",
        "--seed",
        "17",
        "--window",
        "0.02",
    ];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&[
        "verify",
        p(&plan),
        "--samples",
        "50000",
        "--seed",
        "18",
        "--window",
        "0.02",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn verify_without_sampling() {
    let dir = TempDir::new().unwrap();
    let plan = standard_plan(&dir);
    let out = run(&["verify", p(&plan), "--samples", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["monte_carlo"].is_null());
    assert!(!v["checks"].as_array().unwrap().is_empty());
}

#[test]
fn verify_rejects_corrupted_plan() {
    let dir = TempDir::new().unwrap();
    let mut v: Value =
        serde_json::from_slice(&std::fs::read(standard_plan(&dir)).unwrap()).unwrap();
    let plan = &mut v["plan"];
    let t = plan["stages"][0]["beam_splitter_t"].as_f64().unwrap();
    plan["stages"][0]["beam_splitter_t"] = (t - 0.1).into();
    let bad = write(&dir, "bad.json", &plan.to_string());
    let out = run(&["verify", p(&bad), "--samples", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], false);
    // a loose enough tolerance accepts it
    let out = run_env(
        &["verify", p(&bad), "--samples", "0"],
        "SINGLERAIL_TOLERANCE",
        "1",
    );
    assert_eq!(out.status.code(), Some(0));
    let out = run_env(
        &["verify", p(&bad), "--samples", "0"],
        "SINGLERAIL_TOLERANCE",
        "tight",
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_input_and_errors() {
    let dir = TempDir::new().unwrap();
    let plan = standard_plan(&dir);
    assert_eq!(
        run(&["verify", p(&plan), "--samples", "0", "--truncation", "0"])
            .status
            .code(),
        Some(6)
    );

    let mut v: Value = serde_json::from_slice(&std::fs::read(&plan).unwrap()).unwrap();
    v["plan"].as_object_mut().unwrap().remove("input");
    let bare = write(&dir, "bare.json", &v["plan"].to_string());
    assert_eq!(
        run(&["verify", p(&bare), "--samples", "0"]).status.code(),
        Some(2)
    );
    let photon = qubit(0.0, 1.0, 0.8);
    let out = run(&["verify", p(&bare), "--samples", "0", "--input", &photon]);
    assert_eq!(out.status.code(), Some(0));
    // a different input no longer reproduces the prediction
    let other = qubit(0.0, 1.0, 0.7);
    assert_eq!(
        run(&["verify", p(&bare), "--samples", "0", "--input", &other])
            .status
            .code(),
        Some(1)
    );
    let junk = write(&dir, "junk.json", r#"{"stages": 3}"#);
    assert_eq!(run(&["verify", p(&junk)]).status.code(), Some(2));
}

#[test]
fn plan_output_round_trips() {
    let dir = TempDir::new().unwrap();
    let text = std::fs::read_to_string(standard_plan(&dir)).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let plan: singlerail::ConversionPlan = serde_json::from_value(v["plan"].clone()).unwrap();
    assert_eq!(plan.stages.len(), 1);
    let verdict: singlerail::FeasibilityVerdict =
        serde_json::from_value(v["verdict"].clone()).unwrap();
    assert!(verdict.is_feasible());
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn sweep_over_outcome() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("sweep.csv");
    let out = run(&[
        "sweep",
        &qubit(0.0, 1.0, 0.8),
        "--axis",
        "Q",
        "--min",
        "-2",
        "--max",
        "2",
        "--steps",
        "41",
        "--out",
        p(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["rows"].as_u64(), Some(41));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("param,alpha_re,alpha_im,beta_re,beta_im,E,gen_eff,success_density")
    );
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 41);
    assert!(rows.iter().all(|r| r[6] <= 0.8 + 1e-12));
}

#[test]
fn single_step_sweep_matches_convert() {
    let state = qubit(0.6, 0.8, 0.9);
    let out = run(&[
        "sweep", &state, "--axis", "t", "--min", "0.4", "--max", "0.4", "--steps", "1", "--Q",
        "0.3", "--phi", "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(rows.len(), 1);
    let v = json(&run(&[
        "convert", &state, "--bs-t", "0.4", "--Q", "0.3", "--phi", "1",
    ]));
    assert!(close(&v["success_density"], rows[0][7], 1e-11));
    assert!(close(&v["output"]["efficiency"], rows[0][5], 1e-11));
    assert!(close(&v["output"]["beta"][1], rows[0][4], 1e-11));
}

#[test]
fn sweep_over_target_efficiency() {
    let out = run(&[
        "sweep",
        &qubit(0.0, 1.0, 0.8),
        "--axis",
        "E'",
        "--min",
        "0.1",
        "--max",
        "1",
        "--steps",
        "10",
        "--target",
        &qubit(S, S, 1.0),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(std::str::from_utf8(&out.stdout).unwrap());
    // E' = 0.9 and 1 would raise ℰ above 0.8
    assert_eq!(rows.len(), 8);
    for r in &rows {
        assert!((r[5] - r[0]).abs() < 1e-9);
        assert!(r[6] <= 0.8);
        assert!(r[7] > 0.0);
    }
    assert_eq!(
        run(&[
            "sweep",
            &qubit(0.0, 1.0, 0.8),
            "--axis",
            "Q",
            "--min",
            "0",
            "--max",
            "1",
            "--steps",
            "0"
        ])
        .status
        .code(),
        Some(2)
    );
}
