use std::process::{Command, Output};

fn lqmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lqmd"))
        .args(args)
        .env_remove("LQMD_OUT_DIR")
        .output()
        .expect("spawn lqmd")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn marginal_prints_exact_half() {
    for strategy in ["cpm", "spm"] {
        let o = lqmd(&["marginal", "--strategy", strategy]);
        assert!(o.status.success());
        assert_eq!(stdout(&o), "1/2 1/2\n");
    }
}

#[test]
fn enumerate_json_to_stdout() {
    let o = lqmd(&["enumerate", "--strategy", "spm", "--qubits", "4"]);
    assert!(o.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 8);
    let census = String::from_utf8_lossy(&o.stderr);
    assert!(census.contains("8 branches"));
    assert!(census.contains("total probability 1"));
}

#[test]
fn enumerate_csv_has_one_row_per_branch() {
    let o = lqmd(&["enumerate", "--strategy", "cpm", "--qubits", "5", "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1 + 16);
}

#[test]
fn bad_parameters_are_usage_errors() {
    for args in [
        &["enumerate", "--qubits", "2", "--strategy", "spm"][..],
        &["enumerate", "--x-sq", "3/2"],
        &["enumerate", "--x-sq", "abc"],
        &["enumerate", "--qubits", "17"],
        &["simulate"],
        &["discriminate", "--trials", "3"],
        &["simulate", "--seed", "1", "--per-group", "0"],
        &["enumerate", "--strategy", "bogus"],
    ] {
        let o = lqmd(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn plan_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.json");
    std::fs::write(
        &path,
        r#"{"qubits":3,"bases":{"":{"c0":{"sign":1,"mag_sq":{"num":"1","den":"2"}},"c1":{"sign":1,"mag_sq":{"num":"1","den":"2"}}},
            "0":{"c0":{"sign":1,"mag_sq":{"num":"1","den":"1"}},"c1":{"sign":0,"mag_sq":{"num":"0","den":"1"}}},
            "1":{"c0":{"sign":1,"mag_sq":{"num":"1","den":"3"}},"c1":{"sign":-1,"mag_sq":{"num":"2","den":"3"}}}}}"#,
    )
    .unwrap();
    let o = lqmd(&["marginal", "--plan", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "1/2 1/2\n");
}

#[test]
fn out_dir_env_sets_default_destination() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_lqmd"))
        .args(["simulate", "--seed", "4", "--format", "csv"])
        .env("LQMD_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("simulate-seed4.csv")).unwrap();
    assert!(text.starts_with("trial,group,zeros,ones,ratio,eta_hits,decision\n"));
    assert_eq!(text.lines().count(), 1 + 20);
}

#[test]
fn simulate_json_shape() {
    let o = lqmd(&["simulate", "--seed", "11", "--trials", "2", "--strategy", "cpm"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["seed"], 11);
    assert_eq!(v["per_trial"].as_array().unwrap().len(), 2);
    assert_eq!(v["summary"]["states"], 1200);
    assert_eq!(v["summary"]["oracle_p1"]["num"], "1");
    assert_eq!(v["summary"]["oracle_p1"]["den"], "2");
    assert_eq!(v["summary"]["eta_hits"], 0);
    assert!(v["summary"]["w_values"][29]["w"].is_null());
}

#[test]
fn verify_passes_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let o = lqmd(&["verify", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("0 failed"));
    let checks: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    let refuted = checks
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["check_name"] == "claimed_spm_bob_ratio_at_least_1_655")
        .unwrap();
    assert_eq!(refuted["status"], "REFUTED");
}
