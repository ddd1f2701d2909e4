use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ris-ssk"))
}

const CONFIG: &str = r#"{
    "n_tx": 2, "n_rx": 2, "n_ris": 4, "q_bits": 1,
    "rician_k": 3.0,
    "alpha_direct": 2.8, "alpha_tx_ris": 2.2, "alpha_ris_rx": 2.2,
    "pos_tx": [0.0, 10.0], "pos_ris": [40.0, 4.0], "pos_rx": [40.0, 0.0],
    "noise_n0": 1.0, "seed": 3
}"#;

#[test]
fn custom_run_and_summarize_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, CONFIG).unwrap();

    let out = bin()
        .args([
            "run",
            "--config",
            cfg_path.to_str().unwrap(),
            "--schemes",
            "random,no_ris",
            "--symbols",
            "2000",
            "--realizations",
            "2",
            "--snr",
            "0:5:10",
            "--out",
            dir.path().to_str().unwrap(),
            "--name",
            "smoke",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let csv = dir.path().join("smoke.csv");
    let sidecar = dir.path().join("smoke.sidecar.json");
    assert!(csv.exists() && sidecar.exists());
    let parsed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&sidecar).unwrap()).unwrap();
    assert_eq!(parsed["experiment"], "smoke");

    let sum = bin()
        .args(["summarize", csv.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(sum.status.success());
    let text = String::from_utf8_lossy(&sum.stdout);
    assert!(text.contains("schemes: 2"), "report: {text}");
}

#[test]
fn invalid_config_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.json");
    fs::write(&cfg_path, CONFIG.replace("\"n_tx\": 2", "\"n_tx\": 3")).unwrap();
    let out = bin()
        .args([
            "run",
            "--config",
            cfg_path.to_str().unwrap(),
            "--schemes",
            "no_ris",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_tx"));
}

#[test]
fn empty_scheme_list_is_rejected_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, CONFIG).unwrap();
    let out = bin()
        .args(["run", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schemes"));
}

#[test]
fn missing_input_file_exits_3() {
    let out = bin()
        .args(["summarize", "/nonexistent/p.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_preset_exits_2() {
    let out = bin().args(["run", "--preset", "fig9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
