use std::process::Command;

fn bkdv() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bkdv"))
}

#[test]
fn spectrum_prints_report() {
    let out = bkdv().arg("spectrum").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rho = report["rho"].as_f64().unwrap();
    assert!(rho > 0.0);
    assert_eq!(report["negative_count"], 1);
    assert!(report["basin"]["translation"].as_f64().unwrap() > 0.1);
}

#[test]
fn bad_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"dt": 1e-3, "no_such_key": 1}"#).unwrap();
    let out = bkdv().args(["track", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Exceeds the 1/(ε_aε_x) horizon.
    std::fs::write(
        &path,
        r#"{"potential": {"family": "gaussian_bump", "eps_a": 0.1, "eps_x": 0.1}, "t_end": 500}"#,
    )
    .unwrap();
    let out = bkdv().args(["track", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn track_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"grid": {"half_length": 30, "points": 256}, "dt": 2e-3, "t_end": 0.5, "eps0": 0.01}"#)
        .unwrap();
    let out_dir = dir.path().join("run");
    let out = bkdv().args(["track", "--seed", "4", "--config"]).arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let track = std::fs::read_to_string(out_dir.join("track.csv")).unwrap();
    assert!(track.starts_with(bkdv::harness::TRACK_HEADER));
    assert!(track.lines().count() > 2);
    assert!(out_dir.join("summary.json").exists());
    let saved: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("config.json")).unwrap()).unwrap();
    assert_eq!(saved["seed"], 4);
}
