use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn out_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("venttsel-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_venttsel")).args(args).output().expect("binary runs")
}

#[test]
fn check_writes_report_and_summary() {
    let dir = out_dir("check");
    let out = run(&["check", "--out", dir.to_str().unwrap(), "--seed", "11", "--threads", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.join("summary")).unwrap();
    assert!(summary.contains("seed=11") && summary.contains("failed=0"), "{summary}");
    let csv = fs::read_to_string(dir.join("checks.csv")).unwrap();
    assert!(csv.starts_with("module,quantity,value,limit,pass"));
    assert!(!csv.contains(",false"));
    let saved = fs::read_to_string(dir.join("config.toml")).unwrap();
    assert!(saved.contains("seed = 11"));
}

#[test]
fn mesh_from_config_file() {
    let dir = out_dir("mesh");
    fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("scenario.toml");
    fs::write(&cfg, "[geometry]\nlevel = 1\n[mesh]\nouter_h = 0.5\n").unwrap();
    let out = run(&["mesh", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["mesh.txt", "mesh.vtk", "curve.txt", "summary"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    assert!(fs::read_to_string(dir.join("summary")).unwrap().contains("level=1"));
}

#[test]
fn invalid_config_is_rejected_with_its_path() {
    let dir = out_dir("bad");
    fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("bad.toml");
    fs::write(&cfg, "[coefficients]\nb = -1.0\n").unwrap();
    let out = run(&["transmission", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("coefficients.b"));
}
