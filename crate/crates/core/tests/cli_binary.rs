//! Drives the installed binary: process exit codes and file outputs.

use std::process::Command;

fn froblab(args: &[&str]) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_froblab")).args(args).output().expect("spawn");
    (o.status.code().unwrap_or(-1), String::from_utf8(o.stdout).unwrap())
}

#[test]
fn exit_codes() {
    assert_eq!(froblab(&["strata", "--m", "3"]).0, 0);
    assert_eq!(froblab(&["strata", "--m", "0"]).0, 2);
    assert_eq!(froblab(&["no-such-command"]).0, 2);
    assert_eq!(froblab(&["--help"]).0, 0);
}

#[test]
fn spec_file_with_csv_output() {
    let dir = std::env::temp_dir().join(format!("froblab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let spec = dir.join("run.json");
    std::fs::write(
        &spec,
        r#"{"command": "flow", "system": "toda", "m": 2, "n": 1, "grid_n": 64, "dt": 0.01, "steps": 20,
            "init": {"base": [1.0, 0.5], "amplitude": [0.01, 0.01]}}"#,
    )
    .unwrap();
    let (code, out) = froblab(&["flow", "--spec", spec.to_str().unwrap(), "--steps", "10", "--out", dir.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    let csv = std::fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    assert!(csv.lines().count() > 64);
    std::fs::remove_dir_all(&dir).unwrap();
}
