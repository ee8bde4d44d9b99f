use std::process::Command;

fn cmaflow(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cmaflow"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

#[test]
fn presets_round_trip() {
    let (code, list) = cmaflow(&["preset"]);
    assert_eq!(code, 0);
    assert!(list.lines().any(|l| l == "small"));
    let (code, text) = cmaflow(&["preset", "small"]);
    assert_eq!(code, 0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.cfg");
    std::fs::write(&path, text).unwrap();
    let out = dir.path().join("run");
    let (code, stdout) = cmaflow(&[
        "flow",
        "run",
        "--config",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.starts_with("PASS"));
    assert!(out.join("summary.txt").exists());
    assert!(out.join("convergence.csv").exists());
}

#[test]
fn barriers_and_elliptic_pass_on_small() {
    let (code, stdout) = cmaflow(&["barriers", "certify", "--preset", "small"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(!stdout.contains("FAIL"));
    let (code, stdout) = cmaflow(&["elliptic", "solve", "--preset", "small"]);
    assert_eq!(code, 0, "{stdout}");
}

#[test]
fn verify_regularize_and_errors() {
    let (code, stdout) = cmaflow(&["verify", "regularize", "--seed", "2", "--cases", "20"]);
    assert_eq!(code, 0, "{stdout}");
    assert_eq!(cmaflow(&["preset", "nope"]).0, 2);
    assert_eq!(cmaflow(&["flow", "run", "--out", "/tmp/x"]).0, 2);
}
