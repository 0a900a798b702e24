use std::process::{Command, Output};

fn wedgeforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wedgeforge")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_ccr_small_grid_exits_zero() {
    let o = wedgeforge(&["verify-ccr", "--nmax", "3", "--nodes", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!lines.is_empty());
    assert!(lines.iter().all(|v| v["pass"] == true));
}

#[test]
fn crossbreaker_flags_the_expected_violation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = wedgeforge(&["--out", out, "check-function", "--family", "crossbreaker", "--w", "0.3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("function/crossbreaker/real/unitarity"));
    let neutral = text.lines().find(|l| l.contains("crossing/neutral")).expect("crossing line");
    assert!(neutral.ends_with("FAIL (expected violation)"), "{neutral}");
    let jsonl = std::fs::read_to_string(dir.path().join("report.jsonl")).unwrap();
    let rec: serde_json::Value = jsonl
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .find(|v| v["id"] == "function/crossbreaker/crossing/neutral")
        .unwrap();
    assert_eq!(rec["pass"], false);
    assert_eq!(rec["expected_violation"], true);
    assert!(dir.path().join("summary.txt").exists());
}

#[test]
fn winding_of_opposite_rotations() {
    let o = wedgeforge(&["winding", "--wedge1", "rot(0)", "--wedge2", "rot(pi)", "--samples", "20"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("rot(0) -> rot(pi): N = -1, k = 1"), "{}", stdout(&o));
}

#[test]
fn non_separated_wedges_are_a_config_error() {
    let o = wedgeforge(&["winding", "--wedge1", "rot(0)", "--wedge2", "rot(0.5)"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_config_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[campaign]\nnmax = 9\n").unwrap();
    let o = wedgeforge(&["--config", path.to_str().unwrap(), "verify-ccr"]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&path, "[nonsense]\nx = 1\n").unwrap();
    let o = wedgeforge(&["--config", path.to_str().unwrap(), "verify-ccr"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cli_flags_override_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, "[campaign]\nseed = 1\nsamples = 30\n").unwrap();
    let p = path.to_str().unwrap();
    let from_file = stdout(&wedgeforge(&["--config", p, "cocycle"]));
    let overridden = stdout(&wedgeforge(&["--config", p, "--seed", "2", "cocycle"]));
    let direct = stdout(&wedgeforge(&["--seed", "2", "--samples", "30", "cocycle"]));
    assert_ne!(from_file, overridden);
    assert_eq!(overridden, direct);
}

#[test]
fn thread_cap_and_sequential_mode_agree() {
    let par = Command::new(env!("CARGO_BIN_EXE_wedgeforge"))
        .args(["--samples", "40", "u-ratio"])
        .env("WEDGEFORGE_THREADS", "2")
        .output()
        .unwrap();
    let seq = wedgeforge(&["--samples", "40", "--sequential", "u-ratio"]);
    assert_eq!(par.status.code(), Some(0));
    assert_eq!(par.stdout, seq.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_wedgeforge")).arg("cocycle").env("WEDGEFORGE_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
