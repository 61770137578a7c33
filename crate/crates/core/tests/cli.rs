use std::path::Path;
use std::process::{Command, Output};

fn fsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsm")).args(args).output().expect("spawn fsm")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn ball_of_radius_two_in_the_plane() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "z2.toml", "group = \"Z^N:2\"\n");
    let out = fsm(&["ball", "--config", &cfg, "--nmax", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 13);
}

#[test]
fn identities_hold_on_free_group() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "f2.toml", "group = \"F:2\"\n[identities]\nradius = 3\n");
    let out = fsm(&["identities", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let body = stdout(&out);
    assert!(body.starts_with("check,argument,holds,residual,dim"));
    assert!(body.lines().skip(1).all(|l| l.contains(",true,")), "{body}");
}

#[test]
fn injected_fault_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fault.toml", "group = \"Z^N:1\"\n[identities]\nradius = 2\ninject_fault = true\n");
    let out = fsm(&["identities", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("injected_fault"));
}

#[test]
fn certify_shift_plus_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cert.toml",
        "group = \"Z^N:1\"\n[operator]\npreset = \"2I+L1\"\n[certify]\nwindow = 30\nperiod = 1\n",
    );
    let out = fsm(&["certify", "--config", &cfg, "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let body = stdout(&out);
    assert!(body.lines().last().unwrap().ends_with(",stable"), "{body}");
}

#[test]
fn usage_and_config_errors_exit_two() {
    assert_eq!(fsm(&["ball", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(fsm(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "group = \"Z^N:1\"\ncolour = \"blue\"\n");
    let out = fsm(&["scan", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
    let missing = dir.path().join("absent.toml");
    assert_eq!(fsm(&["scan", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    let big = write_config(dir.path(), "big.toml", "group = \"H3\"\n[certify]\nwindow = 12\n");
    assert_eq!(fsm(&["certify", "--config", &big]).status.code(), Some(2));
}

#[test]
fn reports_are_written_to_out_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scan.toml", "group = \"F:2\"\nsections = \"balls:4\"\n");
    let out_dir = dir.path().join("reports");
    let dump = dir.path().join("m.txt");
    let out = fsm(&["scan", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(out_dir.join("scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);

    let out = fsm(&["section", "--config", &cfg, "--nmax", "1", "--dump-matrix", dump.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let matrix = std::fs::read_to_string(&dump).unwrap();
    let header: Vec<usize> = matrix.lines().next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert_eq!(header[0], 5);
    assert_eq!(matrix.lines().count(), header[1] + 1);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "det.toml",
        "group = \"H3\"\nseed = 11\nsections = \"balls:3\"\n[identities]\nradius = 2\ninstances = 4\n[certify]\nwindow = 3\n",
    );
    for cmd in ["identities", "scan", "certify", "inflate"] {
        let a = fsm(&[cmd, "--config", &cfg, "--format", "json"]);
        let b = fsm(&[cmd, "--config", &cfg, "--format", "json"]);
        assert_eq!(a.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{cmd}");
    }
}
