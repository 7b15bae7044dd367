use std::process::Command;

use latcf::cli::{parse_config, CliError, CF_HEADER, RD_CURVE_HEADER, WZ_HEADER};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_latcf"));
    c.env_remove("LATCF_SEED");
    c
}

fn args(v: &[&str]) -> Vec<String> {
    std::iter::once("latcf")
        .chain(v.iter().copied())
        .map(String::from)
        .collect()
}

#[test]
fn flag_beats_env_beats_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "# base\nseed = 5\nP1 = 3\nD = 0.7\n").unwrap();
    let p = path.to_str().unwrap();

    let cfg = parse_config(args(&["rates", "--config", p]), None).unwrap();
    assert_eq!(cfg.seed, 5);
    assert_eq!(cfg.params.p1, 3.0);

    let cfg = parse_config(args(&["rates", "--config", p]), Some("6".into())).unwrap();
    assert_eq!(cfg.seed, 6);

    let cfg = parse_config(
        args(&["rates", "--config", p, "--seed", "7", "--P1", "4"]),
        Some("6".into()),
    )
    .unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.params.p1, 4.0);
    assert_eq!(cfg.params.d, 0.7);
}

#[test]
fn unknown_file_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    std::fs::write(&path, "P1 = 1\nwidth = 3\n").unwrap();
    match parse_config(args(&["rates", "--config", path.to_str().unwrap()]), None) {
        Err(CliError::Config(v)) => assert_eq!(v[0].key, "width"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn type_mismatch_is_named() {
    match parse_config(args(&["wz-sim", "--trials", "many"]), None) {
        Err(CliError::Config(v)) => assert_eq!(v[0].key, "trials"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn kq_above_k2_fails_with_rate_gate() {
    let out = bin().args(["cf-sim", "--k2", "2", "--kq", "3"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("R_hat <= R'"), "{err}");
}

#[test]
fn negative_distortion_exits_nonzero() {
    let out = bin().args(["rates", "--D", "-1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("D:"));
}

#[test]
fn rd_curve_writes_ten_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rd.csv");
    let out = bin()
        .args(["rd-curve", "--trials", "200", "--out", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], RD_CURVE_HEADER);
    assert_eq!(lines.len(), 11);
    assert!(String::from_utf8_lossy(&out.stdout).contains("rd-curve"));
}

#[test]
fn env_seed_reaches_csv() {
    let out = bin()
        .env("LATCF_SEED", "9")
        .args(["wz-sim", "--trials", "100"])
        .output()
        .unwrap();
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(WZ_HEADER));
    assert_eq!(lines.next().unwrap().split(',').nth(8), Some("9"));
}

#[test]
fn same_seed_same_bytes() {
    let run = |workers: &str| {
        bin()
            .args(["cf-sim", "--trials", "6", "--B", "5", "--D", "1", "--workers", workers])
            .output()
            .unwrap()
            .stdout
    };
    let a = run("1");
    assert!(a.starts_with(CF_HEADER.as_bytes()));
    assert_eq!(a, run("3"));
}

#[test]
fn unwritable_output_fails() {
    let out = bin()
        .args(["rates", "--out", "/nonexistent-dir/x.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
