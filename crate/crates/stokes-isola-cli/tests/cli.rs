use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stokes-isola"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stokes-isola-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn field(json: &str, key: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    v[key].as_f64().unwrap_or_else(|| panic!("missing {key} in {json}"))
}

#[test]
fn deep_water_resonance() {
    let dir = scratch("res");
    let out = run(&["resonance", "--h", "50", "--format", "json", "--out", dir.to_str().unwrap()]);
    let beta = field(&String::from_utf8(out.stdout).unwrap(), "beta_star");
    assert!((beta - 2.7275).abs() < 5e-4, "{beta}");
    assert!(dir.join("resonance.json").exists());
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    for d in [&a, &b] {
        run(&["coeffs", "--h", "1.5", "--out", d.to_str().unwrap()]);
        run(&["isola", "--h", "1.5", "--samples", "21", "--out", d.to_str().unwrap()]);
    }
    for f in ["coeffs.json", "coeffs.csv", "isola.csv", "isola.json", "isola.svg"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let (a, b) = (scratch("thr-a"), scratch("thr-b"));
    for (d, n) in [(&a, "1"), (&b, "2")] {
        let out = bin()
            .env("STOKES_ISOLA_THREADS", n)
            .args(["scan", "--quantity", "beta_star", "--h-min", "0.5", "--h-max", "5", "--points", "7", "--out", d.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(a.join("scan.csv")).unwrap(), std::fs::read(b.join("scan.csv")).unwrap());
}

#[test]
fn config_file_round_trips() {
    let dir = scratch("cfg");
    let out = run(&["coeffs", "--h", "2.25", "--eps", "0.02", "--k", "24", "--format", "json", "--dump-config", "--out", dir.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    let path = dir.join("run.cfg");
    std::fs::write(&path, &text).unwrap();
    let again = run(&["coeffs", "--config", path.to_str().unwrap(), "--dump-config"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
    assert!(text.contains("h=2.25\n") && text.contains("k=24\n") && text.contains("format=json\n"));
}

#[test]
fn coefficients_json_carries_closed_forms() {
    let dir = scratch("coeffs");
    let out = run(&["coeffs", "--h", "1", "--format", "json", "--out", dir.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(field(&text, "a01") < 0.0 && field(&text, "c01") > 0.0);
    assert!((field(&text, "b30") + 1.5857).abs() < 1e-3);
    let k0 = field(&text, "kappa0");
    let expected = (field(&text, "c20") - field(&text, "a20")) / (field(&text, "a01") - field(&text, "c01"));
    assert!((k0 - expected).abs() < 1e-14);
}

#[test]
fn dno_dump_header_and_rows() {
    let dir = scratch("dno");
    let out = run(&["dno-dump", "--kmin", "-3", "--kmax", "3", "--out", dir.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,A0,Bm1,Bp1,Cm2,C0,Cp2,Dm3,Dm1,Dp1,Dp3");
    assert_eq!(lines.len(), 8);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 11));
    let nested = run(&["dno", "dump", "--kmin", "-3", "--kmax", "3", "--out", dir.to_str().unwrap()]);
    assert_eq!(nested.stdout, out.stdout);
}

#[test]
fn scan_reports_the_critical_depth() {
    let dir = scratch("scan");
    let out = run(&["scan", "--quantity", "b30", "--h-min", "0.15", "--h-max", "0.4", "--points", "6", "--refine", "20", "--format", "json", "--out", dir.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let changes = v["sign_changes"].as_array().unwrap();
    assert_eq!(changes.len(), 1);
    let mid = 0.5 * (changes[0][0].as_f64().unwrap() + changes[0][1].as_f64().unwrap());
    assert!((0.2505..=0.2508).contains(&mid), "{mid}");
    let csv = std::fs::read_to_string(dir.join("scan.csv")).unwrap();
    assert!(csv.starts_with("h,value,failure\n"));
}

#[test]
fn validate_summary() {
    let dir = scratch("val");
    let out = run(&["validate", "--h", "1", "--K", "20", "--thetas", "9", "--format", "json", "--out", dir.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    let ratio = field(&text, "eps_ratio");
    assert!((ratio / 16.0 - 1.0).abs() < 0.3, "{ratio}");
    let csv = std::fs::read_to_string(dir.join("validate.csv")).unwrap();
    assert!(csv.starts_with("theta,pred_re,pred_im,num_re,num_im,dist\n"));
}

#[test]
fn seed_checks_pass() {
    for cmd in ["resonance", "coeffs", "dno-dump", "isola", "validate"] {
        let out = run(&[cmd, "--seed-check"]);
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.trim_end().ends_with("0 failed"), "{cmd}: {text}");
    }
}

#[test]
fn invalid_input_is_rejected() {
    for args in [&["coeffs", "--h", "-1"][..], &["validate", "--k", "8"], &["isola", "--eps", "0.5"], &["scan", "--quantity", "nope"], &["hcrit", "--lo", "1", "--hi", "2"]] {
        let out = bin().args(args).output().unwrap();
        assert!(!out.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error"), "{args:?}");
    }
}
