use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const OUT_DIR_ENV: &str = "BLANKGORDON_OUT_DIR";

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blankgordon"))
        .env(OUT_DIR_ENV, out)
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Path, args: &[&str]) -> i32 {
    let o = run(out, args);
    o.status.code().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    assert_eq!(code(out, &["reconstruct", "--row", "1"]), 0);
    assert_eq!(code(out, &["verify", "--row", "2", "--strict"]), 0);
    assert_eq!(
        code(out, &["verify", "--row", "1", "--A", "2.02", "--strict"]),
        1
    );
    // without --strict a failed check is reported, not signalled
    assert_eq!(code(out, &["verify", "--row", "1", "--A", "2.02"]), 0);
    assert_eq!(code(out, &["reconstruct", "--row", "1", "--A", "0"]), 2);
    assert_eq!(code(out, &["reconstruct", "--row", "9"]), 2);
    assert_eq!(code(out, &["reconstruct"]), 2);
    assert_eq!(code(out, &["reconstruct", "--bogus"]), 2);
    assert_eq!(
        code(out, &["simulate", "--row", "1", "--courant", "1.5"]),
        2
    );
    assert_eq!(
        code(
            out,
            &["sweep", "--row", "2", "--A-values", "1", "--B-values", ""]
        ),
        2
    );
    assert_eq!(
        code(
            out,
            &[
                "simulate",
                "--row",
                "2",
                "--perturb",
                "mode:1",
                "--amplitude",
                "0.5",
                "--tfinal",
                "1"
            ]
        ),
        3
    );
    let flat = out.join("flat.csv");
    fs::write(&flat, "x,V\n-5,1\n0,1\n5,1\n").unwrap();
    assert_eq!(
        code(out, &["reconstruct", "--csv", flat.to_str().unwrap()]),
        3
    );
    assert_eq!(code(out, &["--help"]), 0);
}

#[test]
fn manifest_lists_existing_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["verify", "--row", "3"]);
    assert!(o.status.success());
    let dir = tmp.path().join("verify/row3");
    let m = manifest(&dir);
    assert_eq!(m["command"], "verify");
    assert_eq!(m["pass"], true);
    let outputs = m["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for p in outputs {
        assert!(Path::new(p.as_str().unwrap()).exists(), "{p}");
    }
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
}

#[test]
fn tabulated_input_is_hashed() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("well.csv");
    let mut text = String::from("x,V\n");
    for i in 0..=400 {
        let x = -10.0 + 0.05 * i as f64;
        text.push_str(&format!("{x},{}\n", -2.0 / x.cosh().powi(2)));
    }
    fs::write(&csv, &text).unwrap();
    let o = run(tmp.path(), &["reconstruct", "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run_dir = fs::read_dir(tmp.path().join("reconstruct"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let m = manifest(&run_dir);
    let hashes = m["input_hashes"].as_object().unwrap();
    assert_eq!(hashes.len(), 1);
    let digest = hashes.values().next().unwrap().as_str().unwrap();
    assert_eq!(digest, blankgordon::manifest::sha256_hex(text.as_bytes()));
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.display().to_string(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 3] = [
        (
            &[
                "reconstruct",
                "--row",
                "2",
                "--mode",
                "1",
                "--A",
                "0.5",
                "--B",
                "0",
            ],
            "reconstruct",
        ),
        (&["simulate", "--row", "1", "--tfinal", "2"], "simulate"),
        (&["table1", "--rows", "1,5"], "table1"),
    ];
    for (args, sub) in cases {
        assert_eq!(code(tmp.path(), args), 0, "{args:?}");
        let first = snapshot_tree(&tmp.path().join(sub));
        assert_eq!(code(tmp.path(), args), 0, "{args:?}");
        assert_eq!(first, snapshot_tree(&tmp.path().join(sub)), "{args:?}");
    }
}

fn snapshot_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut all = snapshot(dir);
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            all.extend(snapshot_tree(&p));
        }
    }
    all
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"row": 1, "points": 2001}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let dir = tmp.path().join("reconstruct/row1");

    assert_eq!(code(tmp.path(), &["reconstruct", "--config", cfg]), 0);
    assert_eq!(manifest(&dir)["config"]["points"], 2001);
    assert_eq!(
        code(
            tmp.path(),
            &["reconstruct", "--config", cfg, "--points", "3001"]
        ),
        0
    );
    assert_eq!(manifest(&dir)["config"]["points"], 3001);
    assert_eq!(code(tmp.path(), &["reconstruct", "--row", "1"]), 0);
    assert_eq!(manifest(&dir)["config"]["points"], 4001);

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"row": 1, "pionts": 2001}"#).unwrap();
    assert_eq!(
        code(
            tmp.path(),
            &["reconstruct", "--config", bad.to_str().unwrap()]
        ),
        2
    );
}

#[test]
fn table1_reports_every_row() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["table1"]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.matches("PASS").count(), 6, "{stdout}");

    let o = run(tmp.path(), &["table1", "--grid-points", "101"]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(
        stdout.contains("FAIL") && stdout.contains("grid too coarse"),
        "{stdout}"
    );
}

#[test]
fn simulate_writes_probe_and_energy_series() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        tmp.path(),
        &[
            "simulate",
            "--row",
            "2",
            "--perturb",
            "gauss:0,1",
            "--tfinal",
            "1",
            "--svg",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = fs::read_dir(tmp.path().join("simulate"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    for f in [
        "probes.csv",
        "energy.csv",
        "final_field.csv",
        "final_field.svg",
    ] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let probes = fs::read_to_string(dir.join("probes.csv")).unwrap();
    assert!(probes.starts_with("t,probe_1"));
}
