use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../hillbands/fixtures")
        .join(format!("{name}.json"))
}

fn hillbands(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hillbands"))
        .args(args)
        .env("HILLBANDS_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn reals(doc: &Value, key: &str) -> Vec<f64> {
    doc[key].as_array().unwrap().iter().map(|e| e["re"].as_f64().unwrap()).collect()
}

#[test]
fn malformed_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"family\": \"lambda_independent\", \"q\": ").unwrap();
    let out = hillbands(&["eigs", "--problem", "dirichlet", "--region", "1:200", "--potential", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not valid JSON"));

    fs::write(&bad, "{\"family\": \"bessel\"}").unwrap();
    let out = hillbands(&["eigs", "--problem", "dirichlet", "--region", "1:200", "--potential", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown family"));
}

#[test]
fn bad_arguments_exit_1() {
    let zero = fixture("zero");
    let out = hillbands(&["eigs", "--problem", "dirichlet", "--region", "5:1", "--potential", zero.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let out = hillbands(&["eigs", "--problem", "quasi", "--region", "1:5", "--potential", zero.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn spectral_point_exits_2() {
    let zero = fixture("zero");
    let pi2 = format!("{},0", PI * PI);
    let out = hillbands(&[
        "resolvent-check", "--boundary", "dirichlet", "--lambda", &pi2, "--potential", zero.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn dirichlet_on_zero_potential() {
    let zero = fixture("zero");
    let doc = json(&hillbands(&["eigs", "--problem", "dirichlet", "--region", "1:200", "--potential", zero.to_str().unwrap()]));
    assert_eq!(doc["schema_version"], 1);
    let got = reals(&doc, "eigenvalues");
    assert_eq!(got.len(), 4);
    for (n, lam) in got.iter().enumerate() {
        let want = (PI * (n + 1) as f64).powi(2);
        assert!((lam - want).abs() < 1e-9 * want, "{lam} vs {want}");
    }
}

#[test]
fn quasi_periodic_on_zero_potential() {
    let zero = fixture("zero");
    let doc = json(&hillbands(&["eigs", "--problem", "quasi", "--k", "1.0", "--region", "0:150", "--potential", zero.to_str().unwrap()]));
    let got = reals(&doc, "eigenvalues");
    // z = ±k + 2πm
    let mut want: Vec<f64> = (-2..=2).map(|m| (1.0 + 2.0 * PI * m as f64).powi(2)).filter(|l| *l < 150.0).collect();
    want.sort_by(f64::total_cmp);
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-9 * w, "{g} vs {w}");
    }
}

#[test]
fn halfplane_certificate_for_exp01() {
    let exp01 = fixture("exp01");
    let doc = json(&hillbands(&["certify", "--halfplane", "0", "--potential", exp01.to_str().unwrap()]));
    let cert = &doc["certificate"];
    assert_eq!(cert["certified"], true);
    assert_eq!(cert["proven"], true);
    assert!((cert["threshold"].as_f64().unwrap() - 0.37321).abs() < 1e-5);
}

#[test]
fn emitted_json_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    let second = dir.path().join("second.json");
    let cos01 = fixture("cos01");
    let run = |input: &Path, output: &Path| {
        let out = hillbands(&[
            "eigs", "--problem", "neumann", "--region", "-5:300", "--potential", input.to_str().unwrap(),
            "--output", output.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    };
    run(&cos01, &first);
    run(&first, &second);
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn mathieu_bands_csv() {
    let mathieu = fixture("mathieu");
    let out = hillbands(&["bands", "--region", "-5:100", "--k-points", "3", "--format", "csv", "--potential", mathieu.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# hillbands bands schema_version=1"));
    assert_eq!(lines.next(), Some("k,band_index,lambda"));
    let rows: Vec<(f64, i64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    // band 1 runs from the ground state at k = 0 to λ₁⁻ at k = π
    let band1: Vec<f64> = rows.iter().filter(|r| r.1 == 1).map(|r| r.2).collect();
    assert_eq!(band1.len(), 3);
    assert!((band1[0] + 1.2329185594215204).abs() < 1e-8);
    assert!((band1[2] - 4.572518215945236).abs() < 1e-8);
}

#[test]
fn uncertified_window_falls_back_to_raw_zeros() {
    let rational = fixture("rational");
    let out = hillbands(&["bands", "--region", "-0.4:50", "--potential", rational.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bands refused"));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["warning"].as_str().unwrap().contains("raw zeros"));
    assert!(doc.get("gaps").is_none());
    let re = reals(&doc, "eigenvalues");
    assert_eq!(re.len(), 5);
    assert!(re.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn boussinesq_ramification_table() {
    let pq = fixture("pq");
    let doc = json(&hillbands(&["boussinesq", "ramifications", "--n-min", "2", "--n-max", "3", "--coeffs", pq.to_str().unwrap()]));
    let zeros = doc["zeros"].as_array().unwrap();
    for n in [2, 3] {
        let m: u64 = zeros
            .iter()
            .filter(|z| z["window"] == n)
            .map(|z| z["multiplicity"].as_u64().unwrap())
            .sum();
        assert_eq!(m, 2, "window {n}");
    }
}

#[test]
fn verify_subset_passes() {
    let out = hillbands(&["verify", "--only", "1,2"]);
    let doc = json(&out);
    let results = doc["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    assert!(results.iter().all(|r| r["passed"] == true));
}
