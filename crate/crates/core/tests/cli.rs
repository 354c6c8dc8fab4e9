use std::process::{Command, Output};

use serde_json::Value;

fn confgrowth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confgrowth"))
        .args(args)
        .output()
        .unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr));
    })
}

#[test]
fn analyze_z_kernel() {
    let out = confgrowth(&["analyze", "--backend", "abelian:1;0", "--radius", "12", "--s", "0.5,1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["sphere_counts"][3], 2);
    assert!(r["omega_quotient"]["rate"].as_f64().unwrap() < 0.2);
    assert_eq!(r["poincare"].as_array().unwrap().len(), 2);
    let ratios: Vec<f64> = r["negligible_ratios"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!(ratios[2..].windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn analyze_trivial_subgroup_is_not_negligible() {
    let r = report(&confgrowth(&[
        "analyze",
        "--backend",
        "trivial",
        "--radius",
        "10",
        "--max-len",
        "8",
    ]));
    let rate = r["omega_quotient"]["rate"].as_f64().unwrap();
    assert!((rate - 3f64.ln()).abs() < 0.02);
    let ratios: Vec<f64> = r["negligible_ratios"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!(ratios.iter().all(|&x| x >= 1.0));
}

#[test]
fn analyze_finite_quotient() {
    let r = report(&confgrowth(&["analyze", "--backend", "cyclic:3:1,0", "--log2"]));
    assert_eq!(r["omega_quotient"]["rate"], 0.0);
    assert_eq!(r["omega_quotient"]["method"], "exact-formula");
    let bits = r["rates_log2"]["omega_g"].as_f64().unwrap();
    assert!((bits - 3f64.log2()).abs() < 1e-9);
}

#[test]
fn certify_exit_codes() {
    let ok = confgrowth(&["certify", "--backend", "abelian:1;0", "--p", "b", "--radius", "10"]);
    assert_eq!(ok.status.code(), Some(0));
    let r = report(&ok);
    assert!((r["certificate"]["bound"].as_f64().unwrap() - 1.0397).abs() < 1e-4);
    assert_eq!(r["certified"], true);

    let bad = confgrowth(&["certify", "--backend", "abelian:1;0", "--p", "a", "--radius", "10"]);
    assert_eq!(bad.status.code(), Some(2));
    let r = report(&bad);
    assert_eq!(r["confinement"]["holds"], false);
    assert_eq!(r["confinement"]["failing_vertex"], "(0)");

    let missing = confgrowth(&["certify", "--backend", "abelian:1;0"]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn insert_reports() {
    let r = report(&confgrowth(&[
        "insert",
        "--backend",
        "abelian:1;0",
        "--g",
        "aaa",
        "--p",
        "b",
        "--f-candidates",
        "ab",
    ]));
    assert_eq!(r["verification"]["images"], 8);
    assert_eq!(r["verification"]["coset"], true);
    assert_eq!(r["scheme"]["blocks"][0]["block"], "abA");
    assert_eq!(r["exponential_count"][0]["max_length"], 12);

    let empty = confgrowth(&["insert", "--backend", "abelian:1;0", "--g", "", "--p", "b"]);
    assert_eq!(empty.status.code(), Some(0));
    assert_eq!(report(&empty)["verification"]["images"], 1);

    let big = confgrowth(&[
        "insert",
        "--backend",
        "abelian:1;0",
        "--g",
        "aaaaaaaaaa",
        "--p",
        "b",
        "--max-bits",
        "8",
    ]);
    assert_eq!(big.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&big.stderr).contains("sampled"));

    let sampled = confgrowth(&[
        "insert",
        "--backend",
        "abelian:1;0",
        "--g",
        "aaaaaaaaaa",
        "--p",
        "b",
        "--max-bits",
        "8",
        "--sampled",
        "--pairs",
        "500",
        "--seed",
        "11",
    ]);
    assert_eq!(sampled.status.code(), Some(0));
    let r = report(&sampled);
    assert_eq!(r["verification"]["injectivity"]["mode"], "sampled");
    assert_eq!(r["verification"]["injectivity"]["seed"], 11);

    let tree = confgrowth(&["insert", "--backend", "trivial", "--g", "ab", "--p", "b"]);
    assert_eq!(tree.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&tree.stderr).contains("position 1"));
}

#[test]
fn verify_verdicts() {
    let z = confgrowth(&["verify", "--backend", "abelian:1;0", "--p", "b", "--radius", "10"]);
    assert_eq!(z.status.code(), Some(0));
    assert_eq!(report(&z)["all_hold"], true);

    let finite = report(&confgrowth(&[
        "verify",
        "--backend",
        "cyclic:2:1,1",
        "--p",
        "aa",
        "--radius",
        "8",
    ]));
    let balance = &finite["inequalities"]["verdicts"][0];
    assert!(balance["slack"].as_f64().unwrap().abs() <= 0.05);

    let tree = confgrowth(&[
        "verify",
        "--backend",
        "trivial",
        "--p",
        "b",
        "--radius",
        "8",
        "--max-len",
        "8",
    ]);
    assert_eq!(tree.status.code(), Some(2));
    let r = report(&tree);
    assert_eq!(
        r["inequalities"]["verdicts"][1]["note"],
        "hypothesis not met: not confined"
    );
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"backend": "abelian:1;0", "radius": 4, "p": ["b"]}"#).unwrap();
    let out_path = dir.path().join("report.json");
    let out = confgrowth(&[
        "certify",
        "--config",
        cfg.to_str().unwrap(),
        "--radius",
        "6",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(r["radius"], 6);
    assert_eq!(r["backend"], "abelian:1;0");

    std::fs::write(&cfg, "{\"backend\": \"trivial\",\n \"radius\": \"x\"}").unwrap();
    let bad = confgrowth(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2"));
}

#[test]
fn reports_are_byte_identical() {
    let args = [
        "verify",
        "--backend",
        "free-product:2,3",
        "--p",
        "aa,bbb",
        "--radius",
        "8",
        "--max-len",
        "10",
    ];
    let a = confgrowth(&args);
    let b = confgrowth(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let keys: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \""))
        .map(|l| l.trim().split('"').nth(1).unwrap())
        .collect();
    assert_eq!(&keys[..4], ["command", "backend", "backend_kind", "rank"]);
}

#[test]
fn bad_inputs_exit_3() {
    assert_eq!(confgrowth(&["analyze", "--backend", "nope"]).status.code(), Some(3));
    assert_eq!(
        confgrowth(&["analyze", "--backend", "abelian:1;0", "--rank", "3"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        confgrowth(&["certify", "--backend", "trivial", "--p", "z"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        confgrowth(&["analyze", "--backend", "file:/nonexistent.json"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn budget_exit_4() {
    let out = confgrowth(&["analyze", "--backend", "trivial", "--radius", "12", "--budget", "1000"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sphere"));
}
