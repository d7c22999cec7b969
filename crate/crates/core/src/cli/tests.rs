use super::*;
use crate::scalar::rat;

fn ex(name: &str) -> String {
    format!("{}/examples/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("eqlab").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn rationals() {
    assert_eq!(parse_rational("1/2").unwrap(), rat(1, 2));
    assert_eq!(parse_rational("-3").unwrap(), rat(-3, 1));
    assert_eq!(parse_rational("0.125").unwrap(), rat(1, 8));
    assert_eq!(parse_rational("-.5").unwrap(), rat(-1, 2));
    for bad in ["1/0", "x", "1..2", ".", ""] {
        assert!(parse_rational(bad).is_err(), "{bad}");
    }
}

#[test]
fn parse_reports_modes() {
    let (code, out, _) = call(&["parse", &ex("harmonic.eqm")]);
    assert_eq!((code, out.as_str()), (0, "ok: 1 mode, hermitian\n"));
    let (code, out, _) = call(&["parse", &ex("rotsym_n1.eqm")]);
    assert_eq!((code, out.as_str()), (0, "ok: 2 modes, hermitian\n"));
}

#[test]
fn parse_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.eqm");
    std::fs::write(&bad, "set pq modes 1\nH = Q[3]\n").unwrap();
    let (code, out, err) = call(&["parse", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains("bad.eqm:2:"), "{err}");
    std::fs::write(&bad, "set pq modes 1\nH = i*Q[0]\n").unwrap();
    assert_eq!(call(&["parse", bad.to_str().unwrap()]).0, 1);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(call(&["frobnicate"]).0, 2);
    assert_eq!(call(&["rotsym", "--zeta", "one half"]).0, 2);
    assert_eq!(call(&["wcp", "--model", &ex("harmonic.eqm"), "--set", "nope=1"]).0, 2);
    assert_eq!(call(&["parse", "/no/such/file.eqm"]).0, 2);
    assert_eq!(call(&["--help"]).0, 0);
}

#[test]
fn rotsym_reference() {
    let (code, out, _) = call(&["rotsym", "--N", "1", "--m", "1", "--zeta", "1/2", "--v", "1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["exact_match"], true);
    assert_eq!(v["m0sq"], "5/4");
    assert_eq!(v["lambda0"], "1/16");
    assert!(v["max_abs_dev"].as_f64().unwrap() <= 1e-4);
    assert_eq!(call(&["rotsym", "--zeta", "1"]).0, 1);
}

#[test]
fn metric_with_omega() {
    let (code, out, err) = call(&["metric", "--model", &ex("harmonic.eqm"), "--omega", "2"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let g = &v["matrix"];
    let want = [[0.5, 0.0], [0.0, 2.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((g[i][j].as_f64().unwrap() - want[i][j]).abs() < 1e-6);
        }
    }
}

#[test]
fn normal_order_in_vacuum() {
    let (code, out, err) = call(&["normal-order", "--model", &ex("harmonic.eqm"), "P[0]^2 + Q[0]^2"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["frame"], "vacuum");
    let (_, prod, _) = call(&["normal-order", "--model", &ex("harmonic.eqm"), "--product", "P[0]^2 + Q[0]^2"]);
    assert_ne!(out, prod);
    assert_eq!(call(&["normal-order", "--model", &ex("harmonic.eqm"), "X[0]"]).0, 2);
}

#[test]
fn outputs_are_deterministic_and_atomic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let args = ["wcp", "--model", &ex("quartic.eqm"), "--format", "csv", "--output", path.to_str().unwrap()];
        assert_eq!(call(&args).0, 0);
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    assert!(String::from_utf8(text).unwrap().starts_with("p0,q0,H_num,H_sym,abs_dev\n"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn evolve_summary_and_table() {
    let args = ["evolve", "--model", &ex("harmonic.eqm"), "--q", "1", "--dt", "0.01", "--horizon", "1"];
    let (code, out, err) = call(&args);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["max_dq"].as_f64().unwrap() < 1e-6);
    let mut csv_args = args.to_vec();
    csv_args.extend(["--format", "csv"]);
    let (_, table, _) = call(&csv_args);
    assert_eq!(table.lines().count(), 102);
}

#[test]
fn every_example_model_parses() {
    let dir = format!("{}/examples", env!("CARGO_MANIFEST_DIR"));
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "eqm") {
            assert_eq!(call(&["parse", path.to_str().unwrap()]).0, 0, "{}", path.display());
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
