use serde_json::Value;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_gw-minimax");

// f(x) - x has a near-double root at x ~ 0.5094 that stays above the root tolerance
const NEAR_TANGENT: &str = "finite:1=0.14,2=0.24726247,8=0.61273753";

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&stdout(args)).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn points(v: &Value) -> &Vec<Value> {
    v["fixed_points"]["points"].as_array().unwrap()
}

#[test]
fn analyze_binary_tree() {
    let v = json(&["analyze", "--dist", "regular:2", "--format", "json"]);
    let pts = points(&v);
    assert_eq!(pts.len(), 3);
    let q = pts[1]["q"].as_f64().unwrap();
    let xi = pts[1]["xi"].as_f64().unwrap();
    assert!((q - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-10);
    assert!((xi - 4.0 * q * q).abs() < 1e-9);
    assert_eq!(v["endpoint_criterion"], "no_endpoint_atoms");
    let atoms = v["limit_law"]["atoms"].as_array().unwrap();
    assert_eq!(atoms.len(), 1);
    assert!((atoms[0]["mass"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn analyze_text_lists_single_atom() {
    let s = stdout(&["analyze", "--dist", "finite:1=0.45,3=0.55"]);
    assert!(s.contains("limit law"));
    assert_eq!(s.matches("atom at").count(), 1);
    assert!(s.contains("with mass 1.000000000000000"));
}

#[test]
fn analyze_geometric_identity() {
    let v = json(&["analyze", "--dist", "geometric:0.5", "--format", "json"]);
    assert_eq!(v["fixed_points"]["variant"], "identity");
    assert_eq!(v["limit_law"]["variant"], "identity_uniform");
    assert_eq!(v["endpoint_criterion"], "boundary_case");
}

#[test]
fn dist_from_json_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("law.json");
    std::fs::write(&path, r#"{"kind":"finite","masses":{"2":1.0}}"#).unwrap();
    let a = json(&[
        "analyze",
        "--dist",
        path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    let b = json(&["analyze", "--dist", "regular:2", "--format", "json"]);
    assert_eq!(points(&a)[1]["q"], points(&b)[1]["q"]);
}

#[test]
fn curve_csv_shape() {
    let s = stdout(&["curve", "--dist", "regular:2", "--grid", "4"]);
    assert!(!s.contains('\r'));
    let data: Vec<&str> = s.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "x,f_minus_x");
    assert_eq!(data.len(), 6);
    assert_eq!(data[3], "0.5,-0.0625");
    assert!(s.lines().any(|l| l == "# dist: regular:2"));
}

#[test]
fn scan_finds_flip_and_pair_collision() {
    let v = json(&[
        "scan",
        "--family",
        "finite:1={p},3={1-p}",
        "--from",
        "0.45",
        "--to",
        "0.65",
        "--step",
        "0.01",
        "--format",
        "json",
    ]);
    let est: Vec<f64> = v["report"]["transitions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["estimate"].as_f64().unwrap())
        .collect();
    assert!(est.iter().any(|e| (e - 0.5).abs() < 1e-6), "{est:?}");
    assert!(est.iter().any(|e| (e - 0.598076).abs() < 1e-5), "{est:?}");
}

#[test]
fn scan_csv_rows() {
    let s = stdout(&[
        "scan",
        "--family",
        "finite:1={p},3={1-p}",
        "--from",
        "0.3",
        "--to",
        "0.6",
        "--step",
        "0.1",
    ]);
    let data: Vec<&str> = s.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 5);
    assert!(data[1].starts_with("0.3,0.72,no_endpoint_atoms,3,1,false,"));
    assert!(s.contains("# transition:"));
}

#[test]
fn simulate_matches_recursion() {
    let v = json(&[
        "simulate",
        "--dist",
        "regular:2",
        "--depth",
        "6",
        "--samples",
        "2000",
        "--seed",
        "7",
    ]);
    assert_eq!(v["accepted"], 2000);
    assert_eq!(v["ks"]["passed"], true);
    assert_eq!(v["meta"]["seed"], 7);
    assert_eq!(v["meta"]["dist"], "regular:2");
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let args = [
            "simulate",
            "--dist",
            "finite:1=0.45,3=0.55",
            "--depth",
            "5",
            "--samples",
            "500",
            "--seed",
            "3",
            "--format",
            "csv",
            "--out",
        ];
        let mut args: Vec<&str> = args.to_vec();
        args.push(p.to_str().unwrap());
        stdout(&args);
    }
    let (ra, rb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    // the args comment differs only by the output path
    let strip = |v: &[u8]| {
        String::from_utf8(v.to_vec())
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("# args:"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&ra), strip(&rb));
}

#[test]
fn endogeny_binary_tree() {
    let v = json(&["endogeny", "--dist", "regular:2", "--format", "json"]);
    let r = &v["points"][0]["report"];
    assert_eq!(r["verdict"], "non_endogenous");
    assert!((r["b_star"].as_f64().unwrap() - 0.236068).abs() < 1e-6);
}

#[test]
fn scaling_case_a_csv() {
    let s = stdout(&[
        "scaling",
        "--dist",
        "regular:2",
        "--grid",
        "50",
        "--format",
        "csv",
    ]);
    let data: Vec<&str> = s.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "x,F_V");
    let vals: Vec<f64> = data[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(vals.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn exit_config_errors() {
    assert_eq!(code(&["analyze", "--dist", "bogus"]), 2);
    assert_eq!(code(&["analyze", "--dist", "finite:1=0.5,2=0.6"]), 2);
    assert_eq!(
        code(&[
            "simulate",
            "--dist",
            "regular:2",
            "--depth",
            "2",
            "--boundary",
            "coin"
        ]),
        2
    );
}

#[test]
fn exit_unresolved_touchpoint() {
    let out = run(&["analyze", "--dist", NEAR_TANGENT]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("touchpoint"));
}

#[test]
fn exit_numerical_failure() {
    assert_eq!(
        code(&[
            "scaling",
            "--dist",
            "powerlaw:1.5",
            "--depth",
            "6",
            "--samples",
            "150"
        ]),
        4
    );
}

#[test]
fn exit_budget_exceeded() {
    assert_eq!(
        code(&[
            "simulate",
            "--dist",
            "regular:3",
            "--depth",
            "10",
            "--samples",
            "20",
            "--budget",
            "100",
        ]),
        5
    );
}
