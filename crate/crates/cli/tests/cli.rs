use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn problem(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "problems", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn kcone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kcone")).args(args).output().expect("binary runs")
}

fn report(args: &[&str]) -> (i32, Value) {
    let out = kcone(args);
    let code = out.status.code().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let v = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text} {}", String::from_utf8_lossy(&out.stderr)));
    (code, v)
}

fn write_problem(dir: &TempDir, name: &str, v: &Value) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn analyze_y_axis() {
    let (code, r) = report(&["analyze", &problem("y_axis.json")]);
    assert_eq!(code, 0);
    assert_eq!(r["schema"], json!("kcone.report/v1"));
    let a = &r["analysis"];
    assert_eq!(a["k"], json!(3));
    assert_eq!(a["decomposition"]["kernel_dim"], json!(1));
    assert_eq!(a["decomposition"]["kernel_basis"], json!([["0", "1"]]));
    assert_eq!(a["linearization"][3], json!([["-1", "0"]]));
    assert_eq!(a["approximation"]["q"], json!(5));
    assert_eq!(a["approximation"]["bbar0"], json!(["1"]));
    assert_eq!(r["input"]["variables"], json!(["x", "y"]));
}

#[test]
fn milnor_from_orders() {
    let (code, r) = report(&["milnor", "--ks", "3,11", "--ord", "4"]);
    assert_eq!(code, 0);
    assert_eq!(r["mu"], json!(11));
    let (_, r) = report(&["milnor", &problem("y_axis.json"), "--ks", "3,11"]);
    assert_eq!((r["ord"].clone(), r["mu"].clone()), (json!(4), json!(11)));
    let (code, r) = report(&["milnor", "--ks", "1", "--ord", "3"]);
    assert_eq!(code, 3);
    assert_eq!(r["error"]["kind"], json!("NonPositive"));
}

#[test]
fn gates_on_examples() {
    let (_, r) = report(&["gate", &problem("y_axis.json")]);
    assert_eq!(r["gate"]["selected"], json!("corollary-4(i=2)"));
    assert_eq!(r["gate"]["frame_shift"], json!(2));
    let (code, r) = report(&["gate", &problem("x_curve.json"), "--shift", "2"]);
    assert_eq!(code, 0);
    let v = r["gate"]["verdicts"].as_array().unwrap().iter().find(|v| v["route"] == json!("corollary-4(i=2)")).unwrap();
    assert_eq!(v["passed"], json!(false));
    let (_, r) = report(&["gate", &problem("x_curve_damped.json"), "--shift", "2"]);
    assert_eq!(r["gate"]["selected"], json!("corollary-4(i=2)"));
}

#[test]
fn solve_exact_branch_returns_input() {
    let (code, r) = report(&["solve", &problem("exact_branch.json")]);
    assert_eq!(code, 0);
    let s = &r["solution"];
    let refined = s["refined"].as_array().unwrap();
    assert_eq!(refined[1], json!(["1", "0"]));
    assert!(refined.iter().enumerate().all(|(j, c)| j == 1 || *c == json!(["0", "0"])));
    for sample in s["samples"].as_array().unwrap() {
        assert_eq!(sample["g_norm"], json!(0.0));
        assert_eq!(sample["c"], json!([0.0]));
    }
}

#[test]
fn solve_damped_example() {
    for mode in ["exact", "float"] {
        let (code, r) = report(&["solve", &problem("x_curve_damped.json"), "--mode", mode]);
        assert_eq!(code, 0, "{mode}");
        let s = &r["solution"];
        assert_eq!(s["route"], json!("corollary-4(i=2)"));
        assert_eq!(s["all_within_bound"], json!(true));
        let refined = s["refined"].as_array().unwrap();
        if mode == "exact" {
            assert_eq!(refined[3], json!(["1", "0"]));
            assert_eq!(refined[4], json!(["0", "1"]));
            assert_eq!(refined[9], json!(["0", "1/300"]));
            assert!((5..=8).chain(0..3).all(|j| refined[j] == json!(["0", "0"])));
        } else {
            assert!((refined[9][1].as_f64().unwrap() - 1.0 / 300.0).abs() < 1e-12);
        }
    }
}

#[test]
fn degree_report() {
    let (code, r) = report(&["degree", &problem("x_curve.json")]);
    assert_eq!(code, 0);
    let d = &r["degree"];
    assert_eq!(d["chi"], json!(11));
    assert_eq!(d["r0"], json!("-3"));
    assert_eq!(d["signs"], json!({ "positive": -1, "negative": 1 }));
    assert_eq!(d["classical"]["holds"], json!(false));
    assert_eq!(d["classical"]["required"], json!(23));
    let warnings = r["warnings"].as_array().unwrap();
    assert_eq!(warnings.len(), 1);
    assert!(warnings[0].as_str().unwrap().contains("order 20"));
}

#[test]
fn degree_warns_on_large_kernel() {
    let dir = TempDir::new().unwrap();
    let p = json!({
        "field": "real",
        "variables": ["x", "y", "z"],
        "equations": [[{ "coeff": "1", "exps": [1, 0, 0] }, { "coeff": "1", "exps": [0, 2, 0] }]],
        "curve": { "truncation": 6, "coefficients": [["0", "0", "0"], ["0", "0", "1"]] }
    });
    let f = write_problem(&dir, "p.json", &p);
    let (code, r) = report(&["degree", &f]);
    assert_eq!(code, 0);
    assert_eq!(r["degree"]["chi"], json!(0));
    assert_eq!(r["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn levelset_csv() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("l.csv");
    let out = dir.path().join("l.json");
    let o = kcone(&[
        "levelset",
        &problem("y_axis.json"),
        "--csv",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--grid-points",
        "4",
        "--lattice",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(&csv).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["eps", "phi_1", "nk1_1", "z_x", "z_y", "G_1", "residual"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2 * 4 * 3);
    for row in &rows {
        let eps: f64 = row[0].parse().unwrap();
        let residual: f64 = row[6].parse().unwrap();
        assert!(residual <= 10.0 * eps.abs().powi(4) * 1e-12);
    }
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(r["levelset"]["rows"], json!(24));
}

#[test]
fn reports_are_deterministic() {
    for cmd in ["analyze", "solve", "degree"] {
        let a = kcone(&[cmd, &problem("y_axis.json")]).stdout;
        let b = kcone(&[cmd, &problem("y_axis.json")]).stdout;
        assert_eq!(a, b, "{cmd}");
    }
}

#[test]
fn verify_roundtrip_and_tampering() {
    let dir = TempDir::new().unwrap();
    for args in [vec!["analyze", "y_axis.json"], vec!["solve", "x_curve_damped.json"], vec!["degree", "x_curve.json"]] {
        let path = dir.path().join(format!("{}.json", args[0]));
        let o = kcone(&[args[0], &problem(args[1]), "--out", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let (code, r) = report(&["verify", path.to_str().unwrap()]);
        assert_eq!(code, 0, "{r}");
        assert!(r["checks"].as_array().unwrap().len() >= 3);
    }
    let path = dir.path().join("analyze.json");
    let mut stored: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    stored["analysis"]["k"] = json!(2);
    std::fs::write(&path, stored.to_string()).unwrap();
    let (code, r) = report(&["verify", path.to_str().unwrap()]);
    assert_eq!(code, 3);
    let bad: Vec<&Value> = r["checks"].as_array().unwrap().iter().filter(|c| c["ok"] == json!(false)).collect();
    assert_eq!(bad, vec![&json!({ "field": "/analysis/k", "ok": false })]);
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let base = json!({
        "field": "real",
        "variables": ["x", "y"],
        "equations": [[{ "coeff": "1", "exps": [1, 1] }]],
        "curve": { "truncation": 4, "coefficients": [["0", "0"], ["1", "0"]] }
    });
    let mut cases = Vec::new();
    let mut v = base.clone();
    v["curve"]["coefficients"][0] = json!(["1", "0"]);
    cases.push(v);
    let mut v = base.clone();
    v["equations"][0][0]["coeff"] = json!("x");
    cases.push(v);
    let mut v = base.clone();
    v["equations"][0][0]["exps"] = json!([1]);
    cases.push(v);
    let mut v = base.clone();
    v["extra"] = json!(1);
    cases.push(v);
    let mut v = base.clone();
    v["equations"][0][0]["coeff"] = json!("1+2i");
    cases.push(v);
    for (i, case) in cases.iter().enumerate() {
        let f = write_problem(&dir, &format!("c{i}.json"), case);
        let o = kcone(&["analyze", &f]);
        assert_eq!(o.status.code(), Some(2), "case {i}");
        assert!(o.stdout.is_empty());
        assert!(!o.stderr.is_empty());
    }
    let f = write_problem(&dir, "ok.json", &base);
    assert_eq!(kcone(&["analyze", &f]).status.code(), Some(0));
    assert_eq!(kcone(&["analyze", "/nonexistent/problem.json"]).status.code(), Some(2));
    assert_eq!(kcone(&["solve", &f, "--route", "corollary-9"]).status.code(), Some(2));
}

#[test]
fn negative_analysis_exits_3_with_report() {
    let dir = TempDir::new().unwrap();
    let p = json!({
        "field": "real",
        "variables": ["x", "y"],
        "equations": [[{ "coeff": "1", "exps": [2, 0] }]],
        "curve": { "truncation": 6, "coefficients": [["0", "0"], ["0", "1"]] }
    });
    let f = write_problem(&dir, "p.json", &p);
    let (code, r) = report(&["analyze", &f]);
    assert_eq!(code, 3);
    assert_eq!(r["status"], json!("negative"));
    assert_eq!(r["error"]["kind"], json!("NotKSurjective"));
    assert_eq!(r["analysis"]["order"]["status"], json!("stabilized"));
}

#[test]
fn complex_field() {
    let dir = TempDir::new().unwrap();
    let p = json!({
        "field": "complex",
        "variables": ["x", "y"],
        "equations": [[
            { "coeff": "-1", "exps": [1, 3] },
            { "coeff": "1", "exps": [5, 0] },
            { "coeff": "2i", "exps": [0, 5] }
        ]],
        "curve": { "truncation": 12, "coefficients": [["0", "0"], ["0", "1"]] }
    });
    let f = write_problem(&dir, "c.json", &p);
    let (code, r) = report(&["solve", &f]);
    assert_eq!(code, 0);
    assert_eq!(r["solution"]["refined"][2], json!(["2i", "0"]));
    assert_eq!(kcone(&["degree", &f]).status.code(), Some(2));
}

#[test]
fn perturbation_contracts() {
    for clause in ["i", "ii"] {
        let (code, r) = report(&["perturb", &problem("y_axis.json"), "--clause", clause, "--count", "5", "--seed", "4"]);
        assert_eq!(code, 0, "{clause}");
        assert_eq!(r["perturbation"]["all_hold"], json!(true));
        assert_eq!(r["perturbation"]["experiments"].as_array().unwrap().len(), 5);
    }
    let (code, r) = report(&["perturb", &problem("y_axis.json"), "--clause", "iii", "--refine", "--count", "3"]);
    assert_eq!(code, 0);
    for e in r["perturbation"]["experiments"].as_array().unwrap() {
        assert_eq!(e["gate_after"], json!(true));
        assert_eq!(e["k_after"], e["k_before"]);
    }
}
