use std::io::Write;
use std::process::{Command, Output, Stdio};

fn dcpoly(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_dcpoly"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    if let Some(s) = stdin {
        child.stdin.take().unwrap().write_all(s.as_bytes()).unwrap();
    } else {
        drop(child.stdin.take());
    }
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

const QUAD: &str = r#"{"n": 3, "degree": 2, "mode": "rational", "terms": [{"exp": [2, 0, 0], "coef": "8"}, {"exp": [0, 2, 0], "coef": "-2"}, {"exp": [0, 0, 2], "coef": "-8"}]}"#;

#[test]
fn decompose_feasibility_dsos_succeeds() {
    let inst = dcpoly(&["gen-instance", "--n", "3", "--degree", "4", "--seed", "5"], None);
    assert!(inst.status.success());
    let out = dcpoly(&["decompose", "--cone", "dsos"], Some(std::str::from_utf8(&inst.stdout).unwrap()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["cone"], "dsos");
    assert_eq!(v["objective_value"], 0.0);
}

#[test]
fn malformed_json_exits_with_parse_error() {
    let out = dcpoly(&["decompose"], Some("{not json"));
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "parse");
}

#[test]
fn undominated_quadratic_reports_finite_value() {
    let out = dcpoly(&["decompose", "--objective", "undom"], Some(QUAD));
    assert!(out.status.success());
    assert!(json(&out)["objective_value"].as_f64().unwrap().is_finite());
}

#[test]
fn lambda_max_quadratic_is_sixteen() {
    let out = dcpoly(&["decompose", "--objective", "lmax-point", "--point", "1,0,-1", "--lambda-cone", "psd"], Some(QUAD));
    assert!(out.status.success());
    assert!((json(&out)["objective_value"].as_f64().unwrap() - 16.0).abs() < 1e-4);
}

#[test]
fn point_of_wrong_length_is_a_usage_error() {
    let out = dcpoly(&["decompose", "--objective", "trace-point", "--point", "1,2"], Some(QUAD));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = dcpoly(&["decompose", "--frobnicate"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_convex_polynomial_is_not_certified() {
    let out = dcpoly(&["check-convexity", "--cone", "sos"], Some(QUAD));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["certified"], false);
}

#[test]
fn interior_construction_is_exact() {
    let out = dcpoly(&["construct-interior", "--n", "2", "--degree", "4", "--kind", "homogeneous", "--gram"], None);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["identity_holds"], true);
    assert_eq!(v["sequences"]["a"][0], "5/6");
    let p = dcpoly(&["check-convexity", "--cone", "dsos"], Some(&v["p"].to_string()));
    assert!(p.status.success());
}

#[test]
fn sphere_moment_of_square() {
    let out = dcpoly(&["integrate-sphere", "--exp", "0,2,0,0"], None);
    assert_eq!(json(&out)["normalized"], "1/4");
    let out = dcpoly(&["integrate-sphere", "--exp", "1,2"], None);
    assert_eq!(json(&out)["normalized"], "0");
}

#[test]
fn gen_instance_round_trips_byte_for_byte() {
    let a = dcpoly(&["gen-instance", "--n", "2", "--seed", "9"], None);
    let b = dcpoly(&["gen-instance", "--n", "2", "--seed", "9"], None);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["n"], 2);
    let text = String::from_utf8(a.stdout).unwrap();
    let p = dcpoly::poly::RatPoly::from_json(text.trim()).unwrap();
    assert_eq!(p.to_json(), text.trim());
}

#[test]
fn scan_family_outputs() {
    let out = dcpoly(&["scan-family", "--a-range", "0:0:1", "--b-range", "0:0:1"], None);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "a,b,c,level\n0,0,0,dsos\n");
    let out = dcpoly(&["scan-family", "--a-range", "1:0:1"], None);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "a,b,c,level\n");
}

#[test]
fn minimize_writes_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.jsonl");
    let out = dcpoly(
        &["minimize", "--n", "2", "--seed", "1", "--radius", "5", "--budget-s", "20", "--out", path.to_str().unwrap()],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let objs: Vec<f64> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["objective"].as_f64().unwrap())
        .collect();
    assert!(objs.len() >= 2);
    assert!(objs.windows(2).all(|w| w[1] <= w[0] + 1e-6));
}

#[test]
fn bench_decomp_empty_and_csv() {
    let out = dcpoly(&["bench-decomp", "--seeds", "", "--format", "json"], None);
    assert!(out.status.success());
    assert!(json(&out)["records"].as_array().unwrap().is_empty());

    let out = dcpoly(&["bench-decomp", "--n", "2", "--seeds", "0..2", "--format", "csv", "--threads", "2"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("experiment,seed,n,degree"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn bench_ccp_runs_all_arms() {
    let out = dcpoly(
        &["bench-ccp", "--n", "2", "--seeds", "1", "--radius", "4", "--budget-s", "10", "--max-iter", "30"],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let recs = v["records"].as_array().unwrap();
    assert_eq!(recs.len(), 5);
    assert!(recs.iter().all(|r| r["error"].is_null() && r["iterations"].as_u64().is_some()));
}

#[test]
fn solver_tolerance_env_is_honoured() {
    let out = Command::new(env!("CARGO_BIN_EXE_dcpoly"))
        .args(["decompose", "--objective", "undom"])
        .env("DCPOLY_SOLVER_TOL", "1e-6")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .and_then(|mut c| {
            c.stdin.take().unwrap().write_all(QUAD.as_bytes())?;
            c.wait_with_output()
        })
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn large_psd_blocks_solve_without_blas_override() {
    // Σ x_i⁴ in six variables needs a 36×36 Gram block.
    let terms: Vec<String> = (0..6)
        .map(|i| {
            let e: Vec<String> = (0..6).map(|j| if i == j { "4" } else { "0" }.to_string()).collect();
            format!(r#"{{"exp": [{}], "coef": "1"}}"#, e.join(","))
        })
        .collect();
    let p = format!(r#"{{"n": 6, "degree": 4, "mode": "rational", "terms": [{}]}}"#, terms.join(","));
    let out = Command::new(env!("CARGO_BIN_EXE_dcpoly"))
        .args(["check-convexity", "--cone", "sos"])
        .env_remove("OPENBLAS_CORETYPE")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .and_then(|mut c| {
            c.stdin.take().unwrap().write_all(p.as_bytes())?;
            c.wait_with_output()
        })
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["basis_size"], 36);
}
