use std::path::Path;
use std::process::{Command, Output};

fn finsler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsler")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn hyperbolic_curvature_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("k.csv");
    let o = finsler(&["curvature", "--builtin", "hyperbolic_poincare", "--dim", "2", "--samples", "20", "--out", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("x1,x2,y1,y2,K,Ric,Ric_11,Ric_12,Ric_21,Ric_22,flags\n"));
    let k = column(&text, "K");
    assert_eq!(k.len(), 20);
    assert!(k.iter().all(|v| (v + 1.0).abs() <= 1e-6));
}

#[test]
fn euclidean_curvature_vanishes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("k.csv");
    let o = finsler(&["curvature", "--builtin", "euclidean", "--dim", "3", "--out", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    for name in ["K", "Ric", "Ric_11", "Ric_23", "Ric_33"] {
        assert!(column(&text, name).iter().all(|v| *v == 0.0), "{name}");
    }
}

#[test]
fn randers_definition_violating_b_below_one_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "name = \"bad\"\ndim = 2\nkind = \"randers\"\na = [[1, 0], [0, 1]]\nb = [1.1, 0]\n").unwrap();
    let o = finsler(&["curvature", "--metric", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("b < 1"), "{}", stderr(&o));
}

#[test]
fn definition_files_drive_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("disc.toml");
    std::fs::write(&cfg, "name = \"disc\"\ndim = 2\nkind = \"riemannian\"\ndomain = \"unit_ball\"\na = \"4/(1 - x1^2 - x2^2)^2\"\n").unwrap();
    let out = dir.path().join("e.json");
    let o = finsler(&["verify", "einstein", "--metric", cfg.to_str().unwrap(), "--json", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = json(&out);
    assert_eq!(doc["metric"], "disc");
    assert!((doc["c_estimate"].as_f64().unwrap() - 1.0).abs() < 1e-5);

    std::fs::write(&cfg, "name = \"x\"\ndim = 2\nkind = \"riemannian\"\na = 1\nextra = 3\n").unwrap();
    assert_eq!(finsler(&["curvature", "--metric", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn proportionality_suite() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.json");
    let o = finsler(&["verify", "theorem-d", "--builtin", "hyperbolic_poincare", "--dim", "2", "--pairs", "10", "--json", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("theorem-d: PASS"));
    let doc = json(&out);
    assert!(doc["max_rel_error"].as_f64().unwrap() <= 1e-4);
    assert_eq!(doc["pairs"].as_array().unwrap().len(), 10);
    for key in ["n", "c", "expected_ratio", "pairs", "max_rel_error"] {
        assert!(doc.get(key).is_some(), "{key}");
    }
    for key in ["x", "y", "d_F", "d_M", "ratio", "rel_error"] {
        assert!(doc["pairs"][0].get(key).is_some(), "{key}");
    }
}

#[test]
fn inapplicable_suite_exits_with_three() {
    let o = finsler(&["verify", "theorem-d", "--builtin", "euclidean", "--dim", "2", "--pairs", "2"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn flat_randers_is_not_reversible() {
    let o = finsler(&["verify", "reversibility", "--builtin", "flat_randers", "--b", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    assert!(s.contains("reversibility: FAIL") && s.contains("0.6666666666666666"), "{s}");
    let o = finsler(&["verify", "reversibility", "--builtin", "hyperbolic_poincare"]);
    assert!(o.status.success());
}

#[test]
fn euclidean_ricci_is_parallel() {
    let o = finsler(&["verify", "ricci-parallel", "--builtin", "euclidean", "--dim", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("ricci-parallel: PASS"));
}

#[test]
fn distances() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.json");
    let o = finsler(&["distance", "--builtin", "euclidean", "--from", "0,0", "--to", "3,4", "--json", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!((json(&out)["distance"].as_f64().unwrap() - 5.0).abs() < 1e-9);

    let o = finsler(&["pseudo-distance", "--builtin", "hyperbolic_poincare", "--from", "0,0", "--to", "0.5,0", "--json", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = json(&out);
    let (upper, d_f) = (doc["upper"].as_f64().unwrap(), doc["d_f"].as_f64().unwrap());
    assert!((upper - 2.0 * d_f).abs() < 1e-6);

    let o = finsler(&["distance", "--builtin", "hyperbolic_poincare", "--from", "-0.2,0.1", "--to", "0.3,-0.4"]);
    assert!(o.status.success(), "negative coordinates parse: {}", stderr(&o));
}

#[test]
fn funk_geodesics_end_at_the_boundary_backward_only() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, out) = (dir.path().join("t.csv"), dir.path().join("t.json"));
    let args = ["geodesic", "--builtin", "funk_ball", "--from", "0,0", "--dir", "1,0", "--length", "3"];
    let o = finsler(&[&args[..], &["--json", out.to_str().unwrap(), "--out", csv.to_str().unwrap()]].concat());
    assert!(o.status.success());
    assert_eq!(json(&out)["terminated_by"], "length_reached");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("s,x1,x2,y1,y2,F\n"));
    assert!(column(&text, "F").iter().all(|f| (f - 1.0).abs() <= 1e-6));

    let o = finsler(&[&args[..], &["--backward", "--json", out.to_str().unwrap()]].concat());
    assert!(o.status.success());
    assert!(stdout(&o).contains("domain boundary"));
    let doc = json(&out);
    assert_eq!(doc["terminated_by"], "domain_boundary");
    assert!((doc["length"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-6);
}

#[test]
fn schwarzian_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = finsler(&["schwarzian", "--expr", "x1", "--at", "-1,0,2", "--json", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(json(&out)["values"].as_array().unwrap().iter().all(|v| v["value"] == 0.0));
    assert_eq!(finsler(&["schwarzian", "--expr", "1 +"]).status.code(), Some(2));
    assert_eq!(finsler(&["schwarzian", "--expr", "5"]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(finsler(&["curvature"]).status.code(), Some(2));
    assert_eq!(finsler(&["curvature", "--builtin", "sphere"]).status.code(), Some(2));
    assert_eq!(finsler(&["curvature", "--builtin", "euclidean", "--tol-profile", "loose"]).status.code(), Some(2));
    assert_eq!(finsler(&["distance", "--builtin", "euclidean", "--from", "0,0", "--to", "1"]).status.code(), Some(2));
    assert_eq!(finsler(&["verify", "bogus", "--builtin", "euclidean"]).status.code(), Some(2));
}

#[test]
fn seeded_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let p = dir.path().join(name);
        let o = finsler(&["curvature", "--builtin", "funk_ball", "--samples", "15", "--seed", seed, "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
        std::fs::read(&p).unwrap()
    };
    assert_eq!(run("a.csv", "7"), run("b.csv", "7"));
    assert_ne!(run("a.csv", "7"), run("c.csv", "8"));
}
