use std::process::{Command, Output};

use flowgeom::diagnostics::{pullback_scalar_curvature, EPS_SING};
use flowgeom::expr::Params;
use flowgeom::flows::catalog;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowgeom")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Header row and data rows of a CSV emitted by the tool.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

const MOFFATT: [&str; 9] = ["diagnose", "--flow", "moffatt", "--t", "-1", "--grid", "x=-2:2:5,y=-2:2:5", "--fields", "f,R"];

#[test]
fn moffatt_grid_example() {
    let o = run(&MOFFATT);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = table(&stdout(&o));
    assert_eq!(header, vec!["x", "y", "f", "R", "flag"]);
    assert_eq!(rows.len(), 25);
    let row = rows.iter().find(|r| r[0] == "0.0" && r[1] == "-1.0").unwrap();
    assert_eq!(row[2].parse::<f64>().unwrap(), 12.0);
    assert_eq!(row[3].parse::<f64>().unwrap(), 0.01953125);
    assert_eq!(row[4], "");
}

#[test]
fn singular_cells_are_flagged() {
    let (_, rows) = table(&stdout(&run(&MOFFATT)));
    let row = rows.iter().find(|r| r[0] == "1.0" && r[1] == "0.0").unwrap();
    assert_eq!(row[3], "nan");
    assert!(!row[4].is_empty());
    for r in &rows {
        assert_eq!(r[3] == "nan", !r[4].is_empty());
    }
}

#[test]
fn manifest_keys_are_sorted() {
    let text = stdout(&run(&MOFFATT));
    let keys: Vec<&str> = text.lines().filter_map(|l| l.strip_prefix("# ")).map(|l| l.split(':').next().unwrap()).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    for k in ["command", "eps_sing", "fields", "flow", "grid", "params", "t", "version"] {
        assert!(keys.contains(&k), "{k}");
    }
}

#[test]
fn output_is_deterministic_and_job_independent() {
    let args = ["diagnose", "--flow", "taylor-green", "--grid", "x=-1:1:13,y=-1:1:11", "--fields", "f,Rhat,R,E+,E-,class"];
    let a = run(&[&args[..], &["--jobs", "1"]].concat());
    let b = run(&[&args[..], &["--jobs", "4"]].concat());
    let c = run(&[&args[..], &["--jobs", "1"]].concat());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn floats_round_trip() {
    let (_, rows) = table(&stdout(&run(&MOFFATT)));
    let spec = catalog("moffatt", &Params::new(), -1.0).unwrap();
    for r in rows.iter().filter(|r| r[4].is_empty()) {
        let p = [r[0].parse().unwrap(), r[1].parse().unwrap()];
        let expect = pullback_scalar_curvature(&spec, &p, EPS_SING).unwrap().r;
        assert_eq!(r[3].parse::<f64>().unwrap().to_bits(), expect.to_bits());
    }
}

#[test]
fn exit_codes() {
    let o = run(&["diagnose", "--flow", "moffatt", "--grid", "x=0:1:2,y=0:1:2", "--fields", "bogus"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("Rhat") && err.contains("helicity"), "{err}");
    assert_eq!(run(&["diagnose", "--flow", "nope", "--grid", "x=0:1:2,y=0:1:2", "--fields", "f"]).status.code(), Some(3));
    assert_eq!(run(&["diagnose", "--flow", "moffatt", "--grid", "x=0:1:1,y=0:1:2", "--fields", "f"]).status.code(), Some(2));
    assert_eq!(run(&["diagnose", "--flow", "moffatt", "--grid", "x=0:1:2,q=0:1:2", "--fields", "f"]).status.code(), Some(2));
    assert_eq!(run(&["diagnose", "--flow", "abc", "--params", "A=", "--grid", "x=0:1:2,y=0:1:2", "--fields", "f"]).status.code(), Some(2));
    assert_eq!(run(&["diagnose", "--grid", "x=0:1:2,y=0:1:2", "--fields", "f"]).status.code(), Some(2));
    assert_eq!(run(&["diagnose", "--flow", "moffatt", "--grid", "x=0:1:2,y=0:1:2", "--fields", "helicity"]).status.code(), Some(3));
    assert_eq!(run(&["reduce", "--flow", "moffatt", "--grid", "x=0:1:2,y=0:1:2", "--fields", "R2"]).status.code(), Some(2));
}

#[test]
fn custom_stream_function() {
    let o = run(&["diagnose", "--psi", "-F*cos(x)*cos(y)", "--params", "F=1", "--grid", "x=0.2:0.4:2,y=0.1:0.3:2", "--fields", "f,R"]);
    let p = run(&["diagnose", "--flow", "taylor-green", "--grid", "x=0.2:0.4:2,y=0.1:0.3:2", "--fields", "f,R"]);
    assert_eq!(table(&stdout(&o)).1, table(&stdout(&p)).1);
}

#[test]
fn hill_reduction_fields() {
    let o = run(&["reduce", "--flow", "hill-interior", "--grid", "r=0.25:0.5:2,z=-0.5:0:2", "--fields", "fhat2+h,R2,Rhat2,E+,E-"]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = table(&stdout(&o));
    assert_eq!(header, vec!["r", "z", "fhat2+h", "R2", "Rhat2", "E+", "E-", "flag"]);
    let row = rows.iter().find(|r| r[0] == "0.5" && r[1] == "0.0").unwrap();
    let v: Vec<f64> = row[2..7].iter().map(|c| c.parse().unwrap()).collect();
    let expect = [2.25, 224.0 / 225.0, 56.0 / 9.0, 11.25, 2.8125];
    for (a, b) in v.iter().zip(expect) {
        assert!((a - b).abs() < 1e-12 * b, "{a} {b}");
    }
}

#[test]
fn sample_reports_velocity_and_pressure() {
    let o = run(&["sample", "--flow", "abc", "--grid", "x=0:1:2,y=0:1:2", "--fields", "psi,v1,v2,v3,p,div"]);
    let (header, rows) = table(&stdout(&o));
    assert_eq!(header.len(), 9);
    for r in rows {
        let x: Vec<f64> = r[..8].iter().map(|c| c.parse().unwrap()).collect();
        let speed2 = x[3] * x[3] + x[4] * x[4] + x[5] * x[5];
        assert!((x[6] + 0.5 * speed2).abs() < 1e-12);
        assert!(x[7].abs() < 1e-12);
    }
}

#[test]
fn gauss_bonnet_json() {
    let o = run(&["gauss-bonnet", "--flow", "taylor-green", "--disc", "0,0,0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["chi"].as_f64().unwrap() - 1.0).abs() < 1e-4);
    let sum = ["area_term", "boundary_term", "corner_term"].iter().map(|k| v[k].as_f64().unwrap()).sum::<f64>();
    assert!((sum / (2.0 * std::f64::consts::PI) - v["chi"].as_f64().unwrap()).abs() < 1e-12);
    assert_eq!(v["manifest"]["flow"], "taylor-green");
    let bad = run(&["gauss-bonnet", "--flow", "taylor-green", "--disc", "0,0,1.3"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(run(&["gauss-bonnet", "--flow", "taylor-green"]).status.code(), Some(2));
}

#[test]
fn legendre_points_file() {
    let dir = std::env::temp_dir().join(format!("flowgeom-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("points.csv");
    std::fs::write(&path, "# probes\nx,y\n0.3,-1\n0.5,1\n0,0\n").unwrap();
    let o = run(&["legendre", "--flow", "moffatt", "--t", "-1", "--points", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = table(&stdout(&o));
    let col = |n: &str| header.iter().position(|h| h == n).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][col("sheet")], "1");
    assert_eq!(rows[1][col("sheet")], "-1");
    for r in &rows[..2] {
        assert!(r[col("ma_residual")].parse::<f64>().unwrap() < 1e-9);
        assert!(r[col("roundtrip")].parse::<f64>().unwrap() < 1e-9);
    }
    assert_eq!(rows[2][col("flag")], "FoldSingularity");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn verify_suites() {
    let o = run(&["verify", "--flow", "hill-interior", "--n", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pass"], true);
    let suites = &v["flows"]["hill-interior"]["suites"];
    for s in ["structures", "background", "pullback", "reduction"] {
        assert!(suites[s].is_object(), "{s}");
    }
    let bad = run(&["verify", "--velocity", "x;y", "--n", "3"]);
    assert_eq!(bad.status.code(), Some(4));
    let v: Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(v["flows"]["custom"]["suites"]["background"]["divergence"]["pass"], false);
}

#[test]
fn list_names_everything() {
    let text = stdout(&run(&["list"]));
    for name in flowgeom::flows::CATALOG {
        assert!(text.contains(name));
    }
    assert!(text.contains("fhat2+h") && text.contains("Rtilde"));
}
