use std::path::Path;
use std::process::{Command, Output};

use farey_core::thermo::critical_line;
use farey_core::tree::build_row;
use farey_core::Params;

fn farey(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_farey"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = farey(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Header and records of a CSV with `#` metadata lines.
fn csv_records(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let records = rdr
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, records)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn metadata_header() {
    let text = stdout(&["tree", "--rows", "2", "--mode", "exact", "--r", "1/3"]);
    let lines: Vec<_> = text.lines().take(3).collect();
    assert_eq!(lines[0], format!("# tool: farey {}", env!("CARGO_PKG_VERSION")));
    assert_eq!(lines[1], "# command: farey tree --rows 2 --mode exact --r 1/3");
    assert_eq!(lines[2], "# mode: exact");

    let text = stdout(&["trace", "--n", "2", "--format", "jsonl"]);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["meta"]["mode"], "float");
}

#[test]
fn tree_rows_match_library() {
    let (header, records) = csv_records(&stdout(&["tree", "--rows", "10", "--r", "1", "--format", "csv"]));
    let p = Params::new(1.0).unwrap();
    let expected: Vec<_> = (1..=10).flat_map(|n| build_row(n, &p).unwrap().nodes).collect();
    assert_eq!(records.len(), expected.len());
    let (pc, qc) = (column(&header, "p"), column(&header, "q"));
    for (rec, v) in records.iter().zip(&expected) {
        assert_eq!(rec[pc].parse::<f64>().unwrap(), v.p);
        assert_eq!(rec[qc].parse::<f64>().unwrap(), v.q);
    }
}

#[test]
fn streamed_rows_match_materialized() {
    let (header, records) = csv_records(&stdout(&["tree", "--rows", "21", "--r", "0.3"]));
    let row = build_row(21, &Params::new(0.3).unwrap()).unwrap();
    let (lc, qc) = (column(&header, "level"), column(&header, "q"));
    let streamed: Vec<f64> = records
        .iter()
        .filter(|r| r[lc] == "21")
        .map(|r| r[qc].parse().unwrap())
        .collect();
    assert_eq!(streamed.len(), row.nodes.len());
    for (a, v) in streamed.iter().zip(&row.nodes) {
        assert!((a - v.q).abs() <= 1e-12 * v.q, "{a} vs {}", v.q);
    }
}

#[test]
fn exact_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        let out = farey(&[
            "--threads",
            threads,
            "spin",
            "--k",
            "6",
            "--r",
            "2/5",
            "--mode",
            "exact",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        std::fs::read(Path::new(&path)).unwrap()
    };
    let (a, b) = (run("a.csv", "1"), run("b.csv", "4"));
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn cap_violations_are_usage_errors() {
    let out = farey(&["tree", "--rows", "23", "--mode", "exact"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("22"), "{err}");

    let out = farey(&["spin", "--k", "21", "--table", "fourier"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap 20"));

    let out = farey(&["trace", "--mode", "exact"]);
    assert!(!out.status.success());
}

#[test]
fn phase_curve() {
    let (header, records) = csv_records(&stdout(&["phase", "--r-grid", "0:0.9:0.1", "--tol", "1e-4"]));
    let (rc, sc) = (column(&header, "r"), column(&header, "s_cr"));
    let pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r[rc].parse().unwrap(), r[sc].parse().unwrap()))
        .collect();
    assert_eq!(pts.len(), 10);
    assert!((pts[0].1 - 1.0).abs() < 1e-4);
    assert!(pts.windows(2).all(|w| w[1].1 > w[0].1));
    for &(r, s) in &pts {
        let lib = critical_line(&Params::new(r).unwrap(), 1e-4).unwrap();
        assert!((s - lib).abs() < 1e-4, "r = {r}: {s} vs {lib}");
    }
}

#[test]
fn thermo_free_energy_at_r0() {
    let (header, records) = csv_records(&stdout(&["thermo", "--r", "0", "--s", "0.5", "--n", "40"]));
    let target = 0.5 * 2f64.ln();
    let f: f64 = records[0][column(&header, "F_n")].parse().unwrap();
    let limit: f64 = records[0][column(&header, "F_limit")].parse().unwrap();
    assert!((f - target).abs() < 0.05, "{f}");
    assert!((limit - target).abs() < 1e-3, "{limit}");
}

#[test]
fn trace_records_carry_method_and_error() {
    let text = stdout(&["trace", "--r", "0.5", "--n", "6", "--format", "jsonl"]);
    for line in text.lines().skip(1) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["r", "s", "n", "value", "method", "error_estimate"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["error_estimate"].as_f64().unwrap() < 1e-12);
    }
}

#[test]
fn verify_exit_status() {
    let out = farey(&["verify", "tree"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("[PASS]")));
    assert!(!text.contains("[FAIL]"));
    assert!(!farey(&["verify", "nonsense"]).status.success());
}
