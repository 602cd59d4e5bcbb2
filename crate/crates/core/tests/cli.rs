use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use haar_svie::brownian::BrownianPath;
use haar_svie::cli::paper_source;

fn haar_svie(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_haar-svie"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = haar_svie(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn zero_kernel_table_equals_source() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zero.csv");
    run_ok(&["run", "--problem", "zero-kernel", "--level", "1", "--paths", "1", "--output", path_str(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("J,M,2M,x,y,mean,ci_low,ci_high"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 16);
    for r in &rows {
        assert_eq!(&r[..3], &[1.0, 2.0, 4.0]);
        assert_eq!(r[5], paper_source(r[3], r[4]));
        assert_eq!(r[5], r[6]);
        assert_eq!(r[5], r[7]);
    }
    // m outer, n inner.
    assert_eq!((rows[0][3], rows[0][4]), (0.125, 0.125));
    assert_eq!((rows[1][3], rows[1][4]), (0.125, 0.375));
    assert_eq!((rows[4][3], rows[4][4]), (0.375, 0.125));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let common = ["run", "--problem", "paper-example", "--level", "0", "--paths", "1000", "--seed", "7"];
    run_ok(&[&common[..], &["--output", path_str(&a)]].concat());
    run_ok(&[&["--threads", "3"][..], &common[..], &["--output", path_str(&b)]].concat());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn surface_file_has_one_line_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let grid = dir.path().join("g.csv");
    run_ok(&[
        "run", "--problem", "paper-example", "--level", "2", "--paths", "1000",
        "--output", path_str(&out), "--grid-out", path_str(&grid),
    ]);
    let text = fs::read_to_string(&grid).unwrap();
    assert_eq!(text.lines().next(), Some("x,y,mean"));
    assert_eq!(text.lines().count(), 65);
}

#[test]
fn json_output_carries_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    run_ok(&[
        "run", "--problem", "det-xy", "--level", "1", "--paths", "5", "--format", "json",
        "--output", path_str(&out),
    ]);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["metadata"]["config"]["problem"], "det-xy");
    assert_eq!(doc["metadata"]["r_effective"], 5);
    assert_eq!(doc["metadata"]["failures"].as_array().unwrap().len(), 0);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 16);
    assert_eq!(rows[0]["2M"], 4);
    assert_eq!(rows[0]["ci_low"], rows[0]["mean"]);
}

#[test]
fn deterministic_flag_removes_spread() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    run_ok(&[
        "run", "--problem", "paper-example", "--level", "1", "--paths", "20", "--deterministic",
        "--output", path_str(&out),
    ]);
    for line in fs::read_to_string(&out).unwrap().lines().skip(1) {
        let v: Vec<&str> = line.split(',').collect();
        assert_eq!(v[5], v[6]);
        assert_eq!(v[5], v[7]);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let unknown = haar_svie(&["run", "--problem", "nope", "--output", path_str(&out)]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("paper-example"));

    let bad_conf = haar_svie(&["run", "--problem", "det-xy", "--confidence", "1.5", "--output", path_str(&out)]);
    assert_eq!(bad_conf.status.code(), Some(2));

    let missing_dir = dir.path().join("no/such/dir/t.csv");
    let io = haar_svie(&["run", "--problem", "det-xy", "--paths", "2", "--output", path_str(&missing_dir)]);
    assert_eq!(io.status.code(), Some(4));
}

#[test]
fn dumped_path_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("path.csv");
    run_ok(&["dump-path", "--seed", "5", "--index", "2", "--level", "2", "--output", path_str(&out)]);
    let path = BrownianPath::read_csv(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(path.grid_count(), 16);
    assert_eq!(path.values()[0], 0.0);
}

#[test]
fn list_names_registry() {
    let out = haar_svie(&["list"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().collect::<Vec<_>>(), ["paper-example", "det-xy", "zero-kernel"]);
}
