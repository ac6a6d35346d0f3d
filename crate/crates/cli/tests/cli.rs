use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

use flate2::write::GzEncoder;
use flate2::Compression;

fn privpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_privpc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_triangle_with_tail(path: &Path, gzip: bool) {
    let text = "# comment\n0 1\n1 2\n2 0\n2 3\n";
    let file = std::fs::File::create(path).unwrap();
    if gzip {
        let mut enc = GzEncoder::new(file, Compression::default());
        enc.write_all(text.as_bytes()).unwrap();
        enc.finish().unwrap();
    } else {
        let mut file = file;
        file.write_all(text.as_bytes()).unwrap();
    }
}

#[test]
fn stats_on_complete_graph() {
    let v = json(&privpc(&["stats", "--synthetic", "complete:100"]));
    assert_eq!(v["n"], 100);
    assert_eq!(v["m"], 4950);
    assert!((v["gap"].as_f64().unwrap() - 98.0).abs() < 1e-8);
}

#[test]
fn plain_and_gzip_inputs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("g.txt");
    let gz = dir.path().join("g.txt.gz");
    write_triangle_with_tail(&plain, false);
    write_triangle_with_tail(&gz, true);
    let a = json(&privpc(&["stats", "--graph", plain.to_str().unwrap()]));
    let b = json(&privpc(&["stats", "--graph", gz.to_str().unwrap()]));
    assert_eq!(a["n"], 4);
    assert_eq!(a["m"], 4);
    assert_eq!(a["lambda1"], b["lambda1"]);
}

#[test]
fn run_csv_is_reproducible_without_timing() {
    let args = [
        "run", "--synthetic", "planted:120,0.05,12,3", "--mechanism", "ptr", "--k-grid", "12",
        "--trials", "5", "--seed", "9", "--format", "csv", "--no-timing",
    ];
    let a = privpc(&args);
    let b = privpc(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "graph,mechanism,k,trial,status,density,jaccard,time_ms,eps_total,delta_total"
    );
    assert_eq!(lines.count(), 5);
}

#[test]
fn release_redacts_diagnostics_unless_asked() {
    let quiet = json(&privpc(&["release", "--synthetic", "complete:30"]));
    let loud = json(&privpc(&["release", "--synthetic", "complete:30", "--debug-unsafe"]));
    assert!(quiet.get("diagnostics").is_none());
    assert!(loud.get("diagnostics").is_some());
    assert_eq!(quiet["v"], loud["v"]);
}

#[test]
fn exit_codes() {
    let bad_k = privpc(&["run", "--synthetic", "complete:10", "--k-grid", "11", "--trials", "1"]);
    assert_eq!(bad_k.status.code(), Some(2));
    let bad_eps = privpc(&["release", "--synthetic", "complete:10", "--eps1", "-1"]);
    assert_eq!(bad_eps.status.code(), Some(2));
    let bad_spec = privpc(&["stats", "--synthetic", "bogus:3"]);
    assert_eq!(bad_spec.status.code(), Some(2));
    let missing = privpc(&["stats", "--graph", "/nonexistent/edges.txt"]);
    assert_eq!(missing.status.code(), Some(3));
}
