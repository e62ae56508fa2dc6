use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn tiledcsl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tiledcsl")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = tiledcsl(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_encode_spmm_check() {
    let dir = TempDir::new().unwrap();
    let (a, t, b, c) = (path(&dir, "a.fldm"), path(&dir, "a.tcsl"), path(&dir, "b.fldm"), path(&dir, "c.fldm"));
    ok(&["gen", "--rows", "256", "--cols", "192", "--sparsity", "0.8", "--seed", "3", "-o", s(&a)]);
    ok(&["gen", "--rows", "192", "--cols", "16", "--seed", "4", "-o", s(&b)]);
    ok(&["encode", "-i", s(&a), "-o", s(&t)]);
    let out = ok(&["spmm", "-a", s(&t), "-b", s(&b), "-o", s(&c), "--check"]);
    assert_eq!(out.trim(), "bit-exact: true");
    let bytes = std::fs::read(&c).unwrap();
    assert_eq!(&bytes[..4], b"FLDM");
    assert_eq!(bytes.len(), 16 + 4 * 256 * 16);
    ok(&["spmm", "-a", s(&t), "-b", s(&b), "-o", s(&c), "--out-f16"]);
    assert_eq!(std::fs::read(&c).unwrap().len(), 16 + 2 * 256 * 16);
}

#[test]
fn encode_decode_round_trip_and_determinism() {
    let dir = TempDir::new().unwrap();
    let (a, p, t1, t2, d) = (
        path(&dir, "a.fldm"),
        path(&dir, "p.fldm"),
        path(&dir, "1.tcsl"),
        path(&dir, "2.tcsl"),
        path(&dir, "d.fldm"),
    );
    ok(&["gen", "--rows", "100", "--cols", "70", "--seed", "9", "-o", s(&a)]);
    ok(&["prune", "-i", s(&a), "-o", s(&p), "--sparsity", "0.75"]);
    ok(&["encode", "-i", s(&p), "-o", s(&t1), "--tile-m", "64", "--tile-k", "32", "--no-reorder"]);
    ok(&["encode", "-i", s(&p), "-o", s(&t2), "--tile-m", "64", "--tile-k", "32", "--no-reorder"]);
    assert_eq!(std::fs::read(&t1).unwrap(), std::fs::read(&t2).unwrap());
    ok(&["decode", "-i", s(&t1), "-o", s(&d)]);
    assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&d).unwrap());
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = path(&dir, "missing.fldm");
    let out = tiledcsl(&["encode", "-i", s(&missing), "-o", s(&path(&dir, "x.tcsl"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());

    let (a, t, b) = (path(&dir, "a.fldm"), path(&dir, "a.tcsl"), path(&dir, "b.fldm"));
    ok(&["gen", "--rows", "128", "--cols", "64", "-o", s(&a)]);
    ok(&["gen", "--rows", "65", "--cols", "8", "-o", s(&b)]);
    ok(&["encode", "-i", s(&a), "-o", s(&t)]);
    let out = tiledcsl(&["spmm", "-a", s(&t), "-b", s(&b)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension"));

    std::fs::write(&t, b"TCSLjunk").unwrap();
    assert_eq!(tiledcsl(&["decode", "-i", s(&t), "-o", s(&a)]).status.code(), Some(3));
    assert_eq!(tiledcsl(&["gen", "--rows", "4", "--cols", "4", "--sparsity", "2", "-o", s(&a)]).status.code(), Some(2));
    assert_eq!(tiledcsl(&["analyze", "--shape", "1,2", "--sparsity", "0.5"]).status.code(), Some(2));
    assert_eq!(tiledcsl(&["analyze", "--shape", "8,8,8", "--hw", "speed=1"]).status.code(), Some(2));
    assert_eq!(tiledcsl(&["bench", "--unknown"]).status.code(), Some(2));
}

#[test]
fn analyze_reports_roofline() {
    let out = ok(&["analyze", "--shape", "49152,12288,64", "--sparsity", "0.4", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["util_sparse"].as_f64().unwrap() - 0.682).abs() < 0.003);
    assert_eq!(v["M"], 49152);
    for key in ["K", "N", "beta", "ci_dense", "ci_sparse", "util_dense", "dense_bytes", "tcsl_bytes", "ratio"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let out = ok(&["analyze", "--shape", "1024,1024,16", "--sparsity", "0.5", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["flag"].is_string());

    let out = ok(&["analyze", "--shape", "49152,12288,8", "--hw", "peak=624e12,bw=2e12"]);
    assert!(out.contains("ridge        312.00"));
}

#[test]
fn analyze_measures_encoded_file() {
    let dir = TempDir::new().unwrap();
    let (a, t) = (path(&dir, "a.fldm"), path(&dir, "a.tcsl"));
    ok(&["gen", "--rows", "256", "--cols", "128", "--sparsity", "0.9", "-o", s(&a)]);
    ok(&["encode", "-i", s(&a), "-o", s(&t)]);
    let out = ok(&["analyze", "--shape", "256,128,8", "--sparsity", "0.9", "-a", s(&t), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["tcsl_bytes"].as_u64().unwrap(), std::fs::metadata(&t).unwrap().len());
    let out = tiledcsl(&["analyze", "--shape", "128,128,8", "-a", s(&t)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_csv_and_json() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "bench.csv");
    ok(&["bench", "--csv", s(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("name,M,K,N,beta,ci_dense,ci_sparse,util_dense,util_sparse,dense_bytes,tcsl_bytes,ratio"));
    assert_eq!(lines.count(), 12 * 4 * 3);

    let out = ok(&["bench", "--shapes", "4096x4096", "--batch", "8,64", "--sparsities", "0.9", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert!(v[0]["est_speedup"].as_f64().unwrap() > 1.0);
    assert_eq!(ok(&["bench", "--shapes", "1024x1024", "--batch", "16"]).lines().count(), 4);
}

#[test]
fn pipeline_json_schema() {
    let out = ok(&["pipeline", "--shape", "256,256,16", "--sparsity", "0.8", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let events = v["timeline"]["events"].as_array().unwrap();
    assert!(!events.is_empty());
    for key in ["kind", "iter", "buffer", "resource", "cost"] {
        assert!(events[0].get(key).is_some(), "event missing {key}");
    }
    assert!(v["timeline"]["edges"][0].as_array().unwrap().len() == 2);
    for key in ["gmem_s", "smem_s", "tc_s", "kernel_s", "per_iteration"] {
        assert!(v["estimate"].get(key).is_some(), "estimate missing {key}");
    }
    assert!(v["violations"].as_array().unwrap().is_empty());
    assert!(ok(&["pipeline", "--shape", "256,256,16"]).contains("valid       true"));
}
