#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn orthonn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orthonn")).args(args).output().expect("failed to start orthonn")
}

pub fn run_ok(args: &[&str]) -> Output {
    let out = orthonn(args);
    assert!(out.status.success(), "orthonn {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).expect("stderr is not JSON")
}

/// Rows of a CSV file with a header, as floats.
pub fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
