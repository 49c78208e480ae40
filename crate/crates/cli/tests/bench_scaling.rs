//! Timing checks, in their own test binary so no other test competes for the CPU.

mod common;

use common::{csv_rows, read_json, run_ok, s};

#[test]
fn bench_scaling_fits_a_quadratic_and_counts_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    run_ok(&["bench-scaling", "--n-list", "4,8,16,32,64", "--trials", "20", "--out", s(&out)]);
    let (header, rows) = csv_rows(&out.join("scaling.csv"));
    assert_eq!(header, ["n", "params", "trial", "seconds_per_epoch"]);
    assert_eq!(rows.len(), 5 * 20);
    for r in &rows {
        let n = r[0] as usize;
        // square n×n pyramid plus the n→2 light cone
        assert_eq!(r[1] as usize, n * (n - 1) / 2 + (2 * n - 3));
    }
    let fit = read_json(&out.join("fit.json"));
    assert!(fit["r2"].as_f64().unwrap() > 0.98, "{fit}");
    assert!(fit["a"].as_f64().unwrap() > 0.0);
}

#[test]
fn single_width_run_emits_one_row_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    run_ok(&["bench-scaling", "--n-list", "12", "--trials", "7", "--out", s(&out)]);
    assert_eq!(csv_rows(&out.join("scaling.csv")).1.len(), 7);
    assert!(read_json(&out.join("fit.json"))["skipped"].is_string());
}
