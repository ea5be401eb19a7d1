use std::process::Command;

use sampgap::report::{read_block_rows, read_bound_reports};
use sampgap_cli::rates::read_fits;

fn sampgap(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sampgap")).args(args).output().expect("binary runs")
}

#[test]
fn sandwich_writes_parseable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = sampgap(&[
        "sandwich", "--family", "powerlog", "--n-grid", "2^4..2^7", "--bandwidth", "1024",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_bound_reports(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![16, 32, 64, 128]);
}

#[test]
fn rates_to_stdout() {
    let o = sampgap(&[
        "rates", "--family", "powerlog", "--n-grid", "2^4..2^9", "--bandwidth", "2048",
        "--target", "approx", "--target", "integration",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fits = read_fits(o.stdout.as_slice()).unwrap();
    assert_eq!(fits.len(), 2);
    assert_eq!(fits[0].window, (16, 512));
}

#[test]
fn trace_infty_small_run() {
    let o = sampgap(&["trace-infty", "--j-max", "3", "--exact-span", "4096", "--samples", "32"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_block_rows(o.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 3);
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(sampgap(&["sandwich", "--family", "musquare"]).status.code(), Some(2));
    assert_eq!(sampgap(&["sandwich", "--family", "powerlog", "--n-grid", "32,16"]).status.code(), Some(2));
    assert_eq!(sampgap(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(sampgap(&["trace-infty", "--j-max", "0"]).status.code(), Some(2));
}
