//! The fixed command set behind the golden files.

use std::path::PathBuf;
use std::process::{Command, Output};

pub const CASES: &[(&str, &[&str])] = &[
    ("seq_csv", &["--sys", "p=3;A=0,2", "seq", "--count", "20"]),
    ("seq_json", &["--sys", "p=5;A=0,1,3", "--format", "json", "seq", "--count", "5", "--start", "1000"]),
    ("seq_double", &["--sys", "p=4;A=1,2,3", "--precision", "double", "seq", "--count", "10"]),
    ("seq_big", &["--sys", "p=3;A=0,2", "seq", "--count", "3", "--start", "123456789012345678901234567890"]),
    ("lambda", &["--sys", "p=3;A=0,2", "lambda", "--x", "3/4", "--tol", "1e-9"]),
    ("lambda_json", &["--sys", "p=3;A=1,2", "--format", "json", "lambda", "--x", "0.1(01)"]),
    ("measure_grid", &["--sys", "p=3;A=0,2", "measure", "--grid", "8"]),
    ("measure_point", &["--sys", "p=5;A=0,1,3", "measure", "--x", "0.3"]),
    ("ifs_json", &["--sys", "p=3;A=0,2", "--format", "json", "ifs", "--k", "3"]),
    ("accpoint", &["--sys", "p=3;A=0,2", "accpoint", "--digits", "0.2"]),
    ("bounds_json", &["--q", "2", "--r", "0", "--p", "4", "--format", "json", "bounds"]),
    ("bounds_csv", &["--q", "2", "--r", "1", "--p", "7", "bounds"]),
    ("extrema", &["--sys", "p=5;A=0,1,3", "extrema", "--limit", "10000"]),
    ("descent", &["--sys", "p=3;A=0,2", "descent", "--limit", "1000"]),
    ("dense", &["--sys", "p=3;A=1,2", "dense", "--gamma", "1.75", "--k", "12"]),
    ("cdf", &["--sys", "p=3;A=0,2", "cdf", "--alpha", "1.5", "--x1", "2039/2048", "--eta1", "1/2048", "--x2", "1307/2048", "--eta2", "1/2048", "--kmin", "8", "--kmax", "10"]),
    ("ldf", &["--sys", "p=3;A=0,2", "ldf", "--alpha", "1.5", "--kmax", "10"]),
    ("levelset", &["--sys", "p=3;A=0,2", "levelset", "--alpha", "1.5", "--k", "10", "--eps", "0.1,0.01"]),
    ("envelope_json", &["--q", "1", "--r", "1", "--p", "3", "--format", "json", "envelope", "--kmax", "6"]),
];

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cantor")).args(args).output().expect("binary runs")
}

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.txt"))
}

/// Runs a case twice and compares both outputs with its golden file;
/// `CANTOR_BLESS=1` rewrites the file instead.
pub fn check(name: &str, args: &[&str]) -> Result<(), String> {
    let first = run(args);
    if !first.status.success() {
        return Err(format!("{name}: exit {:?}: {}", first.status.code(), String::from_utf8_lossy(&first.stderr)));
    }
    let second = run(args);
    if first.stdout != second.stdout {
        return Err(format!("{name}: output differs between runs"));
    }
    let path = golden_path(name);
    if std::env::var_os("CANTOR_BLESS").is_some() {
        std::fs::write(&path, &first.stdout).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let want = std::fs::read(&path).map_err(|e| format!("{name}: {e}"))?;
    if want != first.stdout {
        return Err(format!("{name}: output differs from {}", path.display()));
    }
    Ok(())
}
