//! Acceptance suite: every criterion behind `reproduce --suite full`, one
//! test per criterion, plus the byte-level determinism check through the
//! actual command-line binary.

use specprop::experiments::{run_criterion, Suite, CRITERIA};

const SEED: u64 = 7;

fn check(id: &str) {
    let outcome = run_criterion(id, Suite::Full, SEED).expect("criterion ran");
    println!("{} {}: {} ({})", outcome.id, outcome.name, if outcome.passed { "PASS" } else { "FAIL" }, outcome.details);
    assert!(outcome.passed, "{} {} failed: {}", outcome.id, outcome.name, outcome.details);
}

#[test]
fn c01_closed_form_kernels() {
    check("c01");
}

#[test]
fn c02_decay_exponents() {
    check("c02");
}

#[test]
fn c03_scaling_identity() {
    check("c03");
}

#[test]
fn c04_partition_of_unity() {
    check("c04");
}

#[test]
fn c05_norm_equivalence() {
    check("c05");
}

#[test]
fn c06_band_kernel_decay() {
    check("c06");
}

#[test]
fn c07_smoothing_bound() {
    check("c07");
}

#[test]
fn c08_adjoint_reproduction() {
    check("c08");
}

#[test]
fn c09_weak_residual() {
    check("c09");
}

#[test]
fn c10_main_estimate() {
    check("c10");
}

#[test]
fn c11_holder_estimate() {
    check("c11");
}

#[test]
fn c12_weak_1_1() {
    check("c12");
}

#[test]
fn c13_cz_decomposition() {
    check("c13");
}

/// Criterion 14 through the real binary: two smoke runs must produce
/// byte-identical artifact trees, each within the stated time budget.
#[test]
fn c14_determinism_via_binary() {
    let exe = env!("CARGO_BIN_EXE_specprop");
    let base = std::env::temp_dir().join(format!("specprop_det_{}", std::process::id()));
    let mut bundles = Vec::new();
    for run in 0..2 {
        let dir = base.join(format!("run{run}"));
        std::fs::create_dir_all(&dir).unwrap();
        let start = std::time::Instant::now();
        let status = std::process::Command::new(exe)
            .args([
                "--seed",
                "7",
                "--out",
                dir.to_str().unwrap(),
                "reproduce",
                "--suite",
                "smoke",
            ])
            .status()
            .expect("binary runs");
        let elapsed = start.elapsed().as_secs_f64();
        assert!(status.success(), "smoke suite failed (exit {status:?})");
        assert!(elapsed < 120.0, "smoke run took {elapsed:.0}s");
        bundles.push(read_tree(&dir));
    }
    assert_eq!(bundles[0].len(), bundles[1].len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in bundles[0].iter().zip(&bundles[1]) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "artifact {name_a} differs between runs");
    }
    std::fs::remove_dir_all(&base).ok();
}

fn read_tree(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let entry = entry.unwrap();
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                if rel == "report.txt" {
                    continue; // the run log carries wall-clock timings
                }
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn criterion_table_is_complete() {
    assert_eq!(CRITERIA.len(), 14);
    let ids: Vec<&str> = CRITERIA.iter().map(|&(id, _)| id).collect();
    assert_eq!(ids.first(), Some(&"c01"));
    assert_eq!(ids.last(), Some(&"c14"));
}
