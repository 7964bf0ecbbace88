//! Reruns with the same manifest must produce byte-identical output
//! files, independent of the worker count.

use std::fs;
use std::path::Path;
use std::process::Command;

fn run(args: &[&str], out: &Path, threads: &str) {
    let status = Command::new(env!("CARGO_BIN_EXE_llg"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("LLG_THREADS", threads)
        .status()
        .expect("spawning llg");
    assert!(status.success(), "llg {args:?} failed");
}

fn read_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn assert_identical_runs(args: &[&str]) {
    let base = tempdir();
    let a = base.join("a");
    let b = base.join("b");
    run(args, &a, "1");
    run(args, &b, "2");
    let fa = read_sorted(&a);
    let fb = read_sorted(&b);
    assert!(!fa.is_empty(), "no output files for {args:?}");
    let names_a: Vec<&String> = fa.iter().map(|(n, _)| n).collect();
    let names_b: Vec<&String> = fb.iter().map(|(n, _)| n).collect();
    assert_eq!(names_a, names_b, "file sets differ for {args:?}");
    for ((name, ca), (_, cb)) in fa.iter().zip(&fb) {
        // the manifest records the worker count, which is the one field
        // allowed to differ between the runs
        if name == "manifest.json" {
            continue;
        }
        assert_eq!(ca, cb, "{name} differs between reruns for {args:?}");
    }
    fs::remove_dir_all(base).ok();
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "llg-determinism-{}-{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap()
            .as_nanos()
    ));
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn gaps_rerun_is_byte_identical() {
    assert_identical_runs(&[
        "gaps", "--preset", "figstats", "--seed", "7", "--n", "1000", "--t", "30",
    ]);
    assert_identical_runs(&["gaps", "--preset", "poisson", "--seed", "7", "--n", "4000"]);
}

#[test]
fn discs_rerun_is_byte_identical() {
    assert_identical_runs(&[
        "discs", "--seed", "11", "--sigma", "0.5", "--n", "3000", "--t", "300",
    ]);
}

#[test]
fn freepath_rerun_is_byte_identical() {
    assert_identical_runs(&[
        "freepath", "--seed", "5", "--rho", "0.02", "--horizon", "3", "--n", "2000",
        "--xi-grid", "0:3:0.25",
    ]);
    assert_identical_runs(&[
        "freepath", "--seed", "5", "--rho", "0.02", "--horizon", "2", "--n", "1000",
        "--averaged", "--xi-grid", "0:2:0.25",
    ]);
}

#[test]
fn mc_rerun_is_byte_identical() {
    assert_identical_runs(&[
        "mc", "--curve", "F", "--seed", "9", "--sigma-grid", "0.5:1.0:0.5", "--n", "20000",
        "--r-max", "2",
    ]);
    assert_identical_runs(&[
        "mc", "--curve", "Phi", "--seed", "9", "--xi-grid", "0.2:1:0.2", "--n", "20000",
    ]);
}

#[test]
fn compare_rerun_is_byte_identical() {
    assert_identical_runs(&[
        "compare", "--theorem", "cone", "--seed", "21", "--sigma", "0.5", "--r", "0,1",
        "--t", "400", "--n", "6000",
    ]);
}
