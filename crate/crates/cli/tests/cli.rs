//! End-to-end runs of the `xsect` binary: one test per subcommand plus the
//! exit-code contract and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;
use xsect_core::{CrossSection, Mode};

struct Run {
    code: i32,
    stdout: String,
    json: Value,
}

fn xsect(dir: &Path, args: &[&str], threads: Option<&str>) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_xsect"));
    cmd.current_dir(dir).args(args);
    match threads {
        Some(t) => cmd.env("XSECT_THREADS", t),
        None => cmd.env_remove("XSECT_THREADS"),
    };
    let out = cmd.output().expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {stdout}"));
    Run { code: out.status.code().unwrap(), stdout, json }
}

fn run(dir: &Path, args: &[&str]) -> Run {
    xsect(dir, args, None)
}

fn fixtures() -> TempDir {
    let d = tempfile::tempdir().unwrap();
    let files = [
        ("shear.json", "[[1,1],[0,1]]"),
        ("rotation.json", "[[0,1],[-1,0]]"),
        ("rotation_generator.json", "[[0,1],[-1,0]]"),
        ("shear_generator.json", "{\"n\": 2, \"rows\": [[0,1],[0,0]]}"),
        ("spiral_generator.json", "[[1,1],[-1,1]]"),
        ("spiral.json", "[[1.2,1.6],[-1.6,1.2]]"),
        ("d23.json", "[[2,0],[0,3]]"),
        ("dmixed.json", "[[2,0],[0,0.5]]"),
        ("two.json", "[[2]]"),
        ("z1.json", "[[1]]"),
        ("k1.json", r#"{"kind":"boxes","boxes":[{"lo":[-1],"hi":[-0.5]},{"lo":[0.5],"hi":[1]}]}"#),
        ("k2.json", r#"{"kind":"boxes","boxes":[{"lo":[-2],"hi":[-1]},{"lo":[1],"hi":[2]}]}"#),
        ("empty.json", r#"{"kind":"boxes","boxes":[]}"#),
        ("overlap.json", r#"{"kind":"boxes","boxes":[{"lo":[0],"hi":[2]},{"lo":[1],"hi":[3]}]}"#),
    ];
    for (name, body) in files {
        std::fs::write(d.path().join(name), body).unwrap();
    }
    d
}

fn error_code(r: &Run) -> &str {
    r.json["error"]["code"].as_str().unwrap_or("")
}

fn path(d: &TempDir, name: &str) -> PathBuf {
    d.path().join(name)
}

#[test]
fn classify_shear_and_rotation() {
    let d = fixtures();
    let r = run(d.path(), &["classify", "--mode", "discrete", "--matrix", "shear.json"]);
    assert_eq!(r.code, 0);
    let v = &r.json["result"];
    assert_eq!((v["exists"].as_bool(), v["finite_measure"].as_bool(), v["bounded"].as_bool()), (Some(true), Some(false), Some(false)));
    assert!(r.json["manifest"]["inputs"]["matrix"].as_str().unwrap().len() == 64);

    let r = run(d.path(), &["classify", "--mode", "continuous", "--generator", "rotation_generator.json"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json["result"]["exists"], false);
}

#[test]
fn build_nonexistence_exits_two() {
    let d = fixtures();
    let r = run(d.path(), &["build", "--mode", "continuous", "--matrix", "rotation_generator.json"]);
    assert_eq!(r.code, 2);
    assert_eq!(error_code(&r), "no_section");
    assert_eq!(r.json["error"]["nonexistence"], true);
}

#[test]
fn build_writes_section_and_grid() {
    let d = fixtures();
    let r = run(d.path(), &["build", "--mode", "discrete", "--matrix", "shear.json", "--out", "s.json", "--dump", "g.csv"]);
    assert_eq!(r.code, 0);
    assert_eq!(std::fs::read_to_string(path(&d, "s.json")).unwrap(), r.stdout);
    let csv = std::fs::read_to_string(path(&d, "g.csv")).unwrap();
    assert_eq!(csv.lines().count(), 40_001);
    assert_eq!(csv.lines().next().unwrap(), "x1,x2,member,parameter");
}

#[test]
fn solve_returns_member_representative() {
    let d = fixtures();
    assert_eq!(run(d.path(), &["build", "--mode", "discrete", "--matrix", "d23.json", "--out", "s.json"]).code, 0);
    let r = run(d.path(), &["solve", "--section", "s.json", "--point", "0.3,-5"]);
    assert_eq!(r.code, 0);
    let rep: Vec<f64> = serde_json::from_value(r.json["result"]["representative"].clone()).unwrap();
    let written: Value = serde_json::from_str(&std::fs::read_to_string(path(&d, "s.json")).unwrap()).unwrap();
    let s: CrossSection = serde_json::from_value(written["result"].clone()).unwrap();
    assert!(s.contains(&rep).unwrap());
    assert!(r.json["result"]["parameter"].is_i64());

    let r = run(d.path(), &["solve", "--section", "s.json", "--point", "1,2,3"]);
    assert_eq!((r.code, error_code(&r)), (1, "usage"));
}

#[test]
fn shape_targets_and_rejections() {
    let d = fixtures();
    let r = run(d.path(), &["shape", "--mode", "discrete", "--matrix", "d23.json", "--target", "finite", "--out", "f.json"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json["result"]["target"], "finite_measure");
    let r = run(d.path(), &["shape", "--mode", "discrete", "--matrix", "dmixed.json", "--target", "bounded"]);
    assert_eq!((r.code, error_code(&r)), (2, "mixed_moduli"));
    let r = run(d.path(), &["shape", "--mode", "discrete", "--matrix", "shear.json", "--target", "finite"]);
    assert_eq!((r.code, error_code(&r)), (2, "det_one"));
    // A section checked against the wrong matrix.
    assert_eq!(run(d.path(), &["build", "--mode", "discrete", "--matrix", "d23.json", "--out", "s.json"]).code, 0);
    let r = run(d.path(), &["shape", "--section", "s.json", "--matrix", "shear.json", "--target", "finite"]);
    assert_eq!((r.code, error_code(&r)), (1, "invalid_input"));
}

#[test]
fn verify_pass_and_usage_errors() {
    let d = fixtures();
    let base = ["verify", "--mode", "discrete", "--matrix", "shear.json"];
    let r = run(d.path(), &[&base[..], &["--samples", "0", "--seed", "1"]].concat());
    assert_eq!((r.code, error_code(&r)), (1, "usage"));
    let r = run(d.path(), &[&base[..], &["--samples", "10"]].concat());
    assert_eq!((r.code, error_code(&r)), (1, "usage"));

    let r = run(d.path(), &[&base[..], &["--samples", "500", "--seed", "7", "--dump", "v.csv"]].concat());
    assert_eq!(r.code, 0);
    assert_eq!(r.json["result"]["pass"], true);
    assert_eq!(r.json["result"]["multiplicities"]["1"], 500);
    assert_eq!(r.json["manifest"]["seed"], 7);
    assert_eq!(std::fs::read_to_string(path(&d, "v.csv")).unwrap().lines().count(), 501);

    // Shaped sections verify through the same command.
    assert_eq!(run(d.path(), &["shape", "--mode", "discrete", "--matrix", "d23.json", "--target", "bounded", "--out", "b.json"]).code, 0);
    let r = run(d.path(), &["verify", "--section", "b.json", "--samples", "300", "--seed", "2"]);
    assert_eq!((r.code, r.json["result"]["pass"].as_bool()), (0, Some(true)));

    let cont = ["verify", "--mode", "continuous", "--generator", "spiral_generator.json", "--samples", "100", "--seed", "3"];
    for check in ["tiling", "calderon", "jacobian", "disjointness"] {
        let r = run(d.path(), &[&cont[..], &["--check", check]].concat());
        assert_eq!(r.code, 0, "{check}: {}", r.stdout);
    }
}

#[test]
fn integrate_against_direct_quadrature() {
    let d = fixtures();
    let r = run(d.path(), &["integrate", "--mode", "continuous", "--generator", "shear_generator.json"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.json["result"]["relative_difference"].as_f64().unwrap() < 0.01);
    let r = run(d.path(), &["integrate", "--mode", "discrete", "--matrix", "d23.json"]);
    assert_eq!((r.code, error_code(&r)), (1, "usage"));
    let r = run(d.path(), &["integrate", "--mode", "continuous", "--generator", "shear_generator.json", "--samples", "5"]);
    assert_eq!((r.code, error_code(&r)), (1, "usage"));
}

#[test]
fn wavelet_check_pass_and_fail() {
    let d = fixtures();
    let args = ["wavelet", "check", "--matrix", "two.json", "--lattice", "z1.json", "--samples", "400", "--seed", "5"];
    let r = run(d.path(), &[&args[..], &["--region", "k1.json", "--order", "1"]].concat());
    assert_eq!(r.code, 0);
    let r = run(d.path(), &[&args[..], &["--region", "k2.json", "--order", "2"]].concat());
    assert_eq!(r.code, 0);
    let r = run(d.path(), &[&args[..], &["--region", "k2.json", "--order", "1"]].concat());
    assert_eq!(r.code, 3);
    assert_eq!(r.json["result"]["translation"]["multiplicities"]["2"], 400);
    let r = run(d.path(), &[&args[..], &["--region", "overlap.json", "--order", "1"]].concat());
    assert_eq!((r.code, error_code(&r)), (1, "invalid_input"));
}

#[test]
fn wavelet_partition_of_order_two() {
    let d = fixtures();
    let r = run(
        d.path(),
        &["wavelet", "partition", "--matrix", "two.json", "--lattice", "z1.json", "--region", "k2.json", "--order", "2", "--samples", "300", "--seed", "1"],
    );
    assert_eq!(r.code, 0);
    let pieces = r.json["result"]["pieces"].as_array().unwrap();
    assert_eq!(pieces.len(), 2);
    assert_eq!(pieces[0]["boxes"][0]["lo"][0], 1.0);
    assert_eq!(pieces[1]["boxes"][0]["lo"][0], -2.0);
    assert_eq!(r.json["result"]["verification"]["pass"], true);
}

#[test]
fn wavelet_dimension_function() {
    let d = fixtures();
    let r = run(d.path(), &["wavelet", "dimfn", "--region", "k2.json", "--point", "0.7"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json["result"]["count"], 2);
    let r = run(d.path(), &["wavelet", "dimfn", "--region", "k2.json"]);
    assert_eq!((r.code, error_code(&r)), (1, "usage"));
}

#[test]
fn wavelet_build_infinite_order() {
    let d = fixtures();
    let r = run(d.path(), &["wavelet", "build-inf", "--matrix", "two.json", "--lattice", "z1.json", "--pieces", "4", "--out", "inf.json"]);
    assert_eq!(r.code, 0);
    let pieces = r.json["result"]["pieces"].as_array().unwrap();
    let translates: Vec<i64> = pieces.iter().map(|p| p["translate"][0].as_i64().unwrap()).collect();
    assert_eq!(translates, vec![4, 12, 28, 60]);
    // The written region reads back for checking.
    let r = run(
        d.path(),
        &["wavelet", "check", "--matrix", "two.json", "--region", "inf.json", "--order", "inf", "--pieces", "4", "--radius", "100", "--samples", "200", "--seed", "1"],
    );
    assert_eq!(r.code, 0, "{}", r.stdout);

    let r = run(d.path(), &["wavelet", "build-inf", "--matrix", "rotation.json"]);
    assert_eq!((r.code, error_code(&r)), (2, "no_wavelet"));
}

#[test]
fn export_grids() {
    let d = fixtures();
    let r = run(d.path(), &["export", "--region", "empty.json", "--dump", "e.csv"]);
    assert_eq!((r.code, r.json["result"]["rows"].as_u64()), (0, Some(0)));
    assert_eq!(std::fs::read_to_string(path(&d, "e.csv")).unwrap().lines().count(), 1);

    // The discrete spiral section has interior, so membership is spot-checkable.
    let r = run(d.path(), &["export", "--mode", "discrete", "--matrix", "spiral.json", "--dump", "sp.csv", "--grid", "60"]);
    assert_eq!((r.code, r.json["result"]["rows"].as_u64()), (0, Some(3600)));
    let a = xsect_core::Matrix::new(&[[1.2, 1.6], [-1.6, 1.2]]);
    let s = CrossSection::build(Mode::Discrete, &a, xsect_core::DEFAULT_TOL).unwrap();
    let csv = std::fs::read_to_string(path(&d, "sp.csv")).unwrap();
    let mut members = 0;
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let p = [f[0].parse::<f64>().unwrap(), f[1].parse::<f64>().unwrap()];
        if f[2] == "exceptional" {
            continue;
        }
        assert_eq!(s.contains(&p).unwrap(), f[2] == "1", "row {line}");
        members += (f[2] == "1") as usize;
    }
    assert!(members > 0);

    let r = run(d.path(), &["export", "--mode", "discrete", "--matrix", "d23.json", "--dump", "x.csv", "--grid", "0"]);
    assert_eq!(r.json["result"]["rows"], 0);
}

#[test]
fn io_and_usage_errors() {
    let d = fixtures();
    let r = run(d.path(), &["classify", "--mode", "discrete", "--matrix", "missing.json"]);
    assert_eq!((r.code, error_code(&r)), (1, "io"));
    std::fs::write(path(&d, "bad.json"), "[[1,2],[3]]").unwrap();
    let r = run(d.path(), &["classify", "--mode", "discrete", "--matrix", "bad.json"]);
    assert_eq!(r.code, 1);
    let r = run(d.path(), &["frobnicate"]);
    assert_eq!((r.code, error_code(&r)), (1, "usage"));
    let r = run(d.path(), &["classify", "--mode", "sideways", "--matrix", "shear.json"]);
    assert_eq!((r.code, error_code(&r)), (1, "usage"));
}

#[test]
fn reports_are_byte_identical_across_runs_and_threads() {
    let d = fixtures();
    let cases: [&[&str]; 3] = [
        &["verify", "--mode", "discrete", "--matrix", "d23.json", "--samples", "3000", "--seed", "11"],
        &["verify", "--mode", "continuous", "--generator", "spiral_generator.json", "--samples", "500", "--seed", "4"],
        &["wavelet", "check", "--matrix", "two.json", "--region", "k2.json", "--order", "2", "--samples", "3000", "--seed", "9"],
    ];
    for args in cases {
        let a = xsect(d.path(), args, Some("1"));
        let b = xsect(d.path(), args, Some("4"));
        let c = xsect(d.path(), args, None);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.stdout, c.stdout, "{args:?}");
    }
}
