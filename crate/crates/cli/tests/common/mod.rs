#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

pub fn fixture() -> PathBuf {
    golden_dir().join("sample.csv")
}

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_persuasion"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

/// Compares `actual` with the golden file `name`. Setting `UPDATE_GOLDEN=1`
/// rewrites the file instead.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected =
        fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!(
            "{name} differs from golden output\n--- expected\n{expected}\n--- actual\n{actual}"
        ))
    }
}

/// A golden case: file name, arguments, expected exit code.
pub struct Case {
    pub golden: &'static str,
    pub args: Vec<String>,
    pub code: i32,
}

fn case(golden: &'static str, args: &[&str], code: i32) -> Case {
    Case {
        golden,
        args: args.iter().map(|s| s.to_string()).collect(),
        code,
    }
}

pub fn cases() -> Vec<Case> {
    let input = fixture().display().to_string();
    let input = input.as_str();
    vec![
        case(
            "bounds_apr.txt",
            &["bounds", "--cells", "0.30,0.10,0.20,0.40", "--mtr", "--mts", "--estimands", "apr"],
            0,
        ),
        case(
            "bounds_equal_cells.txt",
            &["bounds", "--cells", "0.25,0.25,0.25,0.25", "--mtr", "--mts"],
            0,
        ),
        case(
            "bounds_no_assumptions.txt",
            &["bounds", "--cells", "0.30,0.10,0.20,0.40", "--estimands", "apr"],
            0,
        ),
        case(
            "bounds_mts.json",
            &["bounds", "--p0", "0.25", "--p1", "0.6666666666666666", "--q1", "0.6", "--mts", "--format", "json"],
            0,
        ),
        case(
            "bounds_mtr_mts_oracle.txt",
            &["bounds", "--cells", "0.30,0.10,0.20,0.40", "--mtr", "--mts", "--oracle"],
            0,
        ),
        case(
            "estimate.txt",
            &["estimate", "--input", input, "--cluster", "cluster"],
            0,
        ),
        case(
            "estimate.json",
            &["estimate", "--input", input, "--cluster", "cluster", "--format", "json"],
            0,
        ),
        case(
            "estimate_mts.csv",
            &["estimate", "--input", input, "--cluster", "cluster", "--assume", "mts", "--format", "csv"],
            0,
        ),
        case(
            "estimate_under50.json",
            &["estimate", "--input", input, "--cluster", "cluster", "--filter", "age_band=under50", "--format", "json"],
            0,
        ),
        case("advise_selection.txt", &["advise", "--selection", "--mts"], 0),
        case("advise_exogenous.txt", &["advise", "--exogenous", "--iv"], 0),
        case("advise_mts.txt", &["advise", "--mts"], 0),
        case("advise_none.txt", &["advise"], 0),
    ]
}

/// Runs every golden case and returns the failures.
pub fn golden_failures() -> Vec<String> {
    let mut failures = Vec::new();
    for c in cases() {
        let args: Vec<&str> = c.args.iter().map(String::as_str).collect();
        let out = run(&args);
        if out.status.code() != Some(c.code) {
            failures.push(format!(
                "{}: exit {:?}, expected {}; stderr: {}",
                c.golden,
                out.status.code(),
                c.code,
                String::from_utf8_lossy(&out.stderr)
            ));
            continue;
        }
        if let Err(e) = check_golden(c.golden, &stdout(&out)) {
            failures.push(e);
        }
    }
    failures
}

/// Arguments paired with the exit code they must produce.
pub fn exit_code_cases() -> Vec<(Vec<String>, i32)> {
    let dir = std::env::temp_dir().join(format!("persuasion-exit-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let one_arm = dir.join("one_arm.csv");
    fs::write(&one_arm, "y,d\n1,1\n0,1\n1,1\n").unwrap();
    let one_cluster = dir.join("one_cluster.csv");
    fs::write(&one_cluster, "y,d,g\n1,1,a\n0,1,a\n1,0,a\n0,0,a\n").unwrap();
    let owned = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let input = fixture().display().to_string();
    vec![
        (owned(&["--help"]), 0),
        (owned(&["advise", "--help"]), 0),
        (owned(&["advise", "--mts"]), 0),
        (owned(&["frobnicate"]), 1),
        (owned(&["bounds"]), 1),
        (owned(&["bounds", "--cells", "0.3,0.3"]), 1),
        (owned(&["bounds", "--cells", "0.5,0.5,0.5,0.5"]), 1),
        (owned(&["bounds", "--cells", "0.3,0.1,0.2,0.4", "--estimands", "xyz"]), 1),
        (owned(&["bounds", "--cells", "0.20,0.30,0.30,0.20", "--mtr", "--mts"]), 2),
        (owned(&["estimate", "--input", "/nonexistent/file.csv"]), 1),
        (owned(&["estimate", "--input", one_arm.to_str().unwrap()]), 2),
        (owned(&["estimate", "--input", one_cluster.to_str().unwrap(), "--cluster", "g"]), 2),
        (owned(&["estimate", "--input", &input, "--filter", "nope=1"]), 1),
        (owned(&["estimate", "--input", &input, "--assume", "sometimes"]), 1),
        (owned(&["coverage", "--reps", "5"]), 1),
    ]
}

pub fn exit_code_failures() -> Vec<String> {
    exit_code_cases()
        .into_iter()
        .filter_map(|(args, code)| {
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            let got = run(&refs).status.code();
            (got != Some(code)).then(|| format!("{args:?}: exit {got:?}, expected {code}"))
        })
        .collect()
}
