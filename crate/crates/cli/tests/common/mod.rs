#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub const SPECS: [&str; 6] = ["fig1a", "fig1b", "fig3", "fig4", "merge3", "refine2"];

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn specs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("specs")
}

pub fn spec(name: &str) -> String {
    specs_dir()
        .join(format!("{name}.json"))
        .to_string_lossy()
        .into_owned()
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

pub fn run<S: AsRef<str>>(args: &[S]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_chronoinfo"))
        .args(args.iter().map(AsRef::as_ref))
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

/// A command whose stdout is pinned by a golden file.
pub struct Case {
    pub golden: String,
    pub args: Vec<String>,
    pub code: i32,
}

pub fn golden_cases() -> Vec<Case> {
    let mut cases = Vec::new();
    let mut push = |spec_name: &str, command: &str, extra: &[&str], tag: &str| {
        for format in ["text", "json"] {
            let ext = if format == "text" { "txt" } else { "json" };
            let mut args = vec![command.to_string(), spec(spec_name)];
            args.extend(extra.iter().map(|s| s.to_string()));
            args.extend(["--format".to_string(), format.to_string()]);
            cases.push(Case {
                golden: format!("{spec_name}.{command}{tag}.{ext}"),
                args,
                code: if spec_name == "fig1a" { 2 } else { 0 },
            });
        }
    };
    for name in SPECS {
        for command in ["validate", "analyze", "verify-laws"] {
            push(name, command, &[], "");
        }
    }
    push("fig3", "analyze", &["--frame-anchor", "0"], ".anchor0");
    push("fig3", "analyze", &["--frame-anchor", "1"], ".anchor1");
    push("fig4", "analyze", &["--frame-anchor", "1"], ".anchor1");
    push("merge3", "analyze", &["--frame-anchor", "1"], ".anchor1");
    cases
}

/// Runs a case and compares it with its golden file. With `UPDATE_GOLDEN` set
/// the golden file is rewritten instead.
pub fn check_case(case: &Case) -> Result<(), String> {
    let first = run(&case.args);
    let second = run(&case.args);
    if first.code != case.code {
        return Err(format!(
            "{}: exit {} (expected {}): {}",
            case.golden, first.code, case.code, first.stderr
        ));
    }
    if first.stdout != second.stdout || first.code != second.code {
        return Err(format!("{}: repeated runs differ", case.golden));
    }
    let path = golden_dir().join(&case.golden);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &first.stdout).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path)
        .map_err(|e| format!("{}: {e} (run with UPDATE_GOLDEN=1 to create)", path.display()))?;
    if expected != first.stdout {
        return Err(format!(
            "{}: output differs from golden file\n--- expected\n{expected}\n--- actual\n{}",
            case.golden, first.stdout
        ));
    }
    Ok(())
}
