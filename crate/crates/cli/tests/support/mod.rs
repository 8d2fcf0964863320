//! Helpers shared by the CLI integration and acceptance tests.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

#[allow(dead_code)]
pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

static SCRATCH_COUNTER: AtomicUsize = AtomicUsize::new(0);

/// A fresh scratch directory per call, under the target-adjacent temp dir.
#[allow(dead_code)]
pub fn scratch_dir(label: &str) -> PathBuf {
    let n = SCRATCH_COUNTER.fetch_add(1, Ordering::SeqCst);
    let dir = std::env::temp_dir().join(format!("finalg-tests-{}-{label}-{n}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

pub struct RunOutput {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// Run the built binary with the given arguments.
pub fn run_finalg(args: &[&str]) -> RunOutput {
    let out = Command::new(env!("CARGO_BIN_EXE_finalg"))
        .args(args)
        .output()
        .expect("binary runs");
    RunOutput {
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        code: out.status.code().unwrap_or(-1),
    }
}

/// Drop the timing section of a rendered report.
#[allow(dead_code)]
pub fn strip_timing(report: &str) -> &str {
    match report.find("--- timing ---") {
        Some(pos) => &report[..pos],
        None => report,
    }
}

#[allow(dead_code)]
pub fn write_doc(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).expect("write doc");
    path
}
