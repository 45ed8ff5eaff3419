#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(rel: &str) -> String {
    fixtures().join(rel).display().to_string()
}

pub fn aas<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aas"))
        .args(args)
        .env_remove("AAS_BACKEND_URL")
        .env_remove("RUST_LOG")
        .output()
        .expect("run aas")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// `aas build` over the mini vocabulary with its bundled settings.
pub fn build_mini(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "--config".to_string(),
        fixture("mini/build.toml"),
        "build".into(),
        "--dataset".into(),
        fixture("mini/questions.json"),
        "--out".into(),
        out.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    aas(&args)
}
