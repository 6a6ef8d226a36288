#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn rankloss(args: &[&str]) -> Output {
    rankloss_with_env(args, &[])
}

pub fn rankloss_with_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rankloss"));
    cmd.args(args).env_remove("RANKLOSS_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Manifest text with the wall-clock field removed.
pub fn manifest_without_duration(path: &Path) -> String {
    let mut v = read_json(path);
    v.as_object_mut().unwrap().remove("duration_seconds");
    serde_json::to_string_pretty(&v).unwrap()
}
