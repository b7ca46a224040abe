#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

pub const BIN: &str = env!("CARGO_BIN_EXE_medsql");

/// Run the binary with `args`, without inheriting a translation endpoint.
pub fn medsql(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("MEDSQL_TRANSLATE_URL").output().expect("binary runs")
}

pub fn medsql_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("MEDSQL_TRANSLATE_URL");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// Data lines of a JSONL file, skipping the header.
pub fn jsonl(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .expect("readable")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str::<Value>(l).expect("json line"))
        .filter(|v| v.get("format_version").is_none())
        .collect()
}

pub fn write_lines(path: &Path, values: &[Value]) {
    let text: String = values.iter().map(|v| v.to_string() + "\n").collect();
    std::fs::write(path, text).expect("writable");
}

/// One single-query prediction per `(id, sql)`.
pub fn write_single_preds(path: &Path, pairs: &[(String, String)]) {
    let lines: Vec<Value> = pairs.iter().map(|(id, sql)| json!({ "id": id, "sql": sql })).collect();
    write_lines(path, &lines);
}
