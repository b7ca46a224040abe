//! Line-delimited JSON files and atomic output.
//!
//! Every structured file this crate writes may start with a header record
//! `{"format_version": 1, "kind": ..., "seed": ...}`. Readers skip it, so files
//! can be piped between subcommands unchanged.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: malformed JSON: {message}")]
    Json { path: PathBuf, line: usize, message: String },
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Header {
    pub fn new(kind: &str, seed: Option<u64>) -> Self {
        Header { format_version: FORMAT_VERSION, kind: kind.to_string(), seed }
    }
}

fn is_header(v: &Value) -> bool {
    v.get("format_version").is_some() && v.get("id").is_none()
}

/// One parsed record together with its 1-based physical line number.
#[derive(Debug, Clone)]
pub struct Record {
    pub line: usize,
    pub value: Value,
}

/// Read every non-blank, non-header line as a JSON value.
pub fn read_jsonl(path: &Path) -> Result<Vec<Record>, IoError> {
    let file = fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| IoError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| IoError::Json {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if out.is_empty() && is_header(&value) {
            continue;
        }
        out.push(Record { line: i + 1, value });
    }
    Ok(out)
}

/// Render a header plus records as JSON lines.
pub fn render_jsonl<T: Serialize>(header: Option<&Header>, records: &[T]) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&serde_json::to_string(h).expect("header serializes"));
        out.push('\n');
    }
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Write via a sibling temp file and rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| IoError::io(path, e))?;
    tmp.write_all(contents).map_err(|e| IoError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| IoError::io(path, e))?;
    tmp.persist(path).map_err(|e| IoError::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_skipped_and_lines_counted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.jsonl");
        let body = render_jsonl(Some(&Header::new("t", Some(3))), &[serde_json::json!({"id": "a"})]);
        write_atomic(&p, format!("{body}\n{{\"id\":\"b\"}}\n").as_bytes()).unwrap();
        let recs = read_jsonl(&p).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].line, 2);
        assert_eq!(recs[1].line, 4);
    }

    #[test]
    fn bad_json_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.jsonl");
        fs::write(&p, "{\"id\":1}\n{oops\n").unwrap();
        assert!(matches!(read_jsonl(&p), Err(IoError::Json { line: 2, .. })));
    }
}
