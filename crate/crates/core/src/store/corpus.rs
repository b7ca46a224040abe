use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{RecordCause, SchemaDef, StoreError};
use crate::io::{read_jsonl, render_jsonl, Header};
use crate::sql::{parse_sql, serialize_sql, SqlQuery};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SyntheticParaphrase {
    pub text: String,
    /// Language the question was round-tripped through.
    pub pivot: String,
}

/// One benchmark record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    #[serde(rename = "question_template")]
    pub template_question: String,
    #[serde(rename = "question_paraphrase", default, skip_serializing_if = "Option::is_none")]
    pub paraphrase_question: Option<String>,
    #[serde(rename = "synthetic", default)]
    pub synthetic_paraphrases: Vec<SyntheticParaphrase>,
    #[serde(rename = "sql")]
    pub gold_sql: String,
    /// Database the sample belongs to, for corpora mixing several schemas.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub db_id: Option<String>,
    /// Fields this crate does not know about, kept for round-tripping.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl Sample {
    pub fn new(id: impl Into<String>, question: impl Into<String>, sql: impl Into<String>) -> Self {
        Sample {
            id: id.into(),
            template_question: question.into(),
            paraphrase_question: None,
            synthetic_paraphrases: Vec::new(),
            gold_sql: sql.into(),
            db_id: None,
            extra: BTreeMap::new(),
        }
    }

    pub fn gold_query(&self) -> Result<SqlQuery, crate::sql::SqlError> {
        parse_sql(&self.gold_sql)
    }
}

fn check_sample(s: &Sample) -> Result<(), RecordCause> {
    if s.id.is_empty() {
        return Err(RecordCause::Invalid("empty id".into()));
    }
    if s.template_question.trim().is_empty() {
        return Err(RecordCause::Invalid("empty question_template".into()));
    }
    parse_sql(&s.gold_sql).map_err(RecordCause::Sql)?;
    Ok(())
}

/// Load a corpus file, validating every record.
pub fn load_corpus(path: &Path) -> Result<Vec<Sample>, StoreError> {
    let records = read_jsonl(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for rec in records {
        let sample: Sample = serde_json::from_value(rec.value)
            .map_err(|e| StoreError::Record { line: rec.line, cause: RecordCause::Json(e.to_string()) })?;
        check_sample(&sample).map_err(|cause| StoreError::Record { line: rec.line, cause })?;
        if !seen.insert(sample.id.clone()) {
            return Err(StoreError::Record {
                line: rec.line,
                cause: RecordCause::DuplicateId(sample.id),
            });
        }
        out.push(sample);
    }
    Ok(out)
}

pub fn render_corpus(samples: &[Sample], seed: Option<u64>) -> String {
    render_jsonl(Some(&Header::new("corpus", seed)), samples)
}

pub fn save_corpus(path: &Path, samples: &[Sample], seed: Option<u64>) -> Result<(), StoreError> {
    crate::io::write_atomic(path, render_corpus(samples, seed).as_bytes())?;
    Ok(())
}

/// Alternative spellings of table names seen across releases.
const TABLE_ALIASES: &[(&str, &str)] = &[("DIAGNOSIS", "DIAGNOSES")];

fn canonical_table(name: &str, schema: &SchemaDef) -> Option<String> {
    if schema.table(name).is_some() {
        return None;
    }
    TABLE_ALIASES.iter().find_map(|(a, b)| {
        let other = if name.eq_ignore_ascii_case(a) {
            b
        } else if name.eq_ignore_ascii_case(b) {
            a
        } else {
            return None;
        };
        schema.table(other).map(|t| t.name.to_ascii_uppercase())
    })
}

/// Rename tables the schema knows under a different spelling. Returns `None`
/// when nothing had to change, so the original text can be kept verbatim.
pub fn normalize_table_names(q: &SqlQuery, schema: &SchemaDef) -> Option<SqlQuery> {
    let renames: BTreeMap<String, String> = q
        .tables()
        .filter_map(|t| canonical_table(t, schema).map(|c| (t.to_string(), c)))
        .collect();
    if renames.is_empty() {
        return None;
    }
    let fix = |t: &mut String| {
        if let Some(n) = renames.get(t.as_str()) {
            *t = n.clone();
        }
    };
    let mut q = q.clone();
    fix(&mut q.main_table);
    for j in &mut q.joins {
        fix(&mut j.table);
        j.left.table.as_mut().map(fix);
        j.right.table.as_mut().map(fix);
    }
    for item in &mut q.select {
        if let crate::sql::SelectTarget::Column(c) = &mut item.target {
            c.table.as_mut().map(fix);
        }
    }
    for c in &mut q.conditions {
        c.column.table.as_mut().map(fix);
    }
    Some(q)
}

fn pick_str<'a>(v: &'a Value, keys: &[&str]) -> Option<&'a str> {
    keys.iter().find_map(|k| v.get(*k).and_then(Value::as_str))
}

/// Import the original release layout: one JSON object per line carrying the
/// question (`question_refine` or `question`) and `sql`. The optional
/// paraphrase file is paired line by line. Ids come from `id`/`key` when
/// present, otherwise from the file stem and line number.
pub fn import_release(
    template_path: &Path,
    paraphrase_path: Option<&Path>,
    schema: &SchemaDef,
) -> Result<Vec<Sample>, StoreError> {
    let templates = read_jsonl(template_path)?;
    let paraphrases = match paraphrase_path {
        Some(p) => Some(read_jsonl(p)?),
        None => None,
    };
    if let Some(p) = &paraphrases {
        if p.len() != templates.len() {
            return Err(StoreError::Schema(format!(
                "paraphrase file has {} records, template file has {}",
                p.len(),
                templates.len()
            )));
        }
    }
    let stem = template_path.file_stem().and_then(|s| s.to_str()).unwrap_or("sample");
    let mut out = Vec::with_capacity(templates.len());
    let mut seen = HashSet::new();
    for (i, rec) in templates.iter().enumerate() {
        let bad = |msg: &str| StoreError::Record { line: rec.line, cause: RecordCause::Invalid(msg.into()) };
        let question = pick_str(&rec.value, &["question_refine", "question", "question_template"])
            .ok_or_else(|| bad("missing question"))?;
        let sql = pick_str(&rec.value, &["sql", "query"]).ok_or_else(|| bad("missing sql"))?;
        let id = match rec.value.get("id").or_else(|| rec.value.get("key")) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => format!("{stem}-{:05}", i + 1),
        };
        let q = parse_sql(sql).map_err(|e| StoreError::Record { line: rec.line, cause: RecordCause::Sql(e) })?;
        let gold_sql = match normalize_table_names(&q, schema) {
            Some(fixed) => serialize_sql(&fixed),
            None => sql.to_string(),
        };
        let mut sample = Sample::new(id, question, gold_sql);
        if let Some(p) = &paraphrases {
            sample.paraphrase_question =
                pick_str(&p[i].value, &["question_refine", "question", "question_paraphrase"]).map(str::to_string);
        }
        if !seen.insert(sample.id.clone()) {
            return Err(StoreError::Record { line: rec.line, cause: RecordCause::DuplicateId(sample.id) });
        }
        out.push(sample);
    }
    Ok(out)
}
