//! Model inputs: a flat rendering of the schema followed by the question.
//!
//! ```
//! use medsql::linearize::{build_model_input, linearize_schema};
//! use medsql::store::{ColumnAttr, SchemaDef, TableDef};
//!
//! let schema = SchemaDef::new(vec![
//!     TableDef::new("DEMOGRAPHIC", &[("NAME", ColumnAttr::Text), ("AGE", ColumnAttr::Number)]),
//!     TableDef::new("DIAGNOSIS", &[("ICD_CODE", ColumnAttr::Text)]),
//! ])
//! .unwrap();
//! assert_eq!(linearize_schema(&schema), "* DEMOGRAPHIC NAME text AGE number DIAGNOSIS ICD_CODE text");
//! let input = build_model_input(&schema, "What is the age of John Doe?").unwrap();
//! assert!(input.text.ends_with("[SEP] What is the age of John Doe?"));
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::io::{render_jsonl, write_atomic, Header, IoError};
use crate::split::{Split, SplitAssignment};
use crate::store::{Sample, SchemaDef};

pub const DEFAULT_SEPARATOR: &str = "[SEP]";
/// Stands for "all columns" at the head of every linearized schema.
pub const ALL_COLUMNS: &str = "*";

pub fn linearize_schema(schema: &SchemaDef) -> String {
    let mut parts = vec![ALL_COLUMNS];
    for t in &schema.tables {
        parts.push(&t.name);
        for c in &t.columns {
            parts.push(&c.name);
            parts.push(c.attr.word());
        }
    }
    parts.join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelInput {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinearizeError {
    #[error("sample {id}: question is empty")]
    EmptyQuestion { id: String },
    #[error("question contains the reserved separator {separator:?}")]
    ReservedToken { separator: String },
    #[error("sample {0} has no split assignment")]
    Unassigned(String),
    #[error("sample {id} names database {db_id:?}, which has no schema")]
    UnknownDatabase { id: String, db_id: String },
}

/// The primary schema plus any external ones, keyed by database id. Samples
/// without a `db_id` use the primary schema.
#[derive(Debug, Clone)]
pub struct SchemaSet {
    primary: String,
    external: BTreeMap<String, String>,
}

impl SchemaSet {
    pub fn new(primary: &SchemaDef) -> Self {
        SchemaSet { primary: linearize_schema(primary), external: BTreeMap::new() }
    }

    pub fn with_external(mut self, schemas: &BTreeMap<String, SchemaDef>) -> Self {
        self.external.extend(schemas.iter().map(|(k, v)| (k.clone(), linearize_schema(v))));
        self
    }

    /// Linearized schema for `sample`.
    pub fn linearized_for(&self, sample: &Sample) -> Result<&str, LinearizeError> {
        match &sample.db_id {
            None => Ok(&self.primary),
            Some(db) => self.external.get(db).map(String::as_str).ok_or_else(|| LinearizeError::UnknownDatabase {
                id: sample.id.clone(),
                db_id: db.clone(),
            }),
        }
    }
}

pub fn build_model_input(schema: &SchemaDef, question: &str) -> Result<ModelInput, LinearizeError> {
    build_model_input_with(schema, question, DEFAULT_SEPARATOR)
}

/// As [`build_model_input`], with a model-specific separator token.
pub fn build_model_input_with(schema: &SchemaDef, question: &str, separator: &str) -> Result<ModelInput, LinearizeError> {
    if question.trim().is_empty() {
        return Err(LinearizeError::EmptyQuestion { id: String::new() });
    }
    if question.contains(separator) {
        return Err(LinearizeError::ReservedToken { separator: separator.to_string() });
    }
    Ok(ModelInput { text: format!("{} {separator} {question}", linearize_schema(schema)) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionSource {
    Template,
    Paraphrase,
    Synthetic,
    All,
}

impl FromStr for QuestionSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "template" => Ok(QuestionSource::Template),
            "paraphrase" => Ok(QuestionSource::Paraphrase),
            "synthetic" => Ok(QuestionSource::Synthetic),
            "all" => Ok(QuestionSource::All),
            other => Err(format!("unknown question source {other:?} (expected template, paraphrase, synthetic or all)")),
        }
    }
}

impl fmt::Display for QuestionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuestionSource::Template => "template",
            QuestionSource::Paraphrase => "paraphrase",
            QuestionSource::Synthetic => "synthetic",
            QuestionSource::All => "all",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub input: String,
    pub target: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VariantCounts {
    pub template: usize,
    pub paraphrase: usize,
    pub synthetic: usize,
    /// Samples skipped because a paraphrase was requested but absent.
    pub missing_paraphrase: usize,
}

impl VariantCounts {
    pub fn total(&self) -> usize {
        self.template + self.paraphrase + self.synthetic
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExport {
    pub records: Vec<TrainingRecord>,
    pub counts: VariantCounts,
}

impl TrainingExport {
    pub fn render(&self, seed: Option<u64>) -> String {
        render_jsonl(Some(&Header::new("training", seed)), &self.records)
    }

    pub fn save(&self, path: &Path, seed: Option<u64>) -> Result<(), IoError> {
        write_atomic(path, self.render(seed).as_bytes())
    }
}

/// Pair every selected question variant of the `split` samples with its gold
/// query. Records follow corpus order; within a sample the order is
/// template, paraphrase, then synthetic paraphrases as stored.
pub fn export_training(
    corpus: &[Sample],
    assignment: &SplitAssignment,
    split: Split,
    schemas: &SchemaSet,
    source: QuestionSource,
    separator: &str,
) -> Result<TrainingExport, LinearizeError> {
    let mut out = TrainingExport { records: Vec::new(), counts: VariantCounts::default() };
    for s in corpus {
        match assignment.get(&s.id) {
            None => return Err(LinearizeError::Unassigned(s.id.clone())),
            Some(sp) if sp != split => continue,
            Some(_) => {}
        }
        let schema_text = schemas.linearized_for(s)?;
        let mut push = |q: &str| -> Result<(), LinearizeError> {
            if q.trim().is_empty() {
                return Err(LinearizeError::EmptyQuestion { id: s.id.clone() });
            }
            if q.contains(separator) {
                return Err(LinearizeError::ReservedToken { separator: separator.to_string() });
            }
            out.records.push(TrainingRecord { input: format!("{schema_text} {separator} {q}"), target: s.gold_sql.clone() });
            Ok(())
        };
        let all = source == QuestionSource::All;
        if all || source == QuestionSource::Template {
            push(&s.template_question)?;
            out.counts.template += 1;
        }
        if all || source == QuestionSource::Paraphrase {
            match &s.paraphrase_question {
                Some(p) => {
                    push(p)?;
                    out.counts.paraphrase += 1;
                }
                None if !all => out.counts.missing_paraphrase += 1,
                None => {}
            }
        }
        if all || source == QuestionSource::Synthetic {
            for p in &s.synthetic_paraphrases {
                push(&p.text)?;
                out.counts.synthetic += 1;
            }
        }
    }
    Ok(out)
}
