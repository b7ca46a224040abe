//! Prediction files: one record per sample, carrying either a single SQL
//! string or a ranked beam of candidates.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::io::{read_jsonl, render_jsonl, write_atomic, Header, IoError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub sql: String,
    /// Joint log-probability or any other ordering key; larger is better.
    pub score: f64,
}

/// A ranked beam for one sample. Candidates are held in non-increasing score
/// order; equal scores keep their input order.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    id: String,
    candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn new(id: impl Into<String>, mut candidates: Vec<Candidate>) -> Result<Self, String> {
        if candidates.is_empty() {
            return Err("candidate list is empty".into());
        }
        if let Some(c) = candidates.iter().find(|c| c.score.is_nan()) {
            return Err(format!("candidate {:?} has a NaN score", c.sql));
        }
        candidates.sort_by(|a, b| b.score.total_cmp(&a.score));
        Ok(CandidateSet { id: id.into(), candidates })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn top(&self) -> &Candidate {
        &self.candidates[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Single(String),
    Beam(CandidateSet),
}

impl Prediction {
    /// The single prediction, or the top-ranked candidate of a beam.
    pub fn best_sql(&self) -> &str {
        match self {
            Prediction::Single(s) => s,
            Prediction::Beam(b) => &b.top().sql,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub id: String,
    pub prediction: Prediction,
    /// Extra fields (e.g. rerank or recovery provenance), kept when rewriting.
    pub extra: BTreeMap<String, Value>,
}

impl PredictionRecord {
    pub fn single(id: impl Into<String>, sql: impl Into<String>) -> Self {
        PredictionRecord { id: id.into(), prediction: Prediction::Single(sql.into()), extra: BTreeMap::new() }
    }

    pub fn beam(set: CandidateSet) -> Self {
        PredictionRecord { id: set.id.clone(), prediction: Prediction::Beam(set), extra: BTreeMap::new() }
    }
}

#[derive(Serialize, Deserialize)]
struct WireRecord {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sql: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    candidates: Option<Vec<Candidate>>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Debug, thiserror::Error)]
pub enum PredictionError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("prediction record {line}: {message}")]
    Record { line: usize, message: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionFile {
    records: Vec<PredictionRecord>,
    index: HashMap<String, usize>,
}

impl PredictionFile {
    pub fn from_records(records: Vec<PredictionRecord>) -> Result<Self, PredictionError> {
        let mut index = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            if index.insert(r.id.clone(), i).is_some() {
                return Err(PredictionError::Record { line: i + 1, message: format!("duplicate id {}", r.id) });
            }
        }
        Ok(PredictionFile { records, index })
    }

    pub fn load(path: &Path) -> Result<Self, PredictionError> {
        let mut records = Vec::new();
        for rec in read_jsonl(path)? {
            let bad = |message: String| PredictionError::Record { line: rec.line, message };
            let w: WireRecord = serde_json::from_value(rec.value.clone()).map_err(|e| bad(e.to_string()))?;
            let prediction = match (w.sql, w.candidates) {
                (Some(_), Some(_)) => return Err(bad("record has both `sql` and `candidates`".into())),
                (None, None) => return Err(bad("record has neither `sql` nor `candidates`".into())),
                (Some(sql), None) if sql.trim().is_empty() => return Err(bad("empty sql".into())),
                (Some(sql), None) => Prediction::Single(sql),
                (None, Some(c)) => Prediction::Beam(CandidateSet::new(w.id.clone(), c).map_err(bad)?),
            };
            records.push(PredictionRecord { id: w.id, prediction, extra: w.extra });
        }
        Self::from_records(records).map_err(|e| match e {
            PredictionError::Record { message, .. } => PredictionError::Record { line: 0, message },
            e => e,
        })
    }

    pub fn get(&self, id: &str) -> Option<&PredictionRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn render(&self, seed: Option<u64>) -> String {
        let wire: Vec<WireRecord> = self
            .records
            .iter()
            .map(|r| {
                let (sql, candidates) = match &r.prediction {
                    Prediction::Single(s) => (Some(s.clone()), None),
                    Prediction::Beam(b) => (None, Some(b.candidates.clone())),
                };
                WireRecord { id: r.id.clone(), sql, candidates, extra: r.extra.clone() }
            })
            .collect();
        render_jsonl(Some(&Header::new("predictions", seed)), &wire)
    }

    pub fn save(&self, path: &Path, seed: Option<u64>) -> Result<(), IoError> {
        write_atomic(path, self.render(seed).as_bytes())
    }
}
