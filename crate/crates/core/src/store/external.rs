use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::schema::{ColumnAttr, ColumnDef, SchemaDef, TableDef};
use super::{RecordCause, Sample, StoreError};
use crate::sql::parse_sql;

/// An out-of-domain corpus in the Spider layout: a JSON array of
/// `{db_id, question, query}` examples plus a `tables.json` array describing
/// each database.
#[derive(Debug, Clone)]
pub struct ExternalCorpus {
    pub name: String,
    pub examples: Vec<ExternalExample>,
    pub schemas: BTreeMap<String, SchemaDef>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ExternalExample {
    pub db_id: String,
    pub question: String,
    pub query: String,
}

#[derive(Debug, Deserialize)]
struct SpiderTables {
    db_id: String,
    table_names_original: Vec<String>,
    column_names_original: Vec<(i64, String)>,
    column_types: Vec<String>,
}

fn spider_attr(t: &str) -> ColumnAttr {
    match t {
        "number" => ColumnAttr::Number,
        "time" => ColumnAttr::Datetime,
        _ => ColumnAttr::Text,
    }
}

impl ExternalCorpus {
    pub fn load_spider(name: &str, examples: &Path, tables: &Path) -> Result<Self, StoreError> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| StoreError::io(p, e));
        let examples_v: Vec<ExternalExample> = serde_json::from_str(&read(examples)?)
            .map_err(|e| StoreError::Record { line: 0, cause: RecordCause::Json(e.to_string()) })?;
        let tables_v: Vec<SpiderTables> = serde_json::from_str(&read(tables)?)
            .map_err(|e| StoreError::Schema(format!("{}: {e}", tables.display())))?;
        let mut schemas = BTreeMap::new();
        for t in tables_v {
            let mut defs: Vec<TableDef> = t
                .table_names_original
                .iter()
                .map(|n| TableDef { name: n.clone(), columns: Vec::new() })
                .collect();
            for ((idx, col), ty) in t.column_names_original.iter().zip(&t.column_types) {
                if let Some(def) = usize::try_from(*idx).ok().and_then(|i| defs.get_mut(i)) {
                    def.columns.push(ColumnDef { name: col.clone(), attr: spider_attr(ty) });
                }
            }
            schemas.insert(t.db_id, SchemaDef::new(defs)?);
        }
        Ok(ExternalCorpus { name: name.to_string(), examples: examples_v, schemas })
    }
}

#[derive(Debug)]
pub struct MergeOutcome {
    pub samples: Vec<Sample>,
    /// Schemas of the external databases, keyed by `db_id`.
    pub schemas: BTreeMap<String, SchemaDef>,
    /// 1-based positions of skipped external records and why (lenient mode only).
    pub skipped: Vec<(usize, RecordCause)>,
}

/// Append an external corpus after the primary one.
///
/// External ids are `<name>:<index>`; the call fails if a primary id already
/// uses that prefix, so the two id sets are disjoint by construction. Records
/// outside the dialect or naming an unknown database are errors, or are
/// skipped and counted when `lenient` is set.
pub fn merge_out_of_domain(
    primary: &[Sample],
    external: &ExternalCorpus,
    lenient: bool,
) -> Result<MergeOutcome, StoreError> {
    let prefix = format!("{}:", external.name);
    if let Some(s) = primary.iter().find(|s| s.id.starts_with(&prefix)) {
        return Err(StoreError::IdCollision(s.id.clone()));
    }
    let mut samples = primary.to_vec();
    let mut skipped = Vec::new();
    for (i, ex) in external.examples.iter().enumerate() {
        let converted = if !external.schemas.contains_key(&ex.db_id) {
            Err(RecordCause::Invalid(format!("unknown db_id {}", ex.db_id)))
        } else if ex.question.trim().is_empty() {
            Err(RecordCause::Invalid("empty question".into()))
        } else {
            parse_sql(&ex.query).map_err(RecordCause::Sql)
        };
        match converted {
            Ok(_) => {
                let mut s = Sample::new(format!("{prefix}{i:06}"), ex.question.trim(), ex.query.trim());
                s.db_id = Some(ex.db_id.clone());
                samples.push(s);
            }
            Err(cause) if lenient => skipped.push((i + 1, cause)),
            Err(cause) => return Err(StoreError::Record { line: i + 1, cause }),
        }
    }
    Ok(MergeOutcome { samples, schemas: external.schemas.clone(), skipped })
}
