use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::execdb::ExecDb;
use super::schema::{ColumnAttr, SchemaDef};
use super::{Sample, StoreError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnValues {
    pub attr: ColumnAttr,
    pub values: BTreeSet<String>,
}

/// Distinct stored values per `(table, column)`. Keys are upper-cased.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueLookup {
    columns: BTreeMap<(String, String), ColumnValues>,
}

impl ValueLookup {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert<I, S>(&mut self, table: &str, column: &str, attr: ColumnAttr, values: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let entry = self
            .columns
            .entry((table.to_ascii_uppercase(), column.to_ascii_uppercase()))
            .or_insert_with(|| ColumnValues { attr, values: BTreeSet::new() });
        entry.values.extend(values.into_iter().map(Into::into));
    }

    pub fn get(&self, table: &str, column: &str) -> Option<&ColumnValues> {
        self.columns.get(&(table.to_ascii_uppercase(), column.to_ascii_uppercase()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, String), &ColumnValues)> {
        self.columns.iter()
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Columns used in some gold condition whose value set is missing or empty.
    pub fn uncovered_condition_columns(&self, corpus: &[Sample]) -> Vec<(String, String)> {
        let mut missing = BTreeSet::new();
        for s in corpus {
            let Ok(q) = s.gold_query() else { continue };
            for c in &q.conditions {
                let table = q.owning_table(&c.column).to_string();
                if self.get(&table, &c.column.column).is_none_or(|v| v.values.is_empty()) {
                    missing.insert((table, c.column.column.clone()));
                }
            }
        }
        missing.into_iter().collect()
    }
}

/// Scan every column of every schema table.
pub fn build_value_lookup(db: &ExecDb, schema: &SchemaDef) -> Result<ValueLookup, StoreError> {
    let conn = db.connect()?;
    let mut lookup = ValueLookup::new();
    for t in &schema.tables {
        for c in &t.columns {
            let values = conn.distinct_values(&t.name, &c.name)?;
            lookup.insert(&t.name, &c.name, c.attr, values);
        }
    }
    Ok(lookup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{build_exec_db, TableDef};
    use std::collections::HashSet;
    use std::fs;
    use std::path::PathBuf;

    #[test]
    fn distinct_values_match_direct_scan() {
        let dir = tempfile::tempdir().unwrap();
        let langs = ["ENGL", "PORT", "HAIT", "ENGL", "ENGL", "PORT", "HAIT", "HAIT", "ENGL", "PORT"];
        let mut csv = String::from("SUBJECT_ID,LANGUAGE,AGE\n");
        for (i, l) in langs.iter().enumerate() {
            csv.push_str(&format!("{i},{l},{}\n", 40 + (i % 3)));
        }
        let p = dir.path().join("d.csv");
        fs::write(&p, &csv).unwrap();
        let e = dir.path().join("e.csv");
        fs::write(&e, "X\n").unwrap();
        let schema = SchemaDef::new(vec![
            TableDef::new("DEMOGRAPHIC", &[
                ("SUBJECT_ID", ColumnAttr::Number),
                ("LANGUAGE", ColumnAttr::Text),
                ("AGE", ColumnAttr::Number),
            ]),
            TableDef::new("EMPTY", &[("X", ColumnAttr::Text)]),
        ]).unwrap();
        let files = BTreeMap::from([
            ("DEMOGRAPHIC".to_string(), p.clone()),
            ("EMPTY".to_string(), PathBuf::from(&e)),
        ]);
        let db = build_exec_db(&schema, &files, &dir.path().join("m.db")).unwrap();
        let lookup = build_value_lookup(&db, &schema).unwrap();

        // oracle: scan the CSV text directly
        let direct: HashSet<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
        let got = &lookup.get("demographic", "language").unwrap().values;
        assert_eq!(got.len(), 3);
        assert_eq!(got.iter().map(String::as_str).collect::<HashSet<_>>(), direct);
        assert!(lookup.get("EMPTY", "X").unwrap().values.is_empty());
        let ages: Vec<_> = lookup.get("DEMOGRAPHIC", "AGE").unwrap().values.iter().cloned().collect();
        assert_eq!(ages, ["40", "41", "42"]);
    }
}
