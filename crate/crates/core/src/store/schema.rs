use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::StoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnAttr {
    Text,
    Number,
    Datetime,
}

impl ColumnAttr {
    pub fn word(self) -> &'static str {
        match self {
            ColumnAttr::Text => "text",
            ColumnAttr::Number => "number",
            ColumnAttr::Datetime => "datetime",
        }
    }

    /// Declared SQLite column type. Datetimes keep TEXT affinity and compare lexically.
    pub(crate) fn sqlite_type(self) -> &'static str {
        match self {
            ColumnAttr::Text => "TEXT",
            ColumnAttr::Number => "NUMERIC",
            ColumnAttr::Datetime => "DATETIME_TEXT",
        }
    }

    pub(crate) fn from_sqlite_type(decl: &str) -> Self {
        let up = decl.to_ascii_uppercase();
        if up == "DATETIME_TEXT" {
            ColumnAttr::Datetime
        } else if up.contains("CHAR") || up.contains("CLOB") || up.contains("TEXT") || up.is_empty() {
            ColumnAttr::Text
        } else {
            ColumnAttr::Number
        }
    }
}

impl fmt::Display for ColumnAttr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.word())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    pub attr: ColumnAttr,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TableDef {
    pub name: String,
    pub columns: Vec<ColumnDef>,
}

impl TableDef {
    pub fn new(name: &str, columns: &[(&str, ColumnAttr)]) -> Self {
        TableDef {
            name: name.to_string(),
            columns: columns
                .iter()
                .map(|(n, a)| ColumnDef { name: n.to_string(), attr: *a })
                .collect(),
        }
    }

    pub fn column(&self, name: &str) -> Option<&ColumnDef> {
        self.columns.iter().find(|c| c.name.eq_ignore_ascii_case(name))
    }
}

/// Tables, columns and column types of one database, in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchemaDef {
    pub tables: Vec<TableDef>,
}

impl SchemaDef {
    pub fn new(tables: Vec<TableDef>) -> Result<Self, StoreError> {
        let s = SchemaDef { tables };
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let text = std::fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
        let s: SchemaDef = serde_json::from_str(&text)
            .map_err(|e| StoreError::Schema(format!("{}: {e}", path.display())))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes") + "\n"
    }

    /// Names are compared case-insensitively, matching SQL identifier rules.
    pub fn validate(&self) -> Result<(), StoreError> {
        let mut tables = BTreeSet::new();
        for t in &self.tables {
            if t.name.trim().is_empty() {
                return Err(StoreError::Schema("empty table name".into()));
            }
            if !tables.insert(t.name.to_ascii_uppercase()) {
                return Err(StoreError::Schema(format!("duplicate table {}", t.name)));
            }
            let mut cols = BTreeSet::new();
            for c in &t.columns {
                if c.name.trim().is_empty() {
                    return Err(StoreError::Schema(format!("empty column name in {}", t.name)));
                }
                if !cols.insert(c.name.to_ascii_uppercase()) {
                    return Err(StoreError::Schema(format!("duplicate column {}.{}", t.name, c.name)));
                }
            }
        }
        Ok(())
    }

    pub fn table(&self, name: &str) -> Option<&TableDef> {
        self.tables.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn column_attr(&self, table: &str, column: &str) -> Option<ColumnAttr> {
        self.table(table)?.column(column).map(|c| c.attr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_names_rejected() {
        let t = TableDef::new("A", &[("X", ColumnAttr::Text)]);
        assert!(SchemaDef::new(vec![t.clone(), t.clone()]).is_err());
        let dup = TableDef::new("A", &[("X", ColumnAttr::Text), ("x", ColumnAttr::Number)]);
        assert!(SchemaDef::new(vec![dup]).is_err());
        assert!(SchemaDef::new(vec![t]).is_ok());
    }

    #[test]
    fn json_shape() {
        let s = SchemaDef::new(vec![TableDef::new("D", &[("AGE", ColumnAttr::Number)])]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v["tables"][0]["columns"][0]["attr"], "number");
    }

    #[test]
    fn sqlite_types_round_trip() {
        for a in [ColumnAttr::Text, ColumnAttr::Number, ColumnAttr::Datetime] {
            assert_eq!(ColumnAttr::from_sqlite_type(a.sqlite_type()), a);
        }
    }
}
