use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rusqlite::types::{Value as SqlValue, ValueRef};
use rusqlite::{params_from_iter, Connection, OpenFlags};

use super::schema::{ColumnAttr, ColumnDef, SchemaDef, TableDef};
use super::StoreError;
use crate::sql::to_sqlite_text;

/// Default wall-clock budget for one query.
pub const DEFAULT_QUERY_TIMEOUT: Duration = Duration::from_secs(5);

/// A single-file SQLite database built from a schema and CSV tables.
#[derive(Debug, Clone)]
pub struct ExecDb {
    path: PathBuf,
}

/// A read-only connection. Each worker thread should own one.
pub struct DbConn {
    conn: Connection,
}

/// One result cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Null,
    Int(i64),
    Real(f64),
    Text(String),
    Blob(Vec<u8>),
}

impl Cell {
    fn rank(&self) -> u8 {
        match self {
            Cell::Null => 0,
            Cell::Int(_) | Cell::Real(_) => 1,
            Cell::Text(_) => 2,
            Cell::Blob(_) => 3,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Real(r) => Some(*r),
            _ => None,
        }
    }

    /// Total order used to sort rows before multiset comparison. Integers and
    /// reals share one numeric domain.
    pub fn canonical_cmp(&self, other: &Cell) -> Ordering {
        match (self, other) {
            (Cell::Int(a), Cell::Int(b)) => a.cmp(b),
            (Cell::Text(a), Cell::Text(b)) => a.as_bytes().cmp(b.as_bytes()),
            (Cell::Blob(a), Cell::Blob(b)) => a.cmp(b),
            (a, b) if a.rank() == 1 && b.rank() == 1 => {
                a.as_f64().unwrap().total_cmp(&b.as_f64().unwrap())
            }
            (a, b) => a.rank().cmp(&b.rank()),
        }
    }

    /// Equality with a relative tolerance for numbers; text and blobs are byte-exact.
    pub fn approx_eq(&self, other: &Cell, rel_tol: f64) -> bool {
        match (self, other) {
            (Cell::Int(a), Cell::Int(b)) => a == b,
            (Cell::Null, Cell::Null) => true,
            (Cell::Text(a), Cell::Text(b)) => a == b,
            (Cell::Blob(a), Cell::Blob(b)) => a == b,
            (a, b) => match (a.as_f64(), b.as_f64()) {
                (Some(x), Some(y)) => {
                    x == y || (x - y).abs() <= rel_tol * x.abs().max(y.abs())
                }
                _ => false,
            },
        }
    }

    /// Canonical string form: integral reals print without a fraction.
    pub fn canonical_string(&self) -> Option<String> {
        match self {
            Cell::Null => None,
            Cell::Int(i) => Some(i.to_string()),
            Cell::Real(r) => Some(format!("{r}")),
            Cell::Text(s) => Some(s.clone()),
            Cell::Blob(b) => Some(hex::encode(b)),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.canonical_string() {
            Some(s) => f.write_str(&s),
            None => f.write_str("NULL"),
        }
    }
}

impl From<ValueRef<'_>> for Cell {
    fn from(v: ValueRef<'_>) -> Self {
        match v {
            ValueRef::Null => Cell::Null,
            ValueRef::Integer(i) => Cell::Int(i),
            ValueRef::Real(r) => Cell::Real(r),
            ValueRef::Text(t) => Cell::Text(String::from_utf8_lossy(t).into_owned()),
            ValueRef::Blob(b) => Cell::Blob(b.to_vec()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultSet {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// Why a single query did not produce a result. These are expected outcomes
/// for model predictions, not connection failures.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error("query text does not lex: {0}")]
    Lex(crate::sql::SqlError),
    #[error("execution failed: {0}")]
    Sqlite(String),
    #[error("execution exceeded {0:?}")]
    Timeout(Duration),
}

fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

impl ExecDb {
    /// Open an existing database file.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        if !path.is_file() {
            return Err(StoreError::Db(format!("{}: no such database file", path.display())));
        }
        let db = ExecDb { path: path.to_path_buf() };
        db.connect()?;
        Ok(db)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn connect(&self) -> Result<DbConn, StoreError> {
        let conn = Connection::open_with_flags(
            &self.path,
            OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX,
        )
        .map_err(|e| StoreError::Db(format!("{}: {e}", self.path.display())))?;
        // Fail fast on a file that is not a database.
        conn.query_row("SELECT count(*) FROM sqlite_master", [], |_| Ok(()))
            .map_err(|e| StoreError::Db(format!("{}: {e}", self.path.display())))?;
        Ok(DbConn { conn })
    }
}

impl DbConn {
    /// Run one query. `timeout` of `None` means no limit.
    pub fn execute(&self, sql: &str, timeout: Option<Duration>) -> Result<ResultSet, ExecError> {
        let text = to_sqlite_text(sql).map_err(ExecError::Lex)?;
        match timeout {
            Some(limit) => {
                let deadline = Instant::now() + limit;
                self.conn.progress_handler(1_000, Some(move || Instant::now() > deadline));
            }
            None => self.conn.progress_handler(0, None::<fn() -> bool>),
        }
        let result = self.run(&text);
        self.conn.progress_handler(0, None::<fn() -> bool>);
        result.map_err(|e| match (&e, timeout) {
            (rusqlite::Error::SqliteFailure(f, _), Some(limit))
                if f.code == rusqlite::ErrorCode::OperationInterrupted =>
            {
                ExecError::Timeout(limit)
            }
            _ => ExecError::Sqlite(e.to_string()),
        })
    }

    fn run(&self, text: &str) -> rusqlite::Result<ResultSet> {
        let mut stmt = self.conn.prepare(text)?;
        let columns: Vec<String> = stmt.column_names().into_iter().map(str::to_string).collect();
        let width = columns.len();
        let mut rows = Vec::new();
        let mut cursor = stmt.query([])?;
        while let Some(row) = cursor.next()? {
            let mut cells = Vec::with_capacity(width);
            for i in 0..width {
                cells.push(Cell::from(row.get_ref(i)?));
            }
            rows.push(cells);
        }
        Ok(ResultSet { columns, rows })
    }

    /// Recover the schema from declared column types, in creation order.
    pub fn schema(&self) -> Result<SchemaDef, StoreError> {
        let db = |e: rusqlite::Error| StoreError::Db(e.to_string());
        let mut stmt = self
            .conn
            .prepare("SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY rowid")
            .map_err(db)?;
        let names: Vec<String> = stmt
            .query_map([], |r| r.get(0))
            .map_err(db)?
            .collect::<Result<_, _>>()
            .map_err(db)?;
        let mut tables = Vec::with_capacity(names.len());
        for name in names {
            let mut info = self
                .conn
                .prepare(&format!("PRAGMA table_info({})", quote_ident(&name)))
                .map_err(db)?;
            let columns = info
                .query_map([], |r| {
                    let col: String = r.get(1)?;
                    let decl: String = r.get(2)?;
                    Ok(ColumnDef { name: col, attr: ColumnAttr::from_sqlite_type(&decl) })
                })
                .map_err(db)?
                .collect::<Result<Vec<_>, _>>()
                .map_err(db)?;
            tables.push(TableDef { name, columns });
        }
        SchemaDef::new(tables)
    }

    /// Distinct non-null values of one column, as canonical strings.
    pub fn distinct_values(&self, table: &str, column: &str) -> Result<Vec<String>, StoreError> {
        let sql = format!(
            "SELECT DISTINCT {c} FROM {t} WHERE {c} IS NOT NULL",
            c = quote_ident(column),
            t = quote_ident(table)
        );
        let rs = self.run(&sql).map_err(|e| StoreError::Db(e.to_string()))?;
        Ok(rs.rows.into_iter().filter_map(|r| r[0].canonical_string()).collect())
    }

    pub fn row_count(&self, table: &str) -> Result<usize, StoreError> {
        self.conn
            .query_row(&format!("SELECT COUNT(*) FROM {}", quote_ident(table)), [], |r| r.get::<_, i64>(0))
            .map(|n| n as usize)
            .map_err(|e| StoreError::Db(e.to_string()))
    }
}

fn parse_number(raw: &str) -> Option<SqlValue> {
    let t = raw.trim();
    if let Ok(i) = t.parse::<i64>() {
        return Some(SqlValue::Integer(i));
    }
    match t.parse::<f64>() {
        Ok(f) if f.is_finite() => Some(SqlValue::Real(f)),
        _ => None,
    }
}

/// Build the execution database from one CSV file per schema table.
///
/// CSV headers must name exactly the schema's columns (any order, case
/// ignored). Empty cells become NULL. The file at `out` is replaced
/// atomically.
pub fn build_exec_db(
    schema: &SchemaDef,
    table_files: &BTreeMap<String, PathBuf>,
    out: &Path,
) -> Result<ExecDb, StoreError> {
    schema.validate()?;
    let dir = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::Builder::new()
        .prefix(".medsql-build")
        .suffix(".db")
        .tempfile_in(dir)
        .map_err(|e| StoreError::io(out, e))?;
    let db_err = |e: rusqlite::Error| StoreError::Db(e.to_string());
    {
        let mut conn = Connection::open(tmp.path()).map_err(db_err)?;
        let tx = conn.transaction().map_err(db_err)?;
        for table in &schema.tables {
            let csv_path = table_files
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case(&table.name))
                .map(|(_, v)| v)
                .ok_or_else(|| StoreError::Schema(format!("no CSV given for table {}", table.name)))?;
            let cols: Vec<String> = table
                .columns
                .iter()
                .map(|c| format!("{} {}", quote_ident(&c.name), c.attr.sqlite_type()))
                .collect();
            tx.execute_batch(&format!("CREATE TABLE {} ({});", quote_ident(&table.name), cols.join(", ")))
                .map_err(db_err)?;
            load_csv(&tx, table, csv_path)?;
        }
        tx.commit().map_err(db_err)?;
    }
    tmp.persist(out).map_err(|e| StoreError::io(out, e.error))?;
    ExecDb::open(out)
}

fn load_csv(tx: &rusqlite::Transaction<'_>, table: &TableDef, path: &Path) -> Result<(), StoreError> {
    let csv_err = |row: usize, col: usize, msg: String| StoreError::Csv {
        table: table.name.clone(),
        row,
        col,
        message: msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_err(0, 0, e.to_string()))?;
    let headers = rdr.headers().map_err(|e| csv_err(0, 0, e.to_string()))?.clone();
    if headers.len() != table.columns.len() {
        return Err(csv_err(0, headers.len(), format!(
            "header has {} fields, table has {} columns",
            headers.len(),
            table.columns.len()
        )));
    }
    // order[i] = CSV field index that feeds schema column i
    let mut order = Vec::with_capacity(table.columns.len());
    for c in &table.columns {
        let idx = headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(&c.name))
            .ok_or_else(|| csv_err(0, 0, format!("header is missing column {}", c.name)))?;
        order.push(idx);
    }
    let placeholders = vec!["?"; table.columns.len()].join(", ");
    let mut stmt = tx
        .prepare(&format!("INSERT INTO {} VALUES ({placeholders})", quote_ident(&table.name)))
        .map_err(|e| StoreError::Db(e.to_string()))?;
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_err(row, 0, e.to_string()))?;
        if record.len() != headers.len() {
            return Err(csv_err(row, record.len(), format!(
                "expected {} fields, found {}",
                headers.len(),
                record.len()
            )));
        }
        let mut values = Vec::with_capacity(order.len());
        for (c, &idx) in table.columns.iter().zip(&order) {
            let raw = &record[idx];
            let v = if raw.is_empty() {
                SqlValue::Null
            } else if c.attr == ColumnAttr::Number {
                parse_number(raw).ok_or_else(|| StoreError::Type {
                    table: table.name.clone(),
                    row,
                    column: c.name.clone(),
                    value: raw.to_string(),
                })?
            } else {
                SqlValue::Text(raw.to_string())
            };
            values.push(v);
        }
        stmt.execute(params_from_iter(values)).map_err(|e| StoreError::Db(e.to_string()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn schema() -> SchemaDef {
        SchemaDef::new(vec![TableDef::new(
            "DEMOGRAPHIC",
            &[("NAME", ColumnAttr::Text), ("AGE", ColumnAttr::Number), ("ADMITTIME", ColumnAttr::Datetime)],
        )])
        .unwrap()
    }

    fn build(csv: &str) -> Result<ExecDb, StoreError> {
        let dir = tempfile::tempdir().unwrap().keep();
        let p = dir.join("d.csv");
        fs::write(&p, csv).unwrap();
        build_exec_db(&schema(), &BTreeMap::from([("DEMOGRAPHIC".to_string(), p)]), &dir.join("m.db"))
    }

    #[test]
    fn header_only_gives_empty_table() {
        let db = build("NAME,AGE,ADMITTIME\n").unwrap();
        assert_eq!(db.connect().unwrap().row_count("DEMOGRAPHIC").unwrap(), 0);
    }

    #[test]
    fn non_numeric_in_number_column() {
        match build("NAME,AGE,ADMITTIME\nJo,abc,2100-01-01\n").unwrap_err() {
            StoreError::Type { row: 1, column, value, .. } => {
                assert_eq!(column, "AGE");
                assert_eq!(value, "abc");
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn ragged_row_is_csv_error() {
        assert!(matches!(
            build("NAME,AGE,ADMITTIME\nJo,4\n").unwrap_err(),
            StoreError::Csv { row: 1, col: 2, .. }
        ));
    }

    #[test]
    fn header_order_may_differ_and_schema_is_recoverable() {
        let db = build("AGE,ADMITTIME,NAME\n40,2100-01-01,\"Doe, Jane\"\n").unwrap();
        let conn = db.connect().unwrap();
        assert_eq!(conn.schema().unwrap(), schema());
        let rs = conn.execute("SELECT NAME, AGE FROM DEMOGRAPHIC WHERE AGE > \"30\"", None).unwrap();
        assert_eq!(rs.rows, vec![vec![Cell::Text("Doe, Jane".into()), Cell::Int(40)]]);
    }

    #[test]
    fn double_quoted_literals_and_errors() {
        let db = build("NAME,AGE,ADMITTIME\nJo,4,x\n").unwrap();
        let conn = db.connect().unwrap();
        let rs = conn.execute("SELECT COUNT(*) FROM DEMOGRAPHIC WHERE NAME = \"NAME\"", None).unwrap();
        assert_eq!(rs.rows[0][0], Cell::Int(0));
        assert!(matches!(conn.execute("SELECT NOPE FROM DEMOGRAPHIC", None), Err(ExecError::Sqlite(_))));
        assert!(matches!(conn.execute("DELETE FROM DEMOGRAPHIC", None), Err(ExecError::Sqlite(_))));
    }

    #[test]
    fn slow_query_times_out() {
        let db = build("NAME,AGE,ADMITTIME\nJo,4,x\n").unwrap();
        let conn = db.connect().unwrap();
        let slow = "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT COUNT(*) FROM c";
        let err = conn.execute(slow, Some(Duration::from_millis(50))).unwrap_err();
        assert_eq!(err, ExecError::Timeout(Duration::from_millis(50)));
        // the handler is cleared afterwards
        assert!(conn.execute("SELECT 1", None).is_ok());
    }

    #[test]
    fn numeric_tolerance() {
        assert!(Cell::Real(1.0).approx_eq(&Cell::Int(1), 1e-9));
        assert!(Cell::Real(0.1 + 0.2).approx_eq(&Cell::Real(0.3), 1e-9));
        assert!(!Cell::Real(1.0).approx_eq(&Cell::Real(1.001), 1e-9));
        assert!(!Cell::Text("1".into()).approx_eq(&Cell::Int(1), 1e-9));
        assert_eq!(Cell::Real(65.0).canonical_string().unwrap(), "65");
    }
}
