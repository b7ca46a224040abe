//! Corpora, schemas, the execution database and value look-up tables.

mod corpus;
mod execdb;
mod external;
mod lookup;
mod schema;
mod stats;

use std::path::{Path, PathBuf};

pub use corpus::{
    import_release, load_corpus, normalize_table_names, render_corpus, save_corpus, Sample,
    SyntheticParaphrase,
};
pub use execdb::{
    build_exec_db, Cell, DbConn, ExecDb, ExecError, ResultSet, DEFAULT_QUERY_TIMEOUT,
};
pub use external::{merge_out_of_domain, ExternalCorpus, ExternalExample, MergeOutcome};
pub use lookup::{build_value_lookup, ColumnValues, ValueLookup};
pub use schema::{ColumnAttr, ColumnDef, SchemaDef, TableDef};
pub use stats::{corpus_stats, CorpusStats};

use crate::io::IoError;
use crate::sql::SqlError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RecordCause {
    #[error("malformed record: {0}")]
    Json(String),
    #[error("{0}")]
    Sql(SqlError),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("record {line}: {cause}")]
    Record { line: usize, cause: RecordCause },
    #[error("table {table}, row {row}, field {col}: {message}")]
    Csv { table: String, row: usize, col: usize, message: String },
    #[error("table {table}, row {row}: column {column} is numeric but got {value:?}")]
    Type { table: String, row: usize, column: String, value: String },
    #[error("database error: {0}")]
    Db(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("id {0} collides with the external corpus prefix")]
    IdCollision(String),
}

impl StoreError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        StoreError::Io { path: path.to_path_buf(), source }
    }
}

impl From<IoError> for StoreError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io { path, source } => StoreError::Io { path, source },
            IoError::Json { line, message, .. } => {
                StoreError::Record { line, cause: RecordCause::Json(message) }
            }
        }
    }
}
