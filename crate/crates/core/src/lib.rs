//! Text-to-SQL data preparation and evaluation for clinical question answering.

pub mod augment;
pub mod fixture;
pub mod io;
pub mod linearize;
pub mod metrics;
pub mod predictions;
pub mod recovery;
pub mod rerank;
pub mod split;
pub mod sql;
pub mod store;

/// Umbrella error for callers that mix several stages.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] io::IoError),
    #[error(transparent)]
    Sql(#[from] sql::SqlError),
    #[error(transparent)]
    Store(#[from] store::StoreError),
    #[error(transparent)]
    Split(#[from] split::SplitError),
    #[error(transparent)]
    Prediction(#[from] predictions::PredictionError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Rerank(#[from] rerank::RerankError),
    #[error(transparent)]
    Linearize(#[from] linearize::LinearizeError),
    #[error(transparent)]
    Augment(#[from] augment::AugmentError),
    #[error(transparent)]
    Template(#[from] augment::TemplateError),
}

/// Guide chapters, compiled so their examples stay in sync with the code.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/sql-dialect.md")]
    mod sql_dialect {}
    #[doc = include_str!("../../../book/src/corpus-and-database.md")]
    mod corpus_and_database {}
    #[doc = include_str!("../../../book/src/splits.md")]
    mod splits {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/reranking.md")]
    mod reranking {}
    #[doc = include_str!("../../../book/src/recovery.md")]
    mod recovery {}
    #[doc = include_str!("../../../book/src/linearization.md")]
    mod linearization {}
    #[doc = include_str!("../../../book/src/augmentation.md")]
    mod augmentation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/file-formats.md")]
    mod file_formats {}
}
