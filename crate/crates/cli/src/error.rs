use std::fmt;

use medsql::augment::{AugmentError, TemplateError, TranslateError};
use medsql::io::IoError;
use medsql::linearize::LinearizeError;
use medsql::metrics::MetricsError;
use medsql::predictions::PredictionError;
use medsql::rerank::RerankError;
use medsql::split::SplitError;
use medsql::store::StoreError;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 1,
    Data = 2,
    Environment = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn new(kind: ExitKind, error: impl Into<anyhow::Error>) -> Self {
        CliError { kind, error: error.into() }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError::new(ExitKind::Usage, anyhow::anyhow!("{msg}"))
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        CliError::new(ExitKind::Data, anyhow::anyhow!("{msg}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn store_kind(e: &StoreError) -> ExitKind {
    match e {
        StoreError::Db(_) => ExitKind::Environment,
        _ => ExitKind::Data,
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        CliError::new(store_kind(&e), e)
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::new(ExitKind::Data, e)
    }
}

impl From<SplitError> for CliError {
    fn from(e: SplitError) -> Self {
        match e {
            SplitError::NoDesignatedTables => CliError::new(ExitKind::Usage, e),
            e => CliError::new(ExitKind::Data, e),
        }
    }
}

impl From<PredictionError> for CliError {
    fn from(e: PredictionError) -> Self {
        CliError::new(ExitKind::Data, e)
    }
}

impl From<LinearizeError> for CliError {
    fn from(e: LinearizeError) -> Self {
        CliError::new(ExitKind::Data, e)
    }
}

impl From<TemplateError> for CliError {
    fn from(e: TemplateError) -> Self {
        CliError::new(ExitKind::Data, e)
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Db(e) => e.into(),
            e => CliError::new(ExitKind::Data, e),
        }
    }
}

impl From<RerankError> for CliError {
    fn from(e: RerankError) -> Self {
        match e {
            RerankError::Db(e) => e.into(),
            e => CliError::new(ExitKind::Data, e),
        }
    }
}

impl From<AugmentError> for CliError {
    fn from(e: AugmentError) -> Self {
        match e {
            AugmentError::UnsupportedPivot { .. } => CliError::new(ExitKind::Usage, e),
            AugmentError::Translate(t) => t.into(),
        }
    }
}

impl From<TranslateError> for CliError {
    fn from(e: TranslateError) -> Self {
        CliError::new(ExitKind::Environment, e)
    }
}

impl From<medsql::Error> for CliError {
    fn from(e: medsql::Error) -> Self {
        use medsql::Error as E;
        match e {
            E::Io(e) => e.into(),
            E::Store(e) => e.into(),
            E::Split(e) => e.into(),
            E::Prediction(e) => e.into(),
            E::Metrics(e) => e.into(),
            E::Rerank(e) => e.into(),
            E::Linearize(e) => e.into(),
            E::Augment(e) => e.into(),
            E::Template(e) => e.into(),
            E::Sql(e) => CliError::new(ExitKind::Data, e),
        }
    }
}
