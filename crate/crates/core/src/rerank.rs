//! Execution-guided selection from a ranked beam.

use std::time::Duration;

use rayon::prelude::*;
use serde_json::Value;

use crate::predictions::{CandidateSet, Prediction, PredictionFile, PredictionRecord};
use crate::store::{DbConn, ExecDb, StoreError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RerankChoice {
    pub chosen_sql: String,
    /// 1-based rank within the beam.
    pub chosen_rank: usize,
    pub all_failed: bool,
    /// Number of candidates executed before stopping.
    pub executions: usize,
}

#[derive(Debug, Clone)]
pub struct RerankOptions {
    /// Treat an empty result set as a failure.
    pub require_nonempty: bool,
    pub timeout: Option<Duration>,
}

impl Default for RerankOptions {
    fn default() -> Self {
        RerankOptions { require_nonempty: false, timeout: Some(crate::store::DEFAULT_QUERY_TIMEOUT) }
    }
}

/// Walk the beam in score order and keep the first candidate that executes.
/// If none does, fall back to the top candidate and flag it.
pub fn rerank(cs: &CandidateSet, conn: &DbConn, opts: &RerankOptions) -> RerankChoice {
    let mut executions = 0;
    for (i, cand) in cs.candidates().iter().enumerate() {
        executions += 1;
        let ok = match conn.execute(&cand.sql, opts.timeout) {
            Ok(rs) => !opts.require_nonempty || !rs.rows.is_empty(),
            Err(_) => false,
        };
        if ok {
            return RerankChoice { chosen_sql: cand.sql.clone(), chosen_rank: i + 1, all_failed: false, executions };
        }
    }
    RerankChoice { chosen_sql: cs.top().sql.clone(), chosen_rank: 1, all_failed: true, executions }
}

#[derive(Debug, thiserror::Error)]
pub enum RerankError {
    #[error(transparent)]
    Db(#[from] StoreError),
    #[error("record {line} ({id}): no candidate list to rerank")]
    Record { line: usize, id: String },
}

/// Rerank every record of a beam file, producing single predictions that
/// carry `chosen_rank` and `all_failed` as extra fields.
pub fn rerank_file(preds: &PredictionFile, db: &ExecDb, opts: &RerankOptions) -> Result<PredictionFile, RerankError> {
    let mut beams = Vec::with_capacity(preds.len());
    for (i, rec) in preds.records().iter().enumerate() {
        match &rec.prediction {
            Prediction::Beam(b) => beams.push((rec, b)),
            Prediction::Single(_) => return Err(RerankError::Record { line: i + 1, id: rec.id.clone() }),
        }
    }
    db.connect()?;
    let out: Result<Vec<PredictionRecord>, StoreError> = beams
        .par_iter()
        .map_init(|| db.connect(), |conn, (rec, beam)| {
            let conn = conn.as_ref().map_err(|e| StoreError::Db(e.to_string()))?;
            let choice = rerank(beam, conn, opts);
            let mut single = PredictionRecord::single(rec.id.clone(), choice.chosen_sql);
            single.extra = rec.extra.clone();
            single.extra.insert("chosen_rank".into(), Value::from(choice.chosen_rank));
            single.extra.insert("all_failed".into(), Value::from(choice.all_failed));
            Ok(single)
        })
        .collect();
    Ok(PredictionFile::from_records(out?).expect("ids were unique in the input"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictions::Candidate;
    use crate::store::{build_exec_db, ColumnAttr, SchemaDef, TableDef};
    use std::collections::BTreeMap;

    fn db() -> (tempfile::TempDir, ExecDb) {
        let dir = tempfile::tempdir().unwrap();
        let schema =
            SchemaDef::new(vec![TableDef::new("T", &[("A", ColumnAttr::Text), ("B", ColumnAttr::Number)])]).unwrap();
        let csv = dir.path().join("t.csv");
        std::fs::write(&csv, "A,B\nx,1\ny,2\n").unwrap();
        let out = dir.path().join("db.sqlite");
        let db = build_exec_db(&schema, &BTreeMap::from([("T".to_string(), csv)]), &out).unwrap();
        (dir, db)
    }

    fn beam(sqls: &[&str]) -> CandidateSet {
        let c = sqls.iter().enumerate().map(|(i, s)| Candidate { sql: s.to_string(), score: -(i as f64) }).collect();
        CandidateSet::new("q", c).unwrap()
    }

    #[test]
    fn picks_first_executable() {
        let (_d, db) = db();
        let conn = db.connect().unwrap();
        let opts = RerankOptions::default();
        let r = rerank(&beam(&["SELECT FROM", "SELECT T.A FROM T"]), &conn, &opts);
        assert_eq!((r.chosen_rank, r.all_failed, r.executions), (2, false, 2));
        let r = rerank(&beam(&["SELECT T.A FROM T", "SELECT FROM"]), &conn, &opts);
        assert_eq!((r.chosen_rank, r.executions), (1, 1));
        let bad: Vec<&str> = vec!["SELECT NOPE FROM T"; 10];
        let r = rerank(&beam(&bad), &conn, &opts);
        assert_eq!((r.chosen_rank, r.all_failed, r.executions), (1, true, 10));
    }

    #[test]
    fn require_nonempty_skips_empty_results() {
        let (_d, db) = db();
        let conn = db.connect().unwrap();
        let b = beam(&[r#"SELECT T.A FROM T WHERE T.A = "z""#, "SELECT T.A FROM T"]);
        assert_eq!(rerank(&b, &conn, &RerankOptions::default()).chosen_rank, 1);
        let strict = RerankOptions { require_nonempty: true, ..Default::default() };
        assert_eq!(rerank(&b, &conn, &strict).chosen_rank, 2);
    }

    #[test]
    fn file_rejects_single_records() {
        let (_d, db) = db();
        let f = PredictionFile::from_records(vec![
            PredictionRecord::beam(beam(&["SELECT T.A FROM T"])),
        ])
        .unwrap();
        let out = rerank_file(&f, &db, &RerankOptions::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.records()[0].extra["chosen_rank"], Value::from(1));
        let singles = PredictionFile::from_records(vec![PredictionRecord::single("a", "SELECT 1")]).unwrap();
        assert!(matches!(rerank_file(&singles, &db, &RerankOptions::default()), Err(RerankError::Record { line: 1, .. })));
    }
}
