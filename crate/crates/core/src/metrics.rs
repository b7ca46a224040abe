//! Logic-form and execution accuracy.
//!
//! Logic-form accuracy compares normalized token sequences and is strictly
//! order-sensitive. Execution accuracy runs both queries and compares the
//! returned rows as multisets, ignoring column names.

use std::cmp::Ordering;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::FORMAT_VERSION;
use crate::predictions::PredictionFile;
use crate::sql::{parse_sql, tokenize_sql, Literal, SqlQuery};
use crate::store::{Cell, DbConn, ExecDb, ResultSet, Sample, StoreError, DEFAULT_QUERY_TIMEOUT};

/// Relative tolerance for numeric cells.
pub const NUMERIC_REL_TOL: f64 = 1e-9;

/// Token-by-token equality. A query that does not tokenize never matches.
pub fn logic_form_match(gold: &str, pred: &str) -> bool {
    match (tokenize_sql(gold), tokenize_sql(pred)) {
        (Ok(g), Ok(p)) => g == p,
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecOutcome {
    pub ex_match: bool,
    pub gold_error: bool,
    pub pred_error: bool,
}

fn row_cmp(a: &[Cell], b: &[Cell]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.canonical_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Multiset equality of rows. Values within a row are compared in returned
/// column order; column names are ignored.
pub fn results_equal(a: &ResultSet, b: &ResultSet) -> bool {
    if a.rows.len() != b.rows.len() {
        return false;
    }
    let mut ra: Vec<&Vec<Cell>> = a.rows.iter().collect();
    let mut rb: Vec<&Vec<Cell>> = b.rows.iter().collect();
    ra.sort_by(|x, y| row_cmp(x, y));
    rb.sort_by(|x, y| row_cmp(x, y));
    ra.iter().zip(&rb).all(|(x, y)| {
        x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| p.approx_eq(q, NUMERIC_REL_TOL))
    })
}

pub fn execution_match(gold: &str, pred: &str, conn: &DbConn, timeout: Option<Duration>) -> ExecOutcome {
    let g = conn.execute(gold, timeout);
    let p = conn.execute(pred, timeout);
    let ex_match = match (&g, &p) {
        (Ok(g), Ok(p)) => results_equal(g, p),
        _ => false,
    };
    ExecOutcome { ex_match, gold_error: g.is_err(), pred_error: p.is_err() }
}

/// Which structural components of a prediction agree with the gold query,
/// each compared as a multiset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ComponentFlags {
    pub agg_op: bool,
    pub agg_col: bool,
    pub table_joins: bool,
    pub cond_col_op: bool,
    pub cond_val: bool,
}

fn sorted<T: Ord>(mut v: Vec<T>) -> Vec<T> {
    v.sort();
    v
}

pub fn component_breakdown(gold: &SqlQuery, pred: Option<&SqlQuery>) -> ComponentFlags {
    let Some(pred) = pred else {
        return ComponentFlags::default();
    };
    let agg_ops = |q: &SqlQuery| sorted(q.select.iter().map(|s| (s.agg, s.distinct)).collect());
    let agg_cols = |q: &SqlQuery| sorted(q.select.iter().map(|s| s.target.clone()).collect());
    let tables = |q: &SqlQuery| (q.main_table.clone(), sorted(q.joins.iter().map(|j| j.table.clone()).collect()));
    let col_ops = |q: &SqlQuery| sorted(q.conditions.iter().map(|c| (c.column.clone(), c.op)).collect());
    let vals = |q: &SqlQuery| -> Vec<Literal> { sorted(q.conditions.iter().map(|c| c.value.clone()).collect()) };
    ComponentFlags {
        agg_op: agg_ops(gold) == agg_ops(pred),
        agg_col: agg_cols(gold) == agg_cols(pred),
        table_joins: tables(gold) == tables(pred),
        cond_col_op: col_ops(gold) == col_ops(pred),
        cond_val: vals(gold) == vals(pred),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleResult {
    pub id: String,
    pub lf_match: bool,
    pub ex_match: bool,
    pub gold_error: bool,
    pub pred_error: bool,
    #[serde(default)]
    pub missing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<ComponentFlags>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub agg_op: f64,
    pub agg_col: f64,
    pub table_joins: f64,
    pub cond_col_op: f64,
    pub cond_val: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub n: usize,
    pub acc_lf: f64,
    pub acc_ex: f64,
    pub n_lf: usize,
    pub n_ex: usize,
    /// Samples whose gold query failed to execute. They stay in the
    /// denominator with `ex_match = false`.
    pub gold_errors: Vec<String>,
    pub missing: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<Breakdown>,
    pub per_sample: Vec<SampleResult>,
}

fn frac(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        k as f64 / n as f64
    }
}

impl EvalReport {
    /// Aggregate per-sample results. Accuracies are exactly `count / n`.
    pub fn from_results(per_sample: Vec<SampleResult>) -> Self {
        let n = per_sample.len();
        let n_lf = per_sample.iter().filter(|r| r.lf_match).count();
        let n_ex = per_sample.iter().filter(|r| r.ex_match).count();
        let breakdown = (n > 0 && per_sample.iter().all(|r| r.components.is_some())).then(|| {
            let count = |f: fn(&ComponentFlags) -> bool| {
                frac(per_sample.iter().filter(|r| f(r.components.as_ref().unwrap())).count(), n)
            };
            Breakdown {
                agg_op: count(|c| c.agg_op),
                agg_col: count(|c| c.agg_col),
                table_joins: count(|c| c.table_joins),
                cond_col_op: count(|c| c.cond_col_op),
                cond_val: count(|c| c.cond_val),
            }
        });
        EvalReport {
            format_version: FORMAT_VERSION,
            n,
            acc_lf: frac(n_lf, n),
            acc_ex: frac(n_ex, n),
            n_lf,
            n_ex,
            gold_errors: per_sample.iter().filter(|r| r.gold_error).map(|r| r.id.clone()).collect(),
            missing: per_sample.iter().filter(|r| r.missing).map(|r| r.id.clone()).collect(),
            breakdown,
            per_sample,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Fail instead of scoring missing predictions as wrong.
    pub strict: bool,
    pub breakdown: bool,
    pub timeout: Option<Duration>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { strict: false, breakdown: false, timeout: Some(DEFAULT_QUERY_TIMEOUT) }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error(transparent)]
    Db(#[from] StoreError),
    #[error("missing predictions for {} sample(s): {}", .0.len(), .0.join(", "))]
    MissingPrediction(Vec<String>),
}

fn score_one(sample: &Sample, preds: &PredictionFile, conn: &DbConn, opts: &EvalOptions) -> SampleResult {
    let Some(rec) = preds.get(&sample.id) else {
        let gold_error = conn.execute(&sample.gold_sql, opts.timeout).is_err();
        return SampleResult {
            id: sample.id.clone(),
            lf_match: false,
            ex_match: false,
            gold_error,
            pred_error: false,
            missing: true,
            components: opts.breakdown.then(ComponentFlags::default),
        };
    };
    let pred = rec.prediction.best_sql();
    let ex = execution_match(&sample.gold_sql, pred, conn, opts.timeout);
    let components = opts.breakdown.then(|| match sample.gold_query() {
        Ok(g) => component_breakdown(&g, parse_sql(pred).ok().as_ref()),
        Err(_) => ComponentFlags::default(),
    });
    SampleResult {
        id: sample.id.clone(),
        lf_match: logic_form_match(&sample.gold_sql, pred),
        ex_match: ex.ex_match,
        gold_error: ex.gold_error,
        pred_error: ex.pred_error || tokenize_sql(pred).is_err(),
        missing: false,
        components,
    }
}

/// Score `preds` against `split`. Per-sample work runs on the current rayon
/// pool with one read-only connection per worker; the report lists samples
/// in split order regardless of scheduling.
pub fn evaluate(
    split: &[Sample],
    preds: &PredictionFile,
    db: &ExecDb,
    opts: &EvalOptions,
) -> Result<EvalReport, MetricsError> {
    if opts.strict {
        let missing: Vec<String> =
            split.iter().filter(|s| preds.get(&s.id).is_none()).map(|s| s.id.clone()).collect();
        if !missing.is_empty() {
            return Err(MetricsError::MissingPrediction(missing));
        }
    }
    // Surface connection problems once, before fanning out.
    db.connect()?;
    let results: Result<Vec<SampleResult>, StoreError> = split
        .par_iter()
        .map_init(|| db.connect(), |conn, s| match conn {
            Ok(c) => Ok(score_one(s, preds, c, opts)),
            Err(e) => Err(StoreError::Db(e.to_string())),
        })
        .collect();
    Ok(EvalReport::from_results(results?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::parse_sql;

    fn rs(rows: Vec<Vec<Cell>>) -> ResultSet {
        ResultSet { columns: vec![], rows }
    }

    #[test]
    fn lf_examples() {
        let q = r#"SELECT COUNT(*) FROM DEMOGRAPHIC WHERE DEMOGRAPHIC.LANGUAGE = "PORT""#;
        assert!(logic_form_match(q, q));
        assert!(!logic_form_match("SELECT A,B from TABLE", "SELECT B,A from TABLE"));
        assert!(logic_form_match("SELECT A,B from TABLE", "select   a ,\n b FROM table"));
        assert!(!logic_form_match(q, "SELECT COUNT(*) FROM DEMOGRAPHIC WHERE DEMOGRAPHIC.LANGUAGE = \"port\""));
        assert!(!logic_form_match(q, "SELECT \"oops"));
    }

    #[test]
    fn multiset_semantics() {
        let a = rs(vec![vec![Cell::Int(1)], vec![Cell::Int(2)], vec![Cell::Int(2)]]);
        let b = rs(vec![vec![Cell::Int(2)], vec![Cell::Int(1)], vec![Cell::Int(2)]]);
        let c = rs(vec![vec![Cell::Int(2)], vec![Cell::Int(1)], vec![Cell::Int(1)]]);
        assert!(results_equal(&a, &b));
        assert!(!results_equal(&a, &c));
        assert!(!results_equal(&c, &a));
        let swapped = rs(vec![vec![Cell::Int(1), Cell::Text("x".into())]]);
        let orig = rs(vec![vec![Cell::Text("x".into()), Cell::Int(1)]]);
        assert!(!results_equal(&swapped, &orig));
        let avg = rs(vec![vec![Cell::Real(0.1 + 0.2)]]);
        assert!(results_equal(&avg, &rs(vec![vec![Cell::Real(0.3)]])));
        assert!(results_equal(&rs(vec![]), &rs(vec![])));
    }

    #[test]
    fn breakdown_examples() {
        let g = parse_sql(r#"SELECT COUNT(DISTINCT D.SUBJECT_ID) FROM D WHERE D.LANGUAGE = "HAITIAN" AND D.AGE < 30"#).unwrap();
        assert_eq!(component_breakdown(&g, Some(&g)), ComponentFlags {
            agg_op: true, agg_col: true, table_joins: true, cond_col_op: true, cond_val: true,
        });
        let reordered = parse_sql(r#"SELECT COUNT(DISTINCT D.SUBJECT_ID) FROM D WHERE D.AGE < 30 AND D.LANGUAGE = "HAITIAN""#).unwrap();
        assert_eq!(component_breakdown(&g, Some(&reordered)), component_breakdown(&g, Some(&g)));
        let val = parse_sql(r#"SELECT COUNT(DISTINCT D.SUBJECT_ID) FROM D WHERE D.LANGUAGE = "hait" AND D.AGE < 30"#).unwrap();
        assert_eq!(component_breakdown(&g, Some(&val)), ComponentFlags {
            agg_op: true, agg_col: true, table_joins: true, cond_col_op: true, cond_val: false,
        });
        assert_eq!(component_breakdown(&g, None), ComponentFlags::default());
    }

    #[test]
    fn report_accuracies_are_exact_fractions() {
        let per: Vec<SampleResult> = (0..100)
            .map(|i| SampleResult {
                id: i.to_string(),
                lf_match: i < 30,
                ex_match: i < 96,
                gold_error: false,
                pred_error: false,
                missing: false,
                components: None,
            })
            .collect();
        let r = EvalReport::from_results(per);
        assert_eq!(r.acc_ex, 0.96);
        assert_eq!(r.acc_lf, 0.30);
        assert!(r.breakdown.is_none());
    }
}
