use serde::{Deserialize, Serialize};

use super::{Sample, SchemaDef, StoreError};
use crate::sql::tokenize_sql;

/// Corpus summary in the shape of the MIMICSQL database statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_samples: usize,
    pub n_tables: usize,
    pub columns_per_table: Vec<usize>,
    pub avg_template_question_len: f64,
    pub avg_paraphrase_question_len: f64,
    pub avg_sql_len: f64,
    pub avg_agg_columns: f64,
    pub avg_conditions: f64,
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn mean(sum: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        round2(sum as f64 / n as f64)
    }
}

fn words(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Question lengths are whitespace word counts; SQL length is the token
/// count from the logic-form tokenizer. "Aggregation columns" counts select
/// items. The paraphrase average runs over samples that have a paraphrase.
pub fn corpus_stats(corpus: &[Sample], schema: &SchemaDef) -> Result<CorpusStats, StoreError> {
    if corpus.is_empty() {
        return Err(StoreError::EmptyCorpus);
    }
    let n = corpus.len();
    let (mut tq, mut pq, mut pn, mut sql, mut agg, mut cond) = (0, 0, 0, 0, 0, 0);
    for (i, s) in corpus.iter().enumerate() {
        tq += words(&s.template_question);
        if let Some(p) = &s.paraphrase_question {
            pq += words(p);
            pn += 1;
        }
        let at = |line: usize, cause| StoreError::Record { line, cause };
        sql += tokenize_sql(&s.gold_sql)
            .map_err(|e| at(i + 1, super::RecordCause::Sql(e)))?
            .len();
        let q = s.gold_query().map_err(|e| at(i + 1, super::RecordCause::Sql(e)))?;
        agg += q.select.len();
        cond += q.conditions.len();
    }
    Ok(CorpusStats {
        n_samples: n,
        n_tables: schema.tables.len(),
        columns_per_table: schema.tables.iter().map(|t| t.columns.len()).collect(),
        avg_template_question_len: mean(tq, n),
        avg_paraphrase_question_len: mean(pq, pn),
        avg_sql_len: mean(sql, n),
        avg_agg_columns: mean(agg, n),
        avg_conditions: mean(cond, n),
    })
}
