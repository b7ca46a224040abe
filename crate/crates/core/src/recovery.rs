//! Condition-value recovery: replace each predicted text value with the most
//! similar stored value, scored by ROUGE-L at word and character level.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::predictions::{Candidate, CandidateSet, Prediction, PredictionFile, PredictionRecord};
use crate::sql::{parse_sql, CompareOp, Literal};
use crate::store::{ColumnAttr, ValueLookup};

/// Value sets larger than this are scanned with a length-bound prune.
pub const PREFILTER_THRESHOLD: usize = 50_000;

/// Length of the longest common subsequence. Runs in `O(|a|·|b|)` time and
/// `O(min(|a|, |b|))` space.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return 0;
    }
    let mut row = vec![0usize; short.len() + 1];
    for x in long {
        let mut diag = 0;
        for (j, y) in short.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[short.len()]
}

/// `2PR/(P+R)` with `P = L/m`, `R = L/n` reduces to `2L/(m+n)`; the reduced
/// form is a single rounding, so equal ratios give equal floats.
fn f1_from_lcs(lcs: usize, cand_len: usize, ref_len: usize) -> f64 {
    if lcs == 0 {
        0.0
    } else {
        2.0 * lcs as f64 / (cand_len + ref_len) as f64
    }
}

/// Combined score kept as the exact fraction `lw/sw + lc/sc`, where `l` is an
/// LCS length and `s` the summed sequence lengths. Ranking uses this so that
/// mathematically equal scores tie exactly.
#[derive(Debug, Clone, Copy)]
struct ExactScore {
    num: u128,
    den: u128,
}

impl ExactScore {
    fn new(lw: usize, sw: usize, lc: usize, sc: usize) -> Self {
        let term = |l: usize, s: usize| if l == 0 { (0u128, 1u128) } else { (l as u128, s as u128) };
        let ((a, b), (c, d)) = (term(lw, sw), term(lc, sc));
        ExactScore { num: a * d + c * b, den: b * d }
    }

    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

/// ROUGE-L F1 (β = 1) of `candidate` against `reference`.
pub fn rouge_l_f1<T: PartialEq>(candidate: &[T], reference: &[T]) -> f64 {
    f1_from_lcs(lcs_len(candidate, reference), candidate.len(), reference.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub word_f: f64,
    pub char_f: f64,
    pub combined: f64,
}

/// Case-folded word and character views of a string.
struct Folded {
    words: Vec<String>,
    chars: Vec<char>,
}

impl Folded {
    fn new(s: &str) -> Self {
        let lower = s.to_lowercase();
        Folded { words: lower.split_whitespace().map(str::to_string).collect(), chars: lower.chars().collect() }
    }

    fn score(&self, other: &Folded) -> SimilarityScore {
        let word_f = rouge_l_f1(&self.words, &other.words);
        let char_f = rouge_l_f1(&self.chars, &other.chars);
        SimilarityScore { word_f, char_f, combined: (word_f + char_f) / 2.0 }
    }

    fn exact_score(&self, other: &Folded) -> ExactScore {
        ExactScore::new(
            lcs_len(&self.words, &other.words),
            self.words.len() + other.words.len(),
            lcs_len(&self.chars, &other.chars),
            self.chars.len() + other.chars.len(),
        )
    }

    /// Best score any string of `other`'s lengths could reach: the LCS is at
    /// most the shorter length at each granularity.
    fn upper_bound(&self, other: &Folded) -> ExactScore {
        let (w, c) = (self.words.len(), self.chars.len());
        let (ow, oc) = (other.words.len(), other.chars.len());
        ExactScore::new(w.min(ow), w + ow, c.min(oc), c + oc)
    }
}

/// Case-insensitive similarity between a predicted value and a stored one.
///
/// ```
/// use medsql::recovery::similarity;
/// let s = similarity("hait", "HAITIAN");
/// assert_eq!(s.word_f, 0.0);
/// assert!((s.combined - 4.0 / 11.0).abs() < 1e-12);
/// ```
pub fn similarity(pred_value: &str, db_value: &str) -> SimilarityScore {
    Folded::new(pred_value).score(&Folded::new(db_value))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecoveryError {
    #[error("no stored values for column {table}.{column}")]
    UnknownColumn { table: String, column: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecoveryOptions {
    /// Prune large value sets by a length bound before exact scoring. The
    /// prune is exact: it never changes the chosen value.
    pub prefilter: bool,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions { prefilter: true }
    }
}

/// Pick the stored value most similar to `pred`. Ties go to the smallest
/// value in lexicographic order; an exact member is returned unchanged.
pub fn best_match<'a, I>(pred: &str, values: I, prefilter: bool) -> Option<&'a str>
where
    I: IntoIterator<Item = &'a String>,
    I::IntoIter: ExactSizeIterator,
{
    fn consider<'a>(best: &mut Option<(ExactScore, &'a str)>, s: ExactScore, v: &'a str) {
        use std::cmp::Ordering::*;
        let better = match best {
            None => true,
            Some((b, bv)) => match s.cmp(b) {
                Greater => true,
                Equal => v < *bv,
                Less => false,
            },
        };
        if better {
            *best = Some((s, v));
        }
    }
    let values = values.into_iter();
    let folded_pred = Folded::new(pred);
    let mut best: Option<(ExactScore, &'a str)> = None;
    if prefilter && values.len() > PREFILTER_THRESHOLD {
        let mut ranked: Vec<(ExactScore, &'a str, Folded)> = values
            .map(|v| {
                let f = Folded::new(v);
                (folded_pred.upper_bound(&f), v.as_str(), f)
            })
            .collect();
        if let Some((_, v, _)) = ranked.iter().find(|(_, v, _)| *v == pred) {
            return Some(v);
        }
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        for (ub, v, f) in &ranked {
            if matches!(&best, Some((b, _)) if ub.cmp(b).is_lt()) {
                break;
            }
            consider(&mut best, folded_pred.exact_score(f), v);
        }
    } else {
        let values: Vec<&'a String> = values.collect();
        if let Some(v) = values.iter().find(|v| v.as_str() == pred) {
            return Some(v.as_str());
        }
        for v in values {
            consider(&mut best, folded_pred.exact_score(&Folded::new(v)), v);
        }
    }
    best.map(|(_, v)| v)
}

pub fn recover_value(
    pred_value: &str,
    table: &str,
    column: &str,
    lookup: &ValueLookup,
    opts: RecoveryOptions,
) -> Result<String, RecoveryError> {
    let unknown = || RecoveryError::UnknownColumn { table: table.to_string(), column: column.to_string() };
    let set = lookup.get(table, column).ok_or_else(unknown)?;
    best_match(pred_value, &set.values, opts.prefilter).map(str::to_string).ok_or_else(unknown)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replacement {
    pub table: String,
    pub column: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QueryRecovery {
    pub sql: String,
    /// False when the input did not parse and was passed through unchanged.
    pub parsed: bool,
    pub replacements: Vec<Replacement>,
    pub unknown_columns: Vec<String>,
}

/// Recover every text-valued equality-style condition of `pred`. `LIKE`
/// patterns and numeric columns are left alone.
pub fn recover_query(pred: &str, lookup: &ValueLookup, opts: RecoveryOptions) -> QueryRecovery {
    let Ok(mut q) = parse_sql(pred) else {
        return QueryRecovery { sql: pred.to_string(), parsed: false, ..Default::default() };
    };
    let mut out = QueryRecovery { parsed: true, ..Default::default() };
    let owners: Vec<String> = q.conditions.iter().map(|c| q.owning_table(&c.column).to_string()).collect();
    for (cond, table) in q.conditions.iter_mut().zip(owners) {
        let Literal::Text(value) = &cond.value else { continue };
        if cond.op == CompareOp::Like {
            continue;
        }
        let column = &cond.column.column;
        match lookup.get(&table, column) {
            Some(set) if set.attr != ColumnAttr::Text => continue,
            _ => {}
        }
        match recover_value(value, &table, column, lookup, opts) {
            Ok(found) => {
                if &found != value {
                    out.replacements.push(Replacement {
                        table: table.clone(),
                        column: column.clone(),
                        from: value.clone(),
                        to: found.clone(),
                    });
                    cond.value = Literal::Text(found);
                }
            }
            Err(_) => out.unknown_columns.push(format!("{table}.{column}")),
        }
    }
    out.sql = q.to_string();
    out
}

/// Apply [`recover_query`] to every prediction (every candidate of a beam).
/// Records gain a `recovered` field counting replaced values.
pub fn recover_file(preds: &PredictionFile, lookup: &ValueLookup, opts: RecoveryOptions) -> PredictionFile {
    let out: Vec<PredictionRecord> = preds
        .records()
        .par_iter()
        .map(|rec| {
            let mut n = 0;
            let mut fix = |sql: &str| {
                let r = recover_query(sql, lookup, opts);
                n += r.replacements.len();
                r.sql
            };
            let prediction = match &rec.prediction {
                Prediction::Single(s) => Prediction::Single(fix(s)),
                Prediction::Beam(b) => {
                    let c = b.candidates().iter().map(|c| Candidate { sql: fix(&c.sql), score: c.score }).collect();
                    Prediction::Beam(CandidateSet::new(b.id(), c).expect("beam stays non-empty"))
                }
            };
            let mut extra = rec.extra.clone();
            extra.insert("recovered".into(), Value::from(n));
            PredictionRecord { id: rec.id.clone(), prediction, extra }
        })
        .collect();
    PredictionFile::from_records(out).expect("ids were unique in the input")
}
