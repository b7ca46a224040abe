//! Table-position generalization splits.
//!
//! A sample whose `FROM` table is one of the designated tables goes to the
//! evaluation pool; everything else, including samples that only `INNER JOIN`
//! a designated table, is training data. The evaluation pool is divided into
//! TEST (a seeded uniform draw of `test_size` samples) and DEV (the rest).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::{write_atomic, IoError, FORMAT_VERSION};
use crate::sql::{SqlError, SqlQuery, TablePosition};
use crate::store::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

pub const DEFAULT_DESIGNATED_TABLES: [&str; 3] = ["PROCEDURES", "PRESCRIPTIONS", "LAB"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    designated_tables: BTreeSet<String>,
    pub test_size: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::new(DEFAULT_DESIGNATED_TABLES, 1000, 0).expect("non-empty")
    }
}

impl SplitSpec {
    pub fn new<I, S>(tables: I, test_size: usize, seed: u64) -> Result<Self, SplitError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let designated_tables: BTreeSet<String> =
            tables.into_iter().map(|t| t.as_ref().trim().to_ascii_uppercase()).filter(|t| !t.is_empty()).collect();
        if designated_tables.is_empty() {
            return Err(SplitError::NoDesignatedTables);
        }
        Ok(SplitSpec { designated_tables, test_size, seed })
    }

    pub fn designated_tables(&self) -> &BTreeSet<String> {
        &self.designated_tables
    }

    fn is_designated(&self, table: &str) -> bool {
        self.designated_tables.contains(&table.to_ascii_uppercase())
    }

    fn in_eval_pool(&self, q: &SqlQuery) -> bool {
        self.is_designated(&q.main_table)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("evaluation pool has {pool} samples but test size is {test_size}")]
    EvalPoolTooSmall { pool: usize, test_size: usize },
    #[error("sample {id}: {source}")]
    Parse { id: String, source: SqlError },
    #[error("at least one designated table is required")]
    NoDesignatedTables,
    #[error("assignment line {line}: {message}")]
    BadAssignment { line: usize, message: String },
}

/// Split of every corpus id, kept in corpus order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitAssignment {
    entries: Vec<(String, Split)>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.dev + self.test
    }
}

impl SplitAssignment {
    pub fn from_pairs<I: IntoIterator<Item = (String, Split)>>(pairs: I) -> Result<Self, SplitError> {
        let mut a = SplitAssignment::default();
        for (i, (id, split)) in pairs.into_iter().enumerate() {
            if a.index.insert(id.clone(), a.entries.len()).is_some() {
                return Err(SplitError::BadAssignment { line: i + 1, message: format!("duplicate id {id}") });
            }
            a.entries.push((id, split));
        }
        Ok(a)
    }

    pub fn get(&self, id: &str) -> Option<Split> {
        self.index.get(id).map(|&i| self.entries[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Split)> {
        self.entries.iter().map(|(id, s)| (id.as_str(), *s))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn counts(&self) -> SplitCounts {
        let mut c = SplitCounts::default();
        for (_, s) in &self.entries {
            match s {
                Split::Train => c.train += 1,
                Split::Dev => c.dev += 1,
                Split::Test => c.test += 1,
            }
        }
        c
    }

    /// Samples of `split`, in corpus order.
    pub fn select<'a>(&self, corpus: &'a [Sample], split: Split) -> Vec<&'a Sample> {
        corpus.iter().filter(|s| self.get(&s.id) == Some(split)).collect()
    }

    /// Two-column, tab-separated rendering with a `#` header line.
    pub fn render_tsv(&self, seed: Option<u64>) -> String {
        let mut out = format!("# format_version={FORMAT_VERSION}");
        if let Some(s) = seed {
            out.push_str(&format!(" seed={s}"));
        }
        out.push('\n');
        for (id, split) in &self.entries {
            out.push_str(id);
            out.push('\t');
            out.push_str(split.name());
            out.push('\n');
        }
        out
    }

    pub fn parse_tsv(text: &str) -> Result<Self, SplitError> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| SplitError::BadAssignment { line: i + 1, message };
            let (id, split) = line.rsplit_once('\t').ok_or_else(|| bad("expected `id<TAB>split`".into()))?;
            pairs.push((id.to_string(), split.parse().map_err(bad)?));
        }
        SplitAssignment::from_pairs(pairs)
    }

    pub fn save(&self, path: &Path, seed: Option<u64>) -> Result<(), IoError> {
        write_atomic(path, self.render_tsv(seed).as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self, crate::Error> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        Ok(Self::parse_tsv(&text)?)
    }
}

fn parse_all(corpus: &[Sample]) -> Vec<Result<SqlQuery, SqlError>> {
    corpus.par_iter().map(Sample::gold_query).collect()
}

pub fn assign_splits(corpus: &[Sample], spec: &SplitSpec) -> Result<SplitAssignment, SplitError> {
    let parsed = parse_all(corpus);
    let mut pool = Vec::new();
    for (i, (s, q)) in corpus.iter().zip(&parsed).enumerate() {
        let q = q.as_ref().map_err(|e| SplitError::Parse { id: s.id.clone(), source: e.clone() })?;
        if spec.in_eval_pool(q) {
            pool.push(i);
        }
    }
    if pool.len() < spec.test_size {
        return Err(SplitError::EvalPoolTooSmall { pool: pool.len(), test_size: spec.test_size });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let test: HashSet<usize> = rand::seq::index::sample(&mut rng, pool.len(), spec.test_size)
        .into_iter()
        .map(|k| pool[k])
        .collect();
    let pool: HashSet<usize> = pool.into_iter().collect();
    let pairs = corpus.iter().enumerate().map(|(i, s)| {
        let split = if test.contains(&i) {
            Split::Test
        } else if pool.contains(&i) {
            Split::Dev
        } else {
            Split::Train
        };
        (s.id.clone(), split)
    });
    SplitAssignment::from_pairs(pairs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    Unassigned,
    NotInCorpus,
    Unparseable,
    /// A TRAIN sample selects `FROM` a designated table.
    DesignatedMainInTrain { table: String },
    /// A DEV/TEST sample joins a designated table.
    DesignatedJoinedInEval { table: String },
    /// A DEV/TEST sample has no designated table in `FROM`.
    EvalWithoutDesignatedMain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub id: String,
    #[serde(flatten)]
    pub rule: Rule,
}

/// Check an assignment against the leakage rules. An empty result means the
/// assignment is a leakage-free partition of the corpus.
pub fn verify_split(corpus: &[Sample], assignment: &SplitAssignment, spec: &SplitSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let parsed = parse_all(corpus);
    let ids: HashSet<&str> = corpus.iter().map(|s| s.id.as_str()).collect();
    for (s, q) in corpus.iter().zip(parsed) {
        let v = |rule| Violation { id: s.id.clone(), rule };
        let Some(split) = assignment.get(&s.id) else {
            out.push(v(Rule::Unassigned));
            continue;
        };
        let Ok(q) = q else {
            out.push(v(Rule::Unparseable));
            continue;
        };
        let positions = q.table_positions();
        let designated = positions.iter().filter(|(t, _)| spec.is_designated(t));
        match split {
            Split::Train => {
                for (t, pos) in designated {
                    if *pos == TablePosition::Main {
                        out.push(v(Rule::DesignatedMainInTrain { table: t.clone() }));
                    }
                }
            }
            Split::Dev | Split::Test => {
                let mut has_main = false;
                for (t, pos) in designated {
                    match pos {
                        TablePosition::Main => has_main = true,
                        TablePosition::Joined => {
                            out.push(v(Rule::DesignatedJoinedInEval { table: t.clone() }))
                        }
                    }
                }
                if !has_main {
                    out.push(v(Rule::EvalWithoutDesignatedMain));
                }
            }
        }
    }
    for (id, _) in assignment.iter() {
        if !ids.contains(id) {
            out.push(Violation { id: id.to_string(), rule: Rule::NotInCorpus });
        }
    }
    out
}

/// Published new-split sizes for the full MIMICSQL release.
pub const REFERENCE_COUNTS: SplitCounts = SplitCounts { train: 8346, dev: 796, test: 1000 };

/// Side-by-side comparison of realized split sizes with the published ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceComparison {
    pub observed: SplitCounts,
    pub reference: SplitCounts,
    pub matches: bool,
    pub observed_eval_pool: usize,
    pub reference_eval_pool: usize,
    pub observed_total: usize,
    pub reference_total: usize,
}

impl ReferenceComparison {
    pub fn new(observed: SplitCounts) -> Self {
        let reference = REFERENCE_COUNTS;
        ReferenceComparison {
            observed,
            reference,
            matches: observed == reference,
            observed_eval_pool: observed.dev + observed.test,
            reference_eval_pool: reference.dev + reference.test,
            observed_total: observed.total(),
            reference_total: reference.total(),
        }
    }
}

impl fmt::Display for ReferenceComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (o, r) = (&self.observed, &self.reference);
        writeln!(f, "split      observed  reference  diff")?;
        for (name, a, b) in [("train", o.train, r.train), ("dev", o.dev, r.dev), ("test", o.test, r.test)] {
            writeln!(f, "{name:<10} {a:>8}  {b:>9}  {:+}", a as i64 - b as i64)?;
        }
        writeln!(
            f,
            "eval pool  {:>8}  {:>9}  (dev + test)",
            self.observed_eval_pool, self.reference_eval_pool
        )?;
        writeln!(f, "total      {:>8}  {:>9}", self.observed_total, self.reference_total)?;
        if self.matches {
            write!(f, "result: match")
        } else {
            write!(
                f,
                "result: MISMATCH (published sizes sum to {}, the released corpus has 10,000 pairs)",
                self.reference_total
            )
        }
    }
}

/// Per-split count of samples by main table, useful when diagnosing a mismatch.
pub fn main_table_histogram(corpus: &[Sample], assignment: &SplitAssignment) -> BTreeMap<(Split, String), usize> {
    let mut out = BTreeMap::new();
    for s in corpus {
        if let (Some(split), Ok(q)) = (assignment.get(&s.id), s.gold_query()) {
            *out.entry((split, q.main_table)).or_insert(0) += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(id: &str, sql: &str) -> Sample {
        Sample::new(id, "q", sql)
    }

    fn six() -> Vec<Sample> {
        vec![
            sample("lab1", "SELECT COUNT(*) FROM LAB WHERE LAB.FLAG = \"abnormal\""),
            sample("demo1", "SELECT * FROM DEMOGRAPHIC"),
            sample("lab2", "SELECT MAX(LAB.VALUE) FROM LAB"),
            sample("join", "SELECT COUNT(*) FROM DEMOGRAPHIC INNER JOIN PROCEDURES ON DEMOGRAPHIC.HADM_ID = PROCEDURES.HADM_ID"),
            sample("rx", "SELECT PRESCRIPTIONS.DRUG FROM PRESCRIPTIONS"),
            sample("diag", "SELECT * FROM DIAGNOSES"),
        ]
    }

    #[test]
    fn six_sample_fixture() {
        let spec = SplitSpec::new(DEFAULT_DESIGNATED_TABLES, 2, 11).unwrap();
        let a = assign_splits(&six(), &spec).unwrap();
        assert_eq!(a.counts(), SplitCounts { train: 3, dev: 1, test: 2 });
        // pool membership by the FROM rule
        for id in ["lab1", "lab2", "rx"] {
            assert_ne!(a.get(id), Some(Split::Train), "{id}");
        }
        for id in ["demo1", "join", "diag"] {
            assert_eq!(a.get(id), Some(Split::Train), "{id}");
        }
        assert!(verify_split(&six(), &a, &spec).is_empty());
    }

    #[test]
    fn no_designated_mentions() {
        let corpus = vec![sample("a", "SELECT * FROM DEMOGRAPHIC"), sample("b", "SELECT * FROM DIAGNOSES")];
        let spec = SplitSpec::new(DEFAULT_DESIGNATED_TABLES, 0, 1).unwrap();
        let a = assign_splits(&corpus, &spec).unwrap();
        assert_eq!(a.counts(), SplitCounts { train: 2, dev: 0, test: 0 });
    }

    #[test]
    fn pool_too_small() {
        let spec = SplitSpec::new(DEFAULT_DESIGNATED_TABLES, 4, 1).unwrap();
        assert_eq!(
            assign_splits(&six(), &spec).unwrap_err(),
            SplitError::EvalPoolTooSmall { pool: 3, test_size: 4 }
        );
    }

    #[test]
    fn hand_built_leaks_are_reported() {
        let spec = SplitSpec::default();
        let corpus = six();
        let mut pairs: Vec<_> = assign_splits(&corpus, &SplitSpec::new(DEFAULT_DESIGNATED_TABLES, 1, 0).unwrap())
            .unwrap()
            .iter()
            .map(|(i, s)| (i.to_string(), s))
            .collect();
        pairs[0].1 = Split::Train; // lab1: FROM LAB in TRAIN
        let a = SplitAssignment::from_pairs(pairs.clone()).unwrap();
        assert_eq!(verify_split(&corpus, &a, &spec), vec![Violation {
            id: "lab1".into(),
            rule: Rule::DesignatedMainInTrain { table: "LAB".into() },
        }]);

        pairs[0].1 = Split::Dev;
        pairs[3].1 = Split::Test; // join: INNER JOIN PROCEDURES in TEST
        let a = SplitAssignment::from_pairs(pairs).unwrap();
        let v = verify_split(&corpus, &a, &spec);
        // rule-check oracle: the joined designated table is flagged, and the
        // sample lacks a designated FROM table
        assert_eq!(v, vec![
            Violation { id: "join".into(), rule: Rule::DesignatedJoinedInEval { table: "PROCEDURES".into() } },
            Violation { id: "join".into(), rule: Rule::EvalWithoutDesignatedMain },
        ]);
    }

    #[test]
    fn tsv_round_trip() {
        let a = assign_splits(&six(), &SplitSpec::new(DEFAULT_DESIGNATED_TABLES, 2, 3).unwrap()).unwrap();
        let text = a.render_tsv(Some(3));
        assert!(text.starts_with("# format_version=1 seed=3\n"));
        assert_eq!(SplitAssignment::parse_tsv(&text).unwrap(), a);
        assert!(SplitAssignment::parse_tsv("a\tbogus\n").is_err());
    }

    #[test]
    fn reference_comparison_reports_pool_arithmetic() {
        let c = ReferenceComparison::new(SplitCounts { train: 8204, dev: 796, test: 1000 });
        assert!(!c.matches);
        assert_eq!(c.reference_total, 10_142);
        assert_eq!(c.reference_eval_pool, 1796);
        assert!(c.to_string().contains("MISMATCH"));
        assert!(ReferenceComparison::new(REFERENCE_COUNTS).matches);
    }

    fn corpus_strategy() -> impl Strategy<Value = Vec<Sample>> {
        let tables = ["DEMOGRAPHIC", "DIAGNOSES", "PROCEDURES", "PRESCRIPTIONS", "LAB"];
        proptest::collection::vec((0..5usize, proptest::option::of(0..5usize)), 0..60).prop_map(move |rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (m, j))| {
                    let main = tables[m];
                    let sql = match j.map(|j| tables[j]).filter(|j| *j != main) {
                        Some(jt) => format!("SELECT * FROM {main} INNER JOIN {jt} ON {main}.HADM_ID = {jt}.HADM_ID"),
                        None => format!("SELECT * FROM {main}"),
                    };
                    sample(&format!("s{i}"), &sql)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn partition_determinism_and_seed_sensitivity(corpus in corpus_strategy(), seed in any::<u64>(), other in any::<u64>(), frac in 0.0f64..1.0) {
            let pool = corpus.iter().filter(|s| {
                let m = s.gold_query().unwrap().main_table;
                DEFAULT_DESIGNATED_TABLES.contains(&m.as_str())
            }).count();
            let test_size = (pool as f64 * frac) as usize;
            let spec = SplitSpec::new(DEFAULT_DESIGNATED_TABLES, test_size, seed).unwrap();
            let a = assign_splits(&corpus, &spec).unwrap();
            prop_assert_eq!(a.len(), corpus.len());
            prop_assert_eq!(&assign_splits(&corpus, &spec).unwrap(), &a);
            prop_assert_eq!(a.counts().test, test_size);
            prop_assert_eq!(a.counts().dev, pool - test_size);

            let b = assign_splits(&corpus, &SplitSpec { seed: other, ..spec.clone() }).unwrap();
            for s in &corpus {
                prop_assert_eq!(a.get(&s.id) == Some(Split::Train), b.get(&s.id) == Some(Split::Train));
            }
            // Corpora with a designated FROM table and a designated join cannot
            // satisfy both leakage rules; everything else must verify clean.
            let conflicted: HashSet<_> = corpus.iter().filter(|s| {
                let q = s.gold_query().unwrap();
                spec.in_eval_pool(&q) && q.joins.iter().any(|j| spec.is_designated(&j.table))
            }).map(|s| s.id.clone()).collect();
            for v in verify_split(&corpus, &a, &spec) {
                prop_assert!(conflicted.contains(&v.id), "{:?}", v);
            }
        }
    }
}
