use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::Args;
use serde_json::{json, Value};

use medsql::augment::{
    augment_corpus, instantiate_templates, load_templates, HttpTranslator, StubTranslator, Translator,
    TranslatorEndpoint, DEFAULT_PIVOTS,
};
use medsql::io::write_atomic;
use medsql::linearize::{export_training, QuestionSource, SchemaSet, DEFAULT_SEPARATOR};
use medsql::metrics::{evaluate, EvalOptions};
use medsql::predictions::PredictionFile;
use medsql::recovery::{recover_file, RecoveryOptions};
use medsql::rerank::{rerank_file, RerankOptions};
use medsql::split::{
    assign_splits, verify_split, ReferenceComparison, Split, SplitAssignment, SplitSpec,
    DEFAULT_DESIGNATED_TABLES,
};
use medsql::store::{
    build_exec_db, build_value_lookup, corpus_stats, import_release, load_corpus, merge_out_of_domain,
    save_corpus, ExecDb, ExternalCorpus, Sample, SchemaDef, DEFAULT_QUERY_TIMEOUT,
};

use crate::config::{switch, RunConfig};
use crate::error::{CliError, CliResult, ExitKind};
use crate::manifest::RunRecord;

pub const TRANSLATE_URL_ENV: &str = "MEDSQL_TRANSLATE_URL";
const DEFAULT_TEST_SIZE: usize = 1000;
const DEFAULT_LIMIT_PER_TEMPLATE: usize = 100;

/// An input file that must exist before any work starts.
fn existing(path: PathBuf, what: &str) -> CliResult<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::usage(format!("{what} {} does not exist", path.display())))
    }
}

fn required(flag: Option<PathBuf>, config: &Option<PathBuf>, name: &str) -> CliResult<PathBuf> {
    let path = flag
        .or_else(|| config.clone())
        .ok_or_else(|| CliError::usage(format!("--{name} is required (or set `{}` in the config file)", name.replace('-', "_"))))?;
    existing(path, name)
}

/// The database path is checked when it is opened, so a missing file is
/// reported as an environment failure rather than a usage error.
fn db_path(flag: Option<PathBuf>, config: &RunConfig) -> CliResult<PathBuf> {
    flag.or_else(|| config.db.clone())
        .ok_or_else(|| CliError::usage("--db is required (or set `db` in the config file)"))
}

fn optional(flag: Option<PathBuf>, config: &Option<PathBuf>, name: &str) -> CliResult<Option<PathBuf>> {
    flag.or_else(|| config.clone()).map(|p| existing(p, name)).transpose()
}

/// Timeout in milliseconds; 0 disables the limit.
fn timeout(flag: Option<u64>, config: &RunConfig) -> (u64, Option<Duration>) {
    let ms = flag.or(config.timeout_ms).unwrap_or(DEFAULT_QUERY_TIMEOUT.as_millis() as u64);
    (ms, (ms > 0).then(|| Duration::from_millis(ms)))
}

fn open_db(path: &Path) -> CliResult<ExecDb> {
    Ok(ExecDb::open(path)?)
}

fn parse_with<T: std::str::FromStr<Err = String>>(s: &str) -> CliResult<T> {
    s.parse().map_err(CliError::usage)
}

// ---------------------------------------------------------------- ingest

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Schema JSON describing tables, columns and column types.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// CSV file for one table, as NAME=PATH. Repeat for every table.
    #[arg(long = "table", value_name = "NAME=PATH")]
    tables: Vec<String>,
    /// Execution database to build from the CSV tables.
    #[arg(long)]
    db: Option<PathBuf>,
    /// Release file with one {question, sql} object per line.
    #[arg(long)]
    release: Option<PathBuf>,
    /// Paraphrase file paired line by line with --release.
    #[arg(long)]
    paraphrases: Option<PathBuf>,
    /// Existing corpus to extend with an external corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// External examples file (Spider layout).
    #[arg(long)]
    spider_examples: Option<PathBuf>,
    /// External tables file (Spider layout).
    #[arg(long)]
    spider_tables: Option<PathBuf>,
    /// Id prefix for external samples.
    #[arg(long, default_value = "spider")]
    external_name: String,
    /// Skip and count unconvertible external records instead of failing.
    #[arg(long)]
    lenient: bool,
    /// Where to write external schemas (default: <out>.schemas.json).
    #[arg(long)]
    schemas_out: Option<PathBuf>,
    /// Output corpus.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_table_arg(s: &str) -> CliResult<(String, PathBuf)> {
    let (name, path) = s
        .split_once('=')
        .filter(|(n, p)| !n.trim().is_empty() && !p.is_empty())
        .ok_or_else(|| CliError::usage(format!("--table expects NAME=PATH, got {s:?}")))?;
    Ok((name.trim().to_ascii_uppercase(), existing(PathBuf::from(path), "table file")?))
}

pub fn ingest(a: IngestArgs, config: &RunConfig) -> CliResult<()> {
    let builds_db = !a.tables.is_empty();
    let imports = a.release.is_some();
    let merges = a.spider_examples.is_some() || a.spider_tables.is_some();
    if !builds_db && !imports && !merges {
        return Err(CliError::usage("ingest needs --table (build a database), --release (import a corpus) or --spider-examples/--spider-tables (merge)"));
    }
    if builds_db {
        let schema_path = required(a.schema.clone(), &config.schema, "schema")?;
        let schema = SchemaDef::load(&schema_path)?;
        let mut files = BTreeMap::new();
        for t in &a.tables {
            let (name, path) = parse_table_arg(t)?;
            files.insert(name, path);
        }
        let out = a.db.clone().or_else(|| config.db.clone()).ok_or_else(|| CliError::usage("--db is required with --table"))?;
        build_exec_db(&schema, &files, &out)?;
        let mut inputs = vec![schema_path];
        inputs.extend(files.values().cloned());
        RunRecord { command: "ingest", seed: None, config: json!({ "mode": "build-db" }), inputs }
            .write(&out, &json!({ "tables": files.keys().collect::<Vec<_>>() }))?;
        eprintln!("built {} with {} table(s)", out.display(), files.len());
    }

    if imports || merges {
        let out = a.out.clone().ok_or_else(|| CliError::usage("--out is required when writing a corpus"))?;
        let mut inputs = Vec::new();
        let mut summary = serde_json::Map::new();
        let base: Vec<Sample> = if let Some(release) = a.release.clone() {
            let release = existing(release, "release")?;
            let schema_path = required(a.schema.clone(), &config.schema, "schema")?;
            let schema = SchemaDef::load(&schema_path)?;
            let paraphrases = a.paraphrases.clone().map(|p| existing(p, "paraphrases")).transpose()?;
            let samples = import_release(&release, paraphrases.as_deref(), &schema)?;
            inputs.extend([release, schema_path]);
            inputs.extend(paraphrases);
            summary.insert("imported".into(), json!(samples.len()));
            samples
        } else {
            let corpus = required(a.corpus.clone(), &config.corpus, "corpus")?;
            let samples = load_corpus(&corpus)?;
            inputs.push(corpus);
            samples
        };
        let samples = if merges {
            let (Some(ex), Some(tb)) = (a.spider_examples.clone(), a.spider_tables.clone()) else {
                return Err(CliError::usage("--spider-examples and --spider-tables must be given together"));
            };
            let (ex, tb) = (existing(ex, "spider examples")?, existing(tb, "spider tables")?);
            let external = ExternalCorpus::load_spider(&a.external_name, &ex, &tb)?;
            let merged = merge_out_of_domain(&base, &external, a.lenient)?;
            let schemas_out = a.schemas_out.clone().unwrap_or_else(|| {
                let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
                name.push(".schemas.json");
                out.with_file_name(name)
            });
            let text = serde_json::to_string_pretty(&merged.schemas).expect("schemas serialize") + "\n";
            write_atomic(&schemas_out, text.as_bytes())?;
            inputs.extend([ex, tb]);
            summary.insert("external_added".into(), json!(merged.samples.len() - base.len()));
            summary.insert("external_skipped".into(), json!(merged.skipped.len()));
            summary.insert("external_schemas".into(), json!(schemas_out.display().to_string()));
            for (line, cause) in &merged.skipped {
                eprintln!("skipped external record {line}: {cause}");
            }
            merged.samples
        } else {
            base
        };
        save_corpus(&out, &samples, config.seed)?;
        summary.insert("samples".into(), json!(samples.len()));
        let params = json!({ "mode": "corpus", "external_name": a.external_name, "lenient": a.lenient });
        RunRecord { command: "ingest", seed: config.seed, config: params, inputs }.write(&out, &Value::Object(summary))?;
        eprintln!("wrote {} sample(s) to {}", samples.len(), out.display());
    }
    Ok(())
}

// ----------------------------------------------------------------- stats

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Also write the statistics to this JSON file.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn stats(a: StatsArgs, config: &RunConfig) -> CliResult<()> {
    let corpus_path = required(a.corpus, &config.corpus, "corpus")?;
    let schema_path = required(a.schema, &config.schema, "schema")?;
    let corpus = load_corpus(&corpus_path)?;
    let schema = SchemaDef::load(&schema_path)?;
    let stats = corpus_stats(&corpus, &schema)?;
    let mut v = json!({ "format_version": medsql::io::FORMAT_VERSION });
    if let (Value::Object(m), Value::Object(s)) = (&mut v, serde_json::to_value(&stats).expect("stats serialize")) {
        m.extend(s);
    }
    let text = serde_json::to_string_pretty(&v).expect("stats serialize") + "\n";
    print!("{text}");
    if let Some(out) = a.out {
        write_atomic(&out, text.as_bytes())?;
        RunRecord { command: "stats", seed: None, config: json!({}), inputs: vec![corpus_path, schema_path] }
            .write(&out, &Value::Null)?;
    }
    Ok(())
}

// ----------------------------------------------------------------- split

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output assignment file (TSV).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of evaluation-pool samples drawn for TEST; the rest form DEV.
    #[arg(long)]
    test_size: Option<usize>,
    /// Designated tables, comma separated.
    #[arg(long, value_delimiter = ',')]
    designated: Option<Vec<String>>,
}

pub fn split(a: SplitArgs, config: &RunConfig) -> CliResult<()> {
    let corpus_path = required(a.corpus, &config.corpus, "corpus")?;
    let out = config.output(a.out, "split.tsv");
    let seed = a.seed.or(config.seed).unwrap_or(0);
    let test_size = a.test_size.or(config.test_size).unwrap_or(DEFAULT_TEST_SIZE);
    let tables: Vec<String> = a
        .designated
        .or_else(|| config.designated_tables.clone())
        .unwrap_or_else(|| DEFAULT_DESIGNATED_TABLES.iter().map(|s| s.to_string()).collect());
    let spec = SplitSpec::new(&tables, test_size, seed)?;
    let corpus = load_corpus(&corpus_path)?;
    let assignment = assign_splits(&corpus, &spec)?;
    let violations = verify_split(&corpus, &assignment, &spec);
    assignment.save(&out, Some(seed))?;

    let counts = assignment.counts();
    let comparison = ReferenceComparison::new(counts);
    println!("{comparison}");
    if !violations.is_empty() {
        eprintln!("warning: {} leakage violation(s); first: {:?}", violations.len(), violations[0]);
    }
    let params = json!({
        "seed": seed,
        "test_size": test_size,
        "designated_tables": spec.designated_tables(),
    });
    let summary = json!({ "counts": counts, "reference": comparison, "violations": violations });
    RunRecord { command: "split", seed: Some(seed), config: params, inputs: vec![corpus_path] }.write(&out, &summary)?;
    Ok(())
}

// ------------------------------------------------------------- linearize

#[derive(Debug, Args)]
pub struct LinearizeArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    assignment: Option<PathBuf>,
    /// Which split to export.
    #[arg(long, default_value = "train")]
    split: String,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Schemas of external databases keyed by db_id, as written by `ingest`.
    #[arg(long)]
    external_schemas: Option<PathBuf>,
    /// template, paraphrase, synthetic or all.
    #[arg(long)]
    question_source: Option<String>,
    /// Token between the schema and the question.
    #[arg(long)]
    separator: Option<String>,
    /// Output training file.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn linearize(a: LinearizeArgs, config: &RunConfig) -> CliResult<()> {
    let corpus_path = required(a.corpus, &config.corpus, "corpus")?;
    let assignment_path = required(a.assignment, &config.assignment, "assignment")?;
    let schema_path = required(a.schema, &config.schema, "schema")?;
    let split: Split = parse_with(&a.split)?;
    let source: QuestionSource =
        parse_with(a.question_source.as_deref().or(config.question_source.as_deref()).unwrap_or("template"))?;
    let separator = a.separator.or_else(|| config.separator.clone()).unwrap_or_else(|| DEFAULT_SEPARATOR.to_string());
    let out = config.output(a.out, &format!("{split}.training.jsonl"));

    let corpus = load_corpus(&corpus_path)?;
    let assignment = SplitAssignment::load(&assignment_path)?;
    let schema = SchemaDef::load(&schema_path)?;
    let mut inputs = vec![corpus_path, assignment_path, schema_path];
    let external: BTreeMap<String, SchemaDef> = match a.external_schemas {
        Some(p) => {
            let p = existing(p, "external schemas")?;
            let text = std::fs::read_to_string(&p).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
            let map = serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
            inputs.push(p);
            map
        }
        None => BTreeMap::new(),
    };
    let schemas = SchemaSet::new(&schema).with_external(&external);
    let export = export_training(&corpus, &assignment, split, &schemas, source, &separator)?;
    export.save(&out, config.seed)?;
    eprintln!("wrote {} training record(s) to {}", export.records.len(), out.display());
    if export.counts.missing_paraphrase > 0 {
        eprintln!("note: {} sample(s) had no paraphrase", export.counts.missing_paraphrase);
    }
    let params = json!({ "split": split, "question_source": source, "separator": separator });
    RunRecord { command: "linearize", seed: config.seed, config: params, inputs }
        .write(&out, &json!({ "counts": export.counts }))?;
    Ok(())
}

// --------------------------------------------------------------- augment

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output corpus.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Pivot languages, comma separated.
    #[arg(long, value_delimiter = ',')]
    pivots: Option<Vec<String>>,
    /// Use the deterministic offline translator.
    #[arg(long)]
    stub: bool,
    /// Translation service base URL. MEDSQL_TRANSLATE_URL takes precedence.
    #[arg(long)]
    endpoint: Option<String>,
    /// Per-request timeout for the translation service.
    #[arg(long)]
    timeout_ms: Option<u64>,
    /// Extra attempts after a failed translation request.
    #[arg(long)]
    retries: Option<u32>,
    /// Template file; generated samples are appended before translation.
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Maximum samples generated per template.
    #[arg(long)]
    limit_per_template: Option<usize>,
    /// Database supplying slot values for --templates.
    #[arg(long)]
    db: Option<PathBuf>,
    /// Schema used to read slot values (default: read from the database).
    #[arg(long)]
    schema: Option<PathBuf>,
}

pub fn augment(a: AugmentArgs, config: &RunConfig) -> CliResult<()> {
    let out = config.output(a.out, "augmented.jsonl");
    let pivots: Vec<String> = a
        .pivots
        .or_else(|| config.pivots.clone())
        .unwrap_or_else(|| DEFAULT_PIVOTS.iter().map(|s| s.to_string()).collect());
    let env_url = std::env::var(TRANSLATE_URL_ENV).ok().filter(|s| !s.trim().is_empty());
    let endpoint_url = env_url.or(a.endpoint).or_else(|| config.endpoint.clone());
    let allowed: Vec<String> = match (&config.allowed_pivots, a.stub) {
        (Some(list), _) => list.clone(),
        (None, true) => StubTranslator::pivots().map(str::to_string).collect(),
        (None, false) => DEFAULT_PIVOTS.iter().map(|s| s.to_string()).collect(),
    };

    let mut inputs = Vec::new();
    let mut corpus = match optional(a.corpus, &config.corpus, "corpus")? {
        Some(p) => {
            let c = load_corpus(&p)?;
            inputs.push(p);
            c
        }
        None => Vec::new(),
    };
    let mut generated = 0;
    let limit = a.limit_per_template.or(config.limit_per_template).unwrap_or(DEFAULT_LIMIT_PER_TEMPLATE);
    if let Some(t) = a.templates {
        let t = existing(t, "templates")?;
        let db_path = db_path(a.db, config)?;
        let db = open_db(&db_path)?;
        let schema = match optional(a.schema, &config.schema, "schema")? {
            Some(p) => {
                let s = SchemaDef::load(&p)?;
                inputs.push(p);
                s
            }
            None => db.connect()?.schema()?,
        };
        let lookup = build_value_lookup(&db, &schema)?;
        let samples = instantiate_templates(&load_templates(&t)?, &lookup, limit)?;
        generated = samples.len();
        let mut ids: HashSet<String> = corpus.iter().map(|s| s.id.clone()).collect();
        for s in samples {
            if !ids.insert(s.id.clone()) {
                return Err(CliError::data(format!("generated sample id {} already exists in the corpus", s.id)));
            }
            corpus.push(s);
        }
        inputs.extend([t, db_path]);
    }
    if corpus.is_empty() {
        return Err(CliError::usage("nothing to augment: give --corpus and/or --templates"));
    }

    let translator: Box<dyn Translator> = if a.stub {
        Box::new(StubTranslator)
    } else {
        let url = endpoint_url.clone().ok_or_else(|| {
            CliError::usage(format!("no translation endpoint: pass --stub, --endpoint or set {TRANSLATE_URL_ENV}"))
        })?;
        let mut ep = TranslatorEndpoint::new(url);
        if let Some(ms) = a.timeout_ms.or(config.translate_timeout_ms) {
            ep.timeout_ms = ms;
        }
        if let Some(r) = a.retries.or(config.retries) {
            ep.retries = r;
        }
        Box::new(HttpTranslator::new(ep)?)
    };
    let outcome = augment_corpus(&corpus, &pivots, &allowed, translator.as_ref())?;
    let attempted = corpus.len() * pivots.len();
    if attempted > 0 && outcome.failures.len() == attempted {
        return Err(CliError::new(
            ExitKind::Environment,
            anyhow::anyhow!("every translation failed; first error: {}", outcome.failures[0].message),
        ));
    }
    save_corpus(&out, &outcome.samples, config.seed)?;
    for f in &outcome.failures {
        eprintln!("warning: {} via {}: {}", f.id, f.pivot, f.message);
    }
    eprintln!(
        "added {} paraphrase(s), dropped {} degenerate, {} failure(s); wrote {}",
        outcome.added,
        outcome.degenerate,
        outcome.failures.len(),
        out.display()
    );
    let params = json!({
        "pivots": pivots,
        "allowed_pivots": allowed,
        "translator": if a.stub { "stub".to_string() } else { endpoint_url.unwrap_or_default() },
        "limit_per_template": limit,
    });
    let summary = json!({
        "samples": outcome.samples.len(),
        "generated": generated,
        "added": outcome.added,
        "degenerate": outcome.degenerate,
        "failures": outcome.failures,
    });
    RunRecord { command: "augment", seed: config.seed, config: params, inputs }.write(&out, &summary)?;
    Ok(())
}

// ---------------------------------------------------------------- rerank

#[derive(Debug, Args)]
pub struct RerankArgs {
    /// Beam prediction file.
    #[arg(long)]
    preds: Option<PathBuf>,
    #[arg(long)]
    db: Option<PathBuf>,
    /// Output single-prediction file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Treat empty results as execution failures.
    #[arg(long)]
    require_nonempty: bool,
    /// Per-query limit; 0 disables it.
    #[arg(long)]
    timeout_ms: Option<u64>,
}

pub fn rerank(a: RerankArgs, config: &RunConfig) -> CliResult<()> {
    let preds_path = required(a.preds, &config.preds, "preds")?;
    let db_path = db_path(a.db, config)?;
    let out = config.output(a.out, "reranked.jsonl");
    let (ms, timeout) = timeout(a.timeout_ms, config);
    let opts = RerankOptions { require_nonempty: switch(a.require_nonempty, config.require_nonempty), timeout };
    let preds = PredictionFile::load(&preds_path)?;
    let db = open_db(&db_path)?;
    let result = rerank_file(&preds, &db, &opts)?;
    result.save(&out, config.seed)?;
    let all_failed = result
        .records()
        .iter()
        .filter(|r| r.extra.get("all_failed").and_then(Value::as_bool) == Some(true))
        .count();
    eprintln!("reranked {} record(s), {} with no executable candidate", result.len(), all_failed);
    let params = json!({ "require_nonempty": opts.require_nonempty, "timeout_ms": ms });
    RunRecord { command: "rerank", seed: config.seed, config: params, inputs: vec![preds_path, db_path] }
        .write(&out, &json!({ "records": result.len(), "all_failed": all_failed }))?;
    Ok(())
}

// --------------------------------------------------------------- recover

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[arg(long)]
    preds: Option<PathBuf>,
    /// Database whose stored values form the look-up table.
    #[arg(long)]
    db: Option<PathBuf>,
    /// Schema to read values with (default: read from the database).
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Score every stored value instead of pruning large sets first.
    #[arg(long)]
    no_prefilter: bool,
}

pub fn recover(a: RecoverArgs, config: &RunConfig) -> CliResult<()> {
    let preds_path = required(a.preds, &config.preds, "preds")?;
    let db_path = db_path(a.db, config)?;
    let out = config.output(a.out, "recovered.jsonl");
    let prefilter = !a.no_prefilter && config.prefilter.unwrap_or(true);
    let preds = PredictionFile::load(&preds_path)?;
    let db = open_db(&db_path)?;
    let mut inputs = vec![preds_path, db_path];
    let schema = match optional(a.schema, &config.schema, "schema")? {
        Some(p) => {
            let s = SchemaDef::load(&p)?;
            inputs.push(p);
            s
        }
        None => db.connect()?.schema()?,
    };
    let lookup = build_value_lookup(&db, &schema)?;
    let result = recover_file(&preds, &lookup, RecoveryOptions { prefilter });
    result.save(&out, config.seed)?;
    let replaced: u64 = result.records().iter().filter_map(|r| r.extra.get("recovered").and_then(Value::as_u64)).sum();
    eprintln!("recovered {replaced} value(s) across {} record(s)", result.len());
    RunRecord { command: "recover", seed: config.seed, config: json!({ "prefilter": prefilter }), inputs }
        .write(&out, &json!({ "records": result.len(), "replacements": replaced }))?;
    Ok(())
}

// ------------------------------------------------------------------ eval

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    preds: Option<PathBuf>,
    #[arg(long)]
    db: Option<PathBuf>,
    /// Assignment file; required with --split.
    #[arg(long)]
    assignment: Option<PathBuf>,
    /// Score only this split (default: the whole corpus, or test when an
    /// assignment is given).
    #[arg(long)]
    split: Option<String>,
    /// Report file (default: <out_dir>/report.json).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fail when any sample has no prediction.
    #[arg(long)]
    strict: bool,
    /// Add per-component match rates.
    #[arg(long)]
    breakdown: bool,
    /// Per-query limit; 0 disables it.
    #[arg(long)]
    timeout_ms: Option<u64>,
}

pub fn eval(a: EvalArgs, config: &RunConfig) -> CliResult<()> {
    let corpus_path = required(a.corpus, &config.corpus, "corpus")?;
    let preds_path = required(a.preds, &config.preds, "preds")?;
    let db_path = db_path(a.db, config)?;
    let assignment_path = optional(a.assignment, &config.assignment, "assignment")?;
    let split = match (&a.split, &assignment_path) {
        (Some(s), Some(_)) => Some(parse_with::<Split>(s)?),
        (Some(_), None) => return Err(CliError::usage("--split needs --assignment (or `assignment` in the config file)")),
        (None, Some(_)) => Some(Split::Test),
        (None, None) => None,
    };
    let out = config.output(a.out, "report.json");
    let (ms, timeout) = timeout(a.timeout_ms, config);
    let opts = EvalOptions {
        strict: switch(a.strict, config.strict),
        breakdown: switch(a.breakdown, config.breakdown),
        timeout,
    };

    let corpus = load_corpus(&corpus_path)?;
    let preds = PredictionFile::load(&preds_path)?;
    let db = open_db(&db_path)?;
    let mut inputs = vec![corpus_path, preds_path, db_path];
    let selected: Vec<Sample> = match (split, assignment_path) {
        (Some(split), Some(p)) => {
            let assignment = SplitAssignment::load(&p)?;
            inputs.push(p);
            assignment.select(&corpus, split).into_iter().cloned().collect()
        }
        _ => corpus,
    };
    let report = evaluate(&selected, &preds, &db, &opts)?;
    write_atomic(&out, report.to_json().as_bytes())?;
    println!(
        "n={} acc_lf={:.4} acc_ex={:.4} gold_errors={} missing={}",
        report.n,
        report.acc_lf,
        report.acc_ex,
        report.gold_errors.len(),
        report.missing.len()
    );
    let params = json!({
        "split": split,
        "strict": opts.strict,
        "breakdown": opts.breakdown,
        "timeout_ms": ms,
    });
    RunRecord { command: "eval", seed: config.seed, config: params, inputs }
        .write(&out, &json!({ "n": report.n, "acc_lf": report.acc_lf, "acc_ex": report.acc_ex }))?;
    Ok(())
}
