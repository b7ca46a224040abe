mod common;

use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::Path;

use serde_json::{json, Value};

use medsql::fixture::{write_fixture, Fixture};
use medsql::store::load_corpus;

use common::*;

fn fixture(dir: &Path, n: usize) -> Fixture {
    write_fixture(&dir.join("fx"), n).unwrap()
}

fn manifest(out: &Path) -> Value {
    let path = out.with_file_name(format!("{}.manifest.json", out.file_name().unwrap().to_str().unwrap()));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&medsql(&["bogus"])), 1);
    assert_eq!(code(&medsql(&[])), 1);
    assert_eq!(code(&medsql(&["split", "--no-such-flag"])), 1);
    assert_eq!(code(&medsql(&["eval", "--preds", "x.jsonl"])), 1);
    assert_eq!(code(&medsql(&["--jobs", "0", "stats", "--corpus", "a", "--schema", "b"])), 1);
    let help = medsql(&["--help"]);
    assert_eq!(code(&help), 0);
    for sub in ["ingest", "stats", "split", "linearize", "augment", "rerank", "recover", "eval"] {
        assert!(stdout(&help).contains(sub), "{sub} missing from help");
    }
    assert_eq!(code(&medsql(&["--version"])), 0);
}

#[test]
fn data_and_environment_errors() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path(), 50);
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{not json\n").unwrap();
    let out = medsql(&["eval", "--corpus", p(&bad), "--preds", p(&bad), "--db", p(&fx.db), "--out", p(&dir.path().join("r.json"))]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("error"));

    let missing_db = medsql(&["rerank", "--preds", p(&bad), "--db", p(&dir.path().join("none.db"))]);
    // The prediction file is read first, so the malformed input wins.
    assert_eq!(code(&missing_db), 2);
    let preds = dir.path().join("p.jsonl");
    write_single_preds(&preds, &[("a".into(), "SELECT * FROM DEMOGRAPHIC".into())]);
    let missing_db = medsql(&["rerank", "--preds", p(&preds), "--db", p(&dir.path().join("none.db"))]);
    assert_eq!(code(&missing_db), 3);

    let strict = medsql(&[
        "eval", "--corpus", p(&fx.corpus), "--preds", p(&preds), "--db", p(&fx.db), "--strict", "--out",
        p(&dir.path().join("s.json")),
    ]);
    assert_eq!(code(&strict), 2);
    assert!(stderr(&strict).contains("missing predictions"));
}

#[test]
fn ingest_builds_database_and_imports_release() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path(), 20);
    let db = dir.path().join("built.db");
    let mut args = vec!["ingest".to_string(), "--schema".into(), p(&fx.schema).into(), "--db".into(), p(&db).into()];
    for (name, path) in &fx.tables {
        args.push("--table".into());
        args.push(format!("{name}={}", p(path)));
    }
    let out = medsql(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(manifest(&db)["command"], "ingest");

    let release = dir.path().join("release.json");
    let para = dir.path().join("para.json");
    write_lines(&release, &[
        json!({ "question_refine": "how many patients are male?", "sql": "SELECT COUNT(DISTINCT DEMOGRAPHIC.SUBJECT_ID) FROM DEMOGRAPHIC WHERE DEMOGRAPHIC.GENDER = 'M'" }),
        json!({ "question_refine": "list the names", "sql": "SELECT DEMOGRAPHIC.NAME FROM DEMOGRAPHIC" }),
    ]);
    write_lines(&para, &[json!({ "question_refine": "count the men" }), json!({ "question_refine": "give all names" })]);
    let corpus = dir.path().join("corpus.jsonl");
    let out = medsql(&[
        "ingest", "--schema", p(&fx.schema), "--release", p(&release), "--paraphrases", p(&para), "--out", p(&corpus),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let samples = load_corpus(&corpus).unwrap();
    assert_eq!(samples.len(), 2);
    assert_eq!(samples[1].paraphrase_question.as_deref(), Some("give all names"));

    // Queries against the rebuilt database give the fixture's answers.
    let preds = dir.path().join("p.jsonl");
    write_single_preds(&preds, &samples.iter().map(|s| (s.id.clone(), s.gold_sql.clone())).collect::<Vec<_>>());
    let report = dir.path().join("report.json");
    let out = medsql(&["eval", "--corpus", p(&corpus), "--preds", p(&preds), "--db", p(&db), "--out", p(&report)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("acc_ex=1.0000"));
}

#[test]
fn ingest_merges_external_corpus_and_linearizes_it() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path(), 40);
    let examples = dir.path().join("train_spider.json");
    let tables = dir.path().join("tables.json");
    std::fs::write(
        &examples,
        json!([
            { "db_id": "concert_singer", "question": "How many singers are there?", "query": "SELECT count(*) FROM singer" },
            { "db_id": "concert_singer", "question": "Nested", "query": "SELECT name FROM singer WHERE age > (SELECT avg(age) FROM singer)" },
        ])
        .to_string(),
    )
    .unwrap();
    std::fs::write(
        &tables,
        json!([{
            "db_id": "concert_singer",
            "table_names_original": ["singer"],
            "column_names_original": [[-1, "*"], [0, "name"], [0, "age"]],
            "column_types": ["text", "text", "number"],
        }])
        .to_string(),
    )
    .unwrap();
    let merged = dir.path().join("merged.jsonl");
    let base = ["ingest", "--corpus", p(&fx.corpus), "--spider-examples", p(&examples), "--spider-tables", p(&tables), "--out", p(&merged)];
    assert_eq!(code(&medsql(&base)), 2);
    let mut lenient = base.to_vec();
    lenient.push("--lenient");
    let out = medsql(&lenient);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(load_corpus(&merged).unwrap().len(), 41);
    assert_eq!(manifest(&merged)["summary"]["external_skipped"], 1);

    // External samples never carry a designated main table, so they train.
    let split = dir.path().join("split.tsv");
    assert_eq!(code(&medsql(&["split", "--corpus", p(&merged), "--out", p(&split), "--test-size", "2"])), 0);
    let train = dir.path().join("train.jsonl");
    let schemas = dir.path().join("merged.jsonl.schemas.json");
    let out = medsql(&[
        "linearize", "--corpus", p(&merged), "--assignment", p(&split), "--schema", p(&fx.schema),
        "--external-schemas", p(&schemas), "--out", p(&train),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let records = jsonl(&train);
    let external = records.iter().find(|r| r["target"] == "SELECT count(*) FROM singer").unwrap();
    assert_eq!(external["input"], "* singer name text age number [SEP] How many singers are there?");
}

#[test]
fn stats_prints_versioned_json() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path(), 30);
    let out_file = dir.path().join("stats.json");
    let out = medsql(&["stats", "--corpus", p(&fx.corpus), "--schema", p(&fx.schema), "--out", p(&out_file)]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["n_samples"], 30);
    assert_eq!(std::fs::read_to_string(&out_file).unwrap(), stdout(&out));
}

#[test]
fn config_flags_and_environment_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path(), 200);
    let cfg = dir.path().join("run.toml");
    let out_dir = dir.path().join("out");
    std::fs::create_dir(&out_dir).unwrap();
    std::fs::write(
        &cfg,
        format!(
            "corpus = {:?}\ndb = {:?}\nout_dir = {:?}\nseed = 11\ntest_size = 5\nendpoint = \"http://127.0.0.1:1\"\n",
            p(&fx.corpus),
            p(&fx.db),
            p(&out_dir)
        ),
    )
    .unwrap();

    // Config supplies everything.
    let out = medsql(&["--config", p(&cfg), "split"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let m = manifest(&out_dir.join("split.tsv"));
    assert_eq!(m["seed"], 11);
    assert_eq!(m["config"]["test_size"], 5);
    assert!(std::fs::read_to_string(out_dir.join("split.tsv")).unwrap().starts_with("# format_version=1 seed=11"));

    // A flag beats the config.
    let out = medsql(&["--config", p(&cfg), "split", "--seed", "12"]);
    assert_eq!(code(&out), 0);
    assert_eq!(manifest(&out_dir.join("split.tsv"))["seed"], 12);

    // The environment beats both for the endpoint.
    let server = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", server.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut served = 0;
        for stream in server.incoming() {
            let mut stream = stream.unwrap();
            let mut buf = vec![0u8; 65536];
            let mut got = Vec::new();
            // Read headers and body, using Content-Length.
            loop {
                let n = stream.read(&mut buf).unwrap();
                got.extend_from_slice(&buf[..n]);
                let text = String::from_utf8_lossy(&got);
                if let Some(h) = text.find("\r\n\r\n") {
                    let len: usize = text[..h]
                        .lines()
                        .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse().unwrap()))
                        .unwrap_or(0);
                    if got.len() >= h + 4 + len {
                        break;
                    }
                }
                if n == 0 {
                    break;
                }
            }
            let text = String::from_utf8_lossy(&got);
            let body: Value = serde_json::from_str(&text[text.find("\r\n\r\n").unwrap() + 4..]).unwrap();
            let reply = json!({ "text": format!("{} ({})", body["text"].as_str().unwrap(), body["tgt"].as_str().unwrap()) }).to_string();
            write!(stream, "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}", reply.len()).unwrap();
            served += 1;
            if served == 4 {
                break;
            }
        }
        served
    });
    let small = dir.path().join("small.jsonl");
    let corpus = load_corpus(&fx.corpus).unwrap();
    medsql::store::save_corpus(&small, &corpus[..1], None).unwrap();
    let aug = dir.path().join("aug.jsonl");
    let out = medsql_env(
        &["--config", p(&cfg), "augment", "--corpus", p(&small), "--out", p(&aug), "--endpoint", "http://127.0.0.1:2"],
        &[("MEDSQL_TRANSLATE_URL", &url)],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(handle.join().unwrap(), 4);
    let got = load_corpus(&aug).unwrap();
    let pivots: Vec<&str> = got[0].synthetic_paraphrases.iter().map(|s| s.pivot.as_str()).collect();
    assert_eq!(pivots, ["fr", "de"]);
    assert_eq!(manifest(&aug)["config"]["translator"], url);

    // With no reachable endpoint every call fails: environment error.
    let out = medsql(&["--config", p(&cfg), "augment", "--corpus", p(&small), "--out", p(&aug), "--retries", "0"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn manifests_record_inputs_and_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path(), 100);
    let beams = dir.path().join("beams.jsonl");
    let corpus = load_corpus(&fx.corpus).unwrap();
    let lines: Vec<Value> = corpus
        .iter()
        .take(10)
        .map(|s| json!({ "id": s.id, "candidates": [{ "sql": "SELECT X.Y FROM X", "score": 0.0 }, { "sql": s.gold_sql, "score": -1.0 }] }))
        .collect();
    write_lines(&beams, &lines);
    let reranked = dir.path().join("reranked.jsonl");
    let recovered = dir.path().join("recovered.jsonl");
    let report = dir.path().join("report.json");
    assert_eq!(code(&medsql(&["rerank", "--preds", p(&beams), "--db", p(&fx.db), "--out", p(&reranked), "--timeout-ms", "0"])), 0);
    assert_eq!(code(&medsql(&["recover", "--preds", p(&reranked), "--db", p(&fx.db), "--out", p(&recovered), "--no-prefilter"])), 0);
    let out = medsql(&["eval", "--corpus", p(&fx.corpus), "--preds", p(&recovered), "--db", p(&fx.db), "--out", p(&report), "--breakdown"]);
    assert_eq!(code(&out), 0);

    let m = manifest(&report);
    assert_eq!(m["format_version"], 1);
    assert_eq!(m["tool"], "medsql");
    assert_eq!(m["command"], "eval");
    assert_eq!(m["inputs"].as_array().unwrap().len(), 3);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m["config"]["breakdown"], true);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["format_version"], 1);
    assert_eq!(r["n"], 100);
    assert_eq!(r["n_ex"], 10);
    assert_eq!(r["missing"].as_array().unwrap().len(), 90);
    assert!(r["breakdown"].is_object());
    assert_eq!(manifest(&recovered)["config"]["prefilter"], false);
    assert_eq!(manifest(&reranked)["config"]["timeout_ms"], 0);
    for line in jsonl(&reranked) {
        assert_eq!(line["chosen_rank"], 2);
    }
}
