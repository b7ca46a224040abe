use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranslateError {
    #[error("translation endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("translation request failed: {0}")]
    Transport(String),
    #[error("malformed translation response: {0}")]
    Response(String),
    #[error("translator cannot handle {src} -> {tgt}")]
    Unsupported { src: String, tgt: String },
}

/// Anything that maps text from one language to another.
pub trait Translator: Send + Sync {
    fn translate(&self, text: &str, src: &str, tgt: &str) -> Result<String, TranslateError>;
}

/// Offline translator with a known round trip.
///
/// Going out of English, every word is reversed and the text is tagged with
/// the pivot. Coming back, the words are restored and a small per-pivot
/// phrase table is applied, standing in for the drift of a real system. A
/// question that contains none of the table's phrases comes back unchanged.
///
/// ```
/// use medsql::augment::{StubTranslator, Translator};
/// let t = StubTranslator;
/// let out = t.translate("How many patients are male?", "en", "fr").unwrap();
/// assert_eq!(t.translate(&out, "fr", "en").unwrap(), "what number of individuals are male?");
/// ```
#[derive(Debug, Clone, Copy, Default)]
pub struct StubTranslator;

const STUB_PHRASES: &[(&str, &[(&str, &str)])] = &[
    ("fr", &[("how many", "what number of"), ("patients", "individuals"), ("show", "display"), ("list", "enumerate")]),
    ("de", &[("how many", "how much"), ("patients", "people"), ("what is", "tell me"), ("give", "provide")]),
];

impl StubTranslator {
    fn phrases(pivot: &str) -> Option<&'static [(&'static str, &'static str)]> {
        STUB_PHRASES.iter().find(|(p, _)| *p == pivot).map(|(_, t)| *t)
    }

    pub fn pivots() -> impl Iterator<Item = &'static str> {
        STUB_PHRASES.iter().map(|(p, _)| *p)
    }

    fn tag(pivot: &str) -> String {
        format!("<{pivot}>")
    }
}

fn reverse_words(text: &str) -> String {
    text.split_whitespace().map(|w| w.chars().rev().collect::<String>()).collect::<Vec<_>>().join(" ")
}

fn split_punct(word: &str) -> (&str, &str) {
    let cut = word.trim_end_matches(|c: char| !c.is_alphanumeric()).len();
    word.split_at(cut)
}

/// Replace whole-word phrase matches, case-insensitively. Trailing
/// punctuation on the last matched word is kept.
fn apply_phrases(text: &str, table: &[(&str, &str)]) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut out: Vec<String> = Vec::new();
    let mut i = 0;
    'outer: while i < words.len() {
        for (from, to) in table {
            let pat: Vec<&str> = from.split(' ').collect();
            if i + pat.len() > words.len() {
                continue;
            }
            let window = &words[i..i + pat.len()];
            let last = window.len() - 1;
            let matches = window.iter().enumerate().all(|(k, w)| {
                let core = if k == last { split_punct(w).0 } else { w };
                core.eq_ignore_ascii_case(pat[k])
            });
            if matches {
                let tail = split_punct(window[last]).1;
                out.push(format!("{to}{tail}"));
                i += pat.len();
                continue 'outer;
            }
        }
        out.push(words[i].to_string());
        i += 1;
    }
    out.join(" ")
}

impl Translator for StubTranslator {
    fn translate(&self, text: &str, src: &str, tgt: &str) -> Result<String, TranslateError> {
        let unsupported = || TranslateError::Unsupported { src: src.to_string(), tgt: tgt.to_string() };
        if src == "en" && Self::phrases(tgt).is_some() {
            return Ok(format!("{} {}", Self::tag(tgt), reverse_words(text)));
        }
        if tgt == "en" {
            if let Some(table) = Self::phrases(src) {
                let body = text.strip_prefix(&Self::tag(src)).ok_or_else(unsupported)?;
                return Ok(apply_phrases(&reverse_words(body), table));
            }
        }
        Err(unsupported())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslatorEndpoint {
    pub base_url: String,
    pub timeout_ms: u64,
    /// Extra attempts after the first failure.
    pub retries: u32,
}

impl TranslatorEndpoint {
    pub fn new(base_url: impl Into<String>) -> Self {
        TranslatorEndpoint { base_url: base_url.into(), timeout_ms: 30_000, retries: 2 }
    }
}

#[derive(Serialize)]
struct TranslateRequest<'a> {
    text: &'a str,
    src: &'a str,
    tgt: &'a str,
}

#[derive(Deserialize)]
struct TranslateResponse {
    text: String,
}

/// Client for `POST {base_url}/translate`. Any non-200 reply or transport
/// failure is retried.
pub struct HttpTranslator {
    endpoint: TranslatorEndpoint,
    client: reqwest::blocking::Client,
    backoff: Duration,
}

impl HttpTranslator {
    pub fn new(endpoint: TranslatorEndpoint) -> Result<Self, TranslateError> {
        if endpoint.timeout_ms == 0 {
            return Err(TranslateError::Transport("timeout must be positive".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(endpoint.timeout_ms))
            .build()
            .map_err(|e| TranslateError::Transport(e.to_string()))?;
        Ok(HttpTranslator { endpoint, client, backoff: Duration::from_millis(100) })
    }

    /// Pause between attempts, doubled after each failure.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    fn attempt(&self, body: &TranslateRequest<'_>) -> Result<String, TranslateError> {
        let url = format!("{}/translate", self.endpoint.base_url.trim_end_matches('/'));
        let resp = self.client.post(url).json(body).send().map_err(|e| TranslateError::Transport(e.to_string()))?;
        let status = resp.status();
        if status != reqwest::StatusCode::OK {
            let text = resp.text().unwrap_or_default();
            return Err(TranslateError::Status { status: status.as_u16(), body: text.chars().take(200).collect() });
        }
        resp.json::<TranslateResponse>().map(|r| r.text).map_err(|e| TranslateError::Response(e.to_string()))
    }
}

impl Translator for HttpTranslator {
    fn translate(&self, text: &str, src: &str, tgt: &str) -> Result<String, TranslateError> {
        let body = TranslateRequest { text, src, tgt };
        let mut wait = self.backoff;
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Ok(t) => return Ok(t),
                Err(e @ TranslateError::Response(_)) => return Err(e),
                Err(e) if attempt >= self.endpoint.retries => return Err(e),
                Err(_) => {
                    attempt += 1;
                    thread::sleep(wait);
                    wait *= 2;
                }
            }
        }
    }
}
