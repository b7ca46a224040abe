//! Synthetic paraphrases by round-trip translation, and new question/SQL
//! pairs from slot templates.

mod templates;
mod translate;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::store::{Sample, SyntheticParaphrase};

pub use templates::{instantiate_templates, load_templates, QuestionTemplate, SlotBinding, TemplateError};
pub use translate::{HttpTranslator, StubTranslator, TranslateError, Translator, TranslatorEndpoint};

pub const DEFAULT_PIVOTS: [&str; 2] = ["fr", "de"];
pub const SOURCE_LANGUAGE: &str = "en";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AugmentError {
    #[error("pivot language {pivot:?} is not in the allowed set {allowed:?}")]
    UnsupportedPivot { pivot: String, allowed: Vec<String> },
    #[error(transparent)]
    Translate(#[from] TranslateError),
}

fn check_pivot(pivot: &str, allowed: &[String]) -> Result<(), AugmentError> {
    if allowed.iter().any(|p| p == pivot) {
        Ok(())
    } else {
        Err(AugmentError::UnsupportedPivot { pivot: pivot.to_string(), allowed: allowed.to_vec() })
    }
}

/// English to `pivot` and back, with whitespace collapsed. `pivot` must be
/// one of `allowed`; that is checked before any call is made.
pub fn back_translate(
    question: &str,
    pivot: &str,
    allowed: &[String],
    translator: &dyn Translator,
) -> Result<String, AugmentError> {
    check_pivot(pivot, allowed)?;
    let there = translator.translate(question, SOURCE_LANGUAGE, pivot)?;
    let back = translator.translate(&there, pivot, SOURCE_LANGUAGE)?;
    Ok(back.split_whitespace().collect::<Vec<_>>().join(" "))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentFailure {
    pub id: String,
    pub pivot: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AugmentOutcome {
    pub samples: Vec<Sample>,
    pub added: usize,
    /// Round trips identical to the source question, which were dropped.
    pub degenerate: usize,
    pub failures: Vec<AugmentFailure>,
}

/// Back-translate every template question through every pivot. Existing
/// paraphrases for the same pivot are replaced, so re-running is stable.
/// Samples are processed on the current rayon pool and returned in input
/// order; ids, questions and gold SQL are never modified.
pub fn augment_corpus(
    corpus: &[Sample],
    pivots: &[String],
    allowed: &[String],
    translator: &dyn Translator,
) -> Result<AugmentOutcome, AugmentError> {
    for p in pivots {
        check_pivot(p, allowed)?;
    }
    enum Step {
        Added(SyntheticParaphrase),
        Degenerate,
        Failed(AugmentFailure),
    }
    let per_sample: Vec<(Sample, Vec<Step>)> = corpus
        .par_iter()
        .map(|s| {
            let steps: Vec<Step> = pivots
                .iter()
                .map(|p| match back_translate(&s.template_question, p, allowed, translator) {
                    Ok(text) if text == s.template_question => Step::Degenerate,
                    Ok(text) => Step::Added(SyntheticParaphrase { text, pivot: p.clone() }),
                    Err(e) => Step::Failed(AugmentFailure { id: s.id.clone(), pivot: p.clone(), message: e.to_string() }),
                })
                .collect();
            (s.clone(), steps)
        })
        .collect();
    let mut out = AugmentOutcome::default();
    for (mut s, steps) in per_sample {
        s.synthetic_paraphrases.retain(|sp| !pivots.contains(&sp.pivot));
        for step in steps {
            match step {
                Step::Added(sp) => {
                    s.synthetic_paraphrases.push(sp);
                    out.added += 1;
                }
                Step::Degenerate => out.degenerate += 1,
                Step::Failed(f) => out.failures.push(f),
            }
        }
        out.samples.push(s);
    }
    Ok(out)
}
