use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::sql::{parse_sql, SqlError};
use crate::store::{Sample, ValueLookup};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotBinding {
    pub table: String,
    pub column: String,
}

/// A question pattern and its SQL, with `[NAME]` slots filled from stored
/// column values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionTemplate {
    pub id: String,
    pub text_pattern: String,
    pub sql_pattern: String,
    pub slots: BTreeMap<String, SlotBinding>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TemplateError {
    #[error("template {template}: slot [{slot}] is bound to {table}.{column}, which has no stored values")]
    UnboundSlot { template: String, slot: String, table: String, column: String },
    #[error("template {template}: column {table}.{column} for slot [{slot}] has an empty value set")]
    EmptyValueSet { template: String, slot: String, table: String, column: String },
    #[error("template {template}: slots differ between question ({text:?}), SQL ({sql:?}) and bindings ({bound:?})")]
    SlotMismatch { template: String, text: Vec<String>, sql: Vec<String>, bound: Vec<String> },
    #[error("template {template}: generated SQL does not parse: {source}")]
    BadSql { template: String, source: SqlError },
    #[error("template file: {0}")]
    File(String),
}

fn is_slot_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

/// Split a pattern into literal text and slot names.
enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn pieces(pattern: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let mut rest = pattern;
    while let Some(open) = rest.find('[') {
        let Some(close) = rest[open..].find(']').map(|c| open + c) else { break };
        let name = &rest[open + 1..close];
        if is_slot_name(name) {
            out.push(Piece::Text(&rest[..open]));
            out.push(Piece::Slot(name));
        } else {
            out.push(Piece::Text(&rest[..=close]));
        }
        rest = &rest[close + 1..];
    }
    out.push(Piece::Text(rest));
    out
}

fn slot_names(pattern: &str) -> BTreeSet<String> {
    pieces(pattern)
        .into_iter()
        .filter_map(|p| match p {
            Piece::Slot(s) => Some(s.to_string()),
            Piece::Text(_) => None,
        })
        .collect()
}

fn fill_text(pattern: &str, values: &BTreeMap<&str, &str>) -> String {
    pieces(pattern)
        .into_iter()
        .map(|p| match p {
            Piece::Text(t) => t,
            Piece::Slot(s) => values[s],
        })
        .collect()
}

/// Substitute into SQL, escaping the value for whichever quote encloses
/// the slot. Unquoted slots are inserted verbatim.
fn fill_sql(pattern: &str, values: &BTreeMap<&str, &str>) -> String {
    let mut out = String::new();
    for p in pieces(pattern) {
        match p {
            Piece::Text(t) => out.push_str(t),
            Piece::Slot(s) => {
                let v = values[s];
                match out.chars().last() {
                    Some(q @ ('"' | '\'')) => out.push_str(&v.replace(q, &format!("{q}{q}"))),
                    _ => out.push_str(v),
                }
            }
        }
    }
    out
}

impl QuestionTemplate {
    fn check_slots(&self) -> Result<(), TemplateError> {
        let text = slot_names(&self.text_pattern);
        let sql = slot_names(&self.sql_pattern);
        let bound: BTreeSet<String> = self.slots.keys().cloned().collect();
        if text != sql || sql != bound {
            return Err(TemplateError::SlotMismatch {
                template: self.id.clone(),
                text: text.into_iter().collect(),
                sql: sql.into_iter().collect(),
                bound: bound.into_iter().collect(),
            });
        }
        Ok(())
    }
}

fn sample_id(template: &str, values: &[&str]) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.as_bytes());
        h.update([0x1f]);
    }
    format!("{template}-{}", &hex::encode(h.finalize())[..12])
}

/// Generate up to `limit_per_template` samples per template. Value
/// combinations are enumerated in canonical order: slots sorted by name,
/// values in lexicographic order, the last slot varying fastest.
pub fn instantiate_templates(
    templates: &[QuestionTemplate],
    lookup: &ValueLookup,
    limit_per_template: usize,
) -> Result<Vec<Sample>, TemplateError> {
    let mut out = Vec::new();
    for t in templates {
        t.check_slots()?;
        let mut domains: Vec<(&str, Vec<&str>)> = Vec::new();
        for (slot, b) in &t.slots {
            let err = |empty: bool| {
                let (template, slot, table, column) = (t.id.clone(), slot.clone(), b.table.clone(), b.column.clone());
                if empty {
                    TemplateError::EmptyValueSet { template, slot, table, column }
                } else {
                    TemplateError::UnboundSlot { template, slot, table, column }
                }
            };
            let set = lookup.get(&b.table, &b.column).ok_or_else(|| err(false))?;
            if set.values.is_empty() {
                return Err(err(true));
            }
            domains.push((slot, set.values.iter().map(String::as_str).collect()));
        }
        let mut idx = vec![0usize; domains.len()];
        let mut produced = 0;
        while produced < limit_per_template {
            let chosen: Vec<&str> = domains.iter().zip(&idx).map(|((_, vals), &i)| vals[i]).collect();
            let values: BTreeMap<&str, &str> = domains.iter().map(|(s, _)| *s).zip(chosen.iter().copied()).collect();
            let sql = fill_sql(&t.sql_pattern, &values);
            parse_sql(&sql).map_err(|source| TemplateError::BadSql { template: t.id.clone(), source })?;
            out.push(Sample::new(sample_id(&t.id, &chosen), fill_text(&t.text_pattern, &values), sql));
            produced += 1;
            // Odometer step; stop once every combination is used.
            let mut k = domains.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < domains[k].1.len() {
                    break;
                }
                idx[k] = 0;
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    Ok(out)
}

/// Templates are stored as a JSON array of [`QuestionTemplate`] objects.
pub fn load_templates(path: &Path) -> Result<Vec<QuestionTemplate>, TemplateError> {
    let text = std::fs::read_to_string(path).map_err(|e| TemplateError::File(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| TemplateError::File(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::ColumnAttr;

    fn lookup() -> ValueLookup {
        let mut l = ValueLookup::new();
        l.insert("DEMOGRAPHIC", "LANGUAGE", ColumnAttr::Text, ["PORTUGUESE", "ENGLISH", "HAITIAN"]);
        l.insert("DEMOGRAPHIC", "GENDER", ColumnAttr::Text, ["F", "M"]);
        l.insert("DEMOGRAPHIC", "NAME", ColumnAttr::Text, ["Jane \"JJ\" Roe", "O'Hara"]);
        l.insert("DEMOGRAPHIC", "EMPTY", ColumnAttr::Text, Vec::<String>::new());
        l
    }

    fn language_template() -> QuestionTemplate {
        QuestionTemplate {
            id: "lang".into(),
            text_pattern: "How many patients have language [BLANK]?".into(),
            sql_pattern: r#"SELECT COUNT(DISTINCT DEMOGRAPHIC.SUBJECT_ID) FROM DEMOGRAPHIC WHERE DEMOGRAPHIC.LANGUAGE = "[BLANK]""#.into(),
            slots: BTreeMap::from([("BLANK".into(), SlotBinding { table: "DEMOGRAPHIC".into(), column: "LANGUAGE".into() })]),
        }
    }

    #[test]
    fn one_sample_per_distinct_value() {
        let got = instantiate_templates(&[language_template()], &lookup(), 10).unwrap();
        let qs: Vec<_> = got.iter().map(|s| s.template_question.as_str()).collect();
        assert_eq!(qs, [
            "How many patients have language ENGLISH?",
            "How many patients have language HAITIAN?",
            "How many patients have language PORTUGUESE?",
        ]);
        let two = instantiate_templates(&[language_template()], &lookup(), 2).unwrap();
        assert_eq!(two, got[..2]);
        assert_eq!(got, instantiate_templates(&[language_template()], &lookup(), 10).unwrap());
        let ids: BTreeSet<_> = got.iter().map(|s| &s.id).collect();
        assert_eq!(ids.len(), 3);
    }

    #[test]
    fn cartesian_product_and_escaping() {
        let t = QuestionTemplate {
            id: "pair".into(),
            text_pattern: "Is [NAME] of gender [G]?".into(),
            sql_pattern: r#"SELECT * FROM DEMOGRAPHIC WHERE DEMOGRAPHIC.NAME = "[NAME]" AND DEMOGRAPHIC.GENDER = '[G]'"#.into(),
            slots: BTreeMap::from([
                ("NAME".into(), SlotBinding { table: "DEMOGRAPHIC".into(), column: "NAME".into() }),
                ("G".into(), SlotBinding { table: "DEMOGRAPHIC".into(), column: "GENDER".into() }),
            ]),
        };
        let got = instantiate_templates(&[t], &lookup(), 100).unwrap();
        assert_eq!(got.len(), 4);
        assert_eq!(got[0].template_question, "Is Jane \"JJ\" Roe of gender F?");
        assert!(got[0].gold_sql.contains(r#"= "Jane ""JJ"" Roe""#));
        // Slots are ordered by name, so G varies slower than NAME.
        assert_eq!(got[1].template_question, "Is O'Hara of gender F?");
        assert_eq!(got[2].template_question, "Is Jane \"JJ\" Roe of gender M?");
        assert!(got[1].gold_sql.contains("'F'"));
        let q = parse_sql(&got[0].gold_sql).unwrap();
        assert_eq!(q.conditions[0].value.as_text(), Some("Jane \"JJ\" Roe"));
    }

    #[test]
    fn errors() {
        let mut t = language_template();
        t.slots.get_mut("BLANK").unwrap().column = "NOPE".into();
        assert!(matches!(instantiate_templates(&[t.clone()], &lookup(), 1), Err(TemplateError::UnboundSlot { .. })));
        t.slots.get_mut("BLANK").unwrap().column = "EMPTY".into();
        assert!(matches!(instantiate_templates(&[t.clone()], &lookup(), 1), Err(TemplateError::EmptyValueSet { .. })));
        let mut m = language_template();
        m.text_pattern = "How many patients speak [OTHER]?".into();
        assert!(matches!(instantiate_templates(&[m], &lookup(), 1), Err(TemplateError::SlotMismatch { .. })));
    }
}
