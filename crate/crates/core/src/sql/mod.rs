//! The restricted SQL dialect used by the MIMICSQL benchmark.
//!
//! A query is a single `SELECT` over one main table, optionally widened by
//! `INNER JOIN ... ON a = b` clauses and filtered by a flat list of conditions
//! joined with `AND`/`OR`. There are no subqueries and no grouping or ordering.
//! Anything outside that shape is rejected with [`SqlError::Unsupported`].
//!
//! ```
//! use medsql::sql::{parse_sql, serialize_sql, TablePosition};
//!
//! let q = parse_sql(r#"select count(distinct demographic.subject_id) from demographic
//!     inner join lab on demographic.hadm_id = lab.hadm_id where lab.flag = 'abnormal'"#).unwrap();
//! assert_eq!(
//!     serialize_sql(&q),
//!     r#"SELECT COUNT(DISTINCT DEMOGRAPHIC.SUBJECT_ID) FROM DEMOGRAPHIC INNER JOIN LAB ON DEMOGRAPHIC.HADM_ID = LAB.HADM_ID WHERE LAB.FLAG = "abnormal""#
//! );
//! assert_eq!(q.table_positions()["LAB"], TablePosition::Joined);
//! ```

mod ast;
mod lexer;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use ast::{
    AggOp, ColumnRef, CompareOp, Condition, Connector, InvariantError, JoinClause, Literal,
    SelectItem, SelectTarget, SqlQuery, TablePosition,
};
use lexer::{lex, LexKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SqlError {
    #[error("parse error at byte {offset}: expected one of [{}], found {found}", expected.join(", "))]
    Parse { offset: usize, expected: Vec<String>, found: String },
    #[error("unsupported syntax at byte {offset}: {construct}")]
    Unsupported { offset: usize, construct: String },
    #[error("unterminated literal starting at byte {offset}")]
    UnterminatedLiteral { offset: usize },
}

impl SqlError {
    pub fn offset(&self) -> usize {
        match self {
            SqlError::Parse { offset, .. }
            | SqlError::Unsupported { offset, .. }
            | SqlError::UnterminatedLiteral { offset } => *offset,
        }
    }
}

pub fn parse_sql(text: &str) -> Result<SqlQuery, SqlError> {
    parser::parse(text)
}

/// Canonical single-line rendering. String literals always use double quotes.
pub fn serialize_sql(q: &SqlQuery) -> String {
    q.to_string()
}

pub fn table_positions(q: &SqlQuery) -> BTreeMap<String, TablePosition> {
    q.table_positions()
}

/// Normalized token sequence used for logic-form comparison.
///
/// Keywords and identifiers are lower-cased. Quoted literals are kept as one
/// token holding the verbatim content re-wrapped in double quotes, so
/// `'Port'` and `"Port"` compare equal while `"port"` does not.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TokenSeq(pub Vec<String>);

impl TokenSeq {
    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

pub fn tokenize_sql(text: &str) -> Result<TokenSeq, SqlError> {
    let lexemes = lex(text)?;
    let mut tokens = Vec::with_capacity(lexemes.len());
    let mut after_dot = false;
    for l in &lexemes {
        let tok = match &l.kind {
            LexKind::Str { content, quote: '"' } if after_dot => content.to_lowercase(),
            LexKind::Str { content, .. } => format!("\"{}\"", content.replace('"', "\"\"")),
            LexKind::Ident(w) | LexKind::Number(w) => w.to_lowercase(),
            LexKind::Punct(p) => (*p).to_string(),
            LexKind::Other(c) => c.to_string(),
        };
        after_dot = matches!(l.kind, LexKind::Punct("."));
        tokens.push(tok);
    }
    Ok(TokenSeq(tokens))
}

/// Rewrite string literals to single quotes so the text runs on SQLite
/// regardless of its double-quoted-string setting. `TABLE."COL"` stays an
/// identifier. Everything else is copied through byte for byte.
pub fn to_sqlite_text(text: &str) -> Result<String, SqlError> {
    let lexemes = lex(text)?;
    let mut out = String::with_capacity(text.len() + 8);
    let mut cursor = 0;
    let mut after_dot = false;
    for l in &lexemes {
        if let LexKind::Str { content, quote } = &l.kind {
            if !(after_dot && *quote == '"') {
                out.push_str(&text[cursor..l.offset]);
                out.push('\'');
                out.push_str(&content.replace('\'', "''"));
                out.push('\'');
                cursor = l.end;
            }
        }
        after_dot = matches!(l.kind, LexKind::Punct("."));
    }
    out.push_str(&text[cursor..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(t: &str) -> Vec<String> {
        tokenize_sql(t).unwrap().0
    }

    #[test]
    fn parses_join_query() {
        let q = parse_sql(
            r#"SELECT COUNT(DISTINCT DEMOGRAPHIC.SUBJECT_ID) FROM DEMOGRAPHIC INNER JOIN LAB ON DEMOGRAPHIC.HADM_ID = LAB.HADM_ID WHERE LAB.FLAG = "abnormal""#,
        )
        .unwrap();
        assert_eq!(q.main_table, "DEMOGRAPHIC");
        assert_eq!(q.joins.len(), 1);
        assert_eq!(q.joins[0].table, "LAB");
        assert_eq!(q.select[0], SelectItem::aggregate(
            AggOp::Count,
            true,
            SelectTarget::Column(ColumnRef::qualified("DEMOGRAPHIC", "SUBJECT_ID")),
        ));
        assert_eq!(q.conditions, vec![Condition {
            connector: None,
            column: ColumnRef::qualified("LAB", "FLAG"),
            op: CompareOp::Eq,
            value: Literal::Text("abnormal".into()),
        }]);
        assert_eq!(parse_sql(&serialize_sql(&q)).unwrap(), q);
    }

    #[test]
    fn minimal_query() {
        let q = parse_sql("SELECT * FROM DEMOGRAPHIC").unwrap();
        assert_eq!(q, SqlQuery::select_all("DEMOGRAPHIC"));
        assert_eq!(serialize_sql(&q), "SELECT * FROM DEMOGRAPHIC");
    }

    #[test]
    fn truncated_input_offset() {
        let err = parse_sql("SELECT NAME FROM").unwrap_err();
        assert!(matches!(err, SqlError::Parse { offset: 16, .. }), "{err:?}");
    }

    #[test]
    fn empty_input_is_parse_error() {
        assert!(matches!(parse_sql("").unwrap_err(), SqlError::Parse { offset: 0, .. }));
    }

    #[test]
    fn unsupported_constructs() {
        for sql in [
            "SELECT A FROM T GROUP BY A",
            "SELECT A FROM T WHERE B = 1 ORDER BY A",
            "SELECT A FROM T WHERE B IN (SELECT B FROM U)",
            "SELECT A FROM T LEFT JOIN U ON T.X = U.X",
            "SELECT A FROM T AS X",
            "SELECT COUNT((SELECT 1 FROM U)) FROM T",
            "SELECT A FROM T INNER JOIN T ON T.X = T.X",
        ] {
            let err = parse_sql(sql).unwrap_err();
            assert!(matches!(err, SqlError::Unsupported { .. }), "{sql}: {err:?}");
        }
    }

    #[test]
    fn quoted_column_after_dot_is_identifier() {
        let q = parse_sql(r#"SELECT DEMOGRAPHIC."AGE" FROM DEMOGRAPHIC WHERE DEMOGRAPHIC."LANGUAGE" = "PORT""#).unwrap();
        assert_eq!(serialize_sql(&q), r#"SELECT DEMOGRAPHIC.AGE FROM DEMOGRAPHIC WHERE DEMOGRAPHIC.LANGUAGE = "PORT""#);
    }

    #[test]
    fn single_quotes_serialize_as_double() {
        let q = parse_sql("SELECT NAME FROM D WHERE X = 'it''s'").unwrap();
        assert_eq!(serialize_sql(&q), r#"SELECT NAME FROM D WHERE X = "it's""#);
    }

    #[test]
    fn connectors_render_once_each() {
        let q = parse_sql("select a from t where b = 1 and c < 2.5").unwrap();
        let s = serialize_sql(&q);
        assert_eq!(s.matches(" AND ").count(), 1);
        assert_eq!(s, "SELECT A FROM T WHERE B = 1 AND C < 2.5");
        let q = parse_sql("select a from t where b = -3 or c like \"%x%\"").unwrap();
        assert_eq!(q.conditions[1].connector, Some(Connector::Or));
        assert_eq!(q.conditions[0].value, Literal::Number("-3".into()));
    }

    #[test]
    fn leading_distinct_on_plain_column() {
        let q = parse_sql("SELECT DISTINCT A, B FROM T").unwrap();
        assert!(q.select[0].distinct && !q.select[1].distinct);
        assert_eq!(serialize_sql(&q), "SELECT DISTINCT A, B FROM T");
    }

    #[test]
    fn table_positions_cases() {
        let q = parse_sql("SELECT * FROM LAB").unwrap();
        assert_eq!(table_positions(&q), BTreeMap::from([("LAB".to_string(), TablePosition::Main)]));

        let q = parse_sql("SELECT * FROM DEMOGRAPHIC INNER JOIN PROCEDURES ON DEMOGRAPHIC.HADM_ID = PROCEDURES.HADM_ID").unwrap();
        assert_eq!(
            table_positions(&q),
            BTreeMap::from([
                ("DEMOGRAPHIC".to_string(), TablePosition::Main),
                ("PROCEDURES".to_string(), TablePosition::Joined),
            ])
        );

        let q = parse_sql("SELECT * FROM A JOIN B ON A.X = B.X INNER JOIN C ON A.X = C.X").unwrap();
        let pos = table_positions(&q);
        assert_eq!(pos.len(), 3);
        assert_eq!(pos.values().filter(|p| **p == TablePosition::Main).count(), 1);
    }

    #[test]
    fn tokenizer_examples() {
        assert_eq!(toks("SELECT A,B from TABLE"), ["select", "a", ",", "b", "from", "table"]);
        assert!(toks("").is_empty());
        // Hand-tokenized: the literal keeps its case and quotes.
        assert_eq!(toks("WHERE X = \"Port\""), ["where", "x", "=", "\"Port\""]);
        assert_eq!(toks("WHERE X = 'Port'"), toks("WHERE X = \"Port\""));
        assert_ne!(toks("WHERE X = 'port'"), toks("WHERE X = \"Port\""));
        assert_eq!(toks("T.\"COL\" = 1"), ["t", ".", "col", "=", "1"]);
        assert_eq!(
            tokenize_sql("X = \"abc").unwrap_err(),
            SqlError::UnterminatedLiteral { offset: 4 }
        );
    }

    #[test]
    fn sqlite_rewrite_only_touches_literals() {
        assert_eq!(
            to_sqlite_text(r#"SELECT T."A" FROM T WHERE T."B" = "it's""#).unwrap(),
            r#"SELECT T."A" FROM T WHERE T."B" = 'it''s'"#
        );
    }

    fn ident() -> impl Strategy<Value = String> {
        "[A-Z][A-Z0-9_]{0,6}".prop_filter("reserved", |s| {
            !["SELECT", "FROM", "WHERE", "AND", "OR", "INNER", "JOIN", "ON", "DISTINCT", "LIKE",
              "AS", "IN", "IS", "NOT", "GROUP", "ORDER", "LIMIT", "COUNT", "MAX", "MIN", "AVG", "SUM",
              "LEFT", "RIGHT", "FULL", "CROSS", "CASE", "USING", "UNION", "EXCEPT", "HAVING", "OFFSET",
              "OUTER", "NATURAL", "BETWEEN", "EXISTS", "INTERSECT"]
                .contains(&s.as_str())
        })
    }

    fn col() -> impl Strategy<Value = ColumnRef> {
        (proptest::option::of(ident()), ident()).prop_map(|(t, c)| ColumnRef { table: t, column: c })
    }

    fn agg() -> impl Strategy<Value = AggOp> {
        prop_oneof![
            Just(AggOp::None), Just(AggOp::Count), Just(AggOp::Max),
            Just(AggOp::Min), Just(AggOp::Avg), Just(AggOp::Sum)
        ]
    }

    fn op() -> impl Strategy<Value = CompareOp> {
        prop_oneof![
            Just(CompareOp::Eq), Just(CompareOp::Neq), Just(CompareOp::Lt), Just(CompareOp::Lte),
            Just(CompareOp::Gt), Just(CompareOp::Gte), Just(CompareOp::Like)
        ]
    }

    fn literal() -> impl Strategy<Value = Literal> {
        prop_oneof![
            "[ -~]{0,12}".prop_map(Literal::Text),
            "-?[0-9]{1,4}(\\.[0-9]{1,3})?".prop_map(Literal::Number),
        ]
    }

    prop_compose! {
        fn query()(
            items in proptest::collection::vec((agg(), any::<bool>(), proptest::option::of(col())), 1..4),
            main in ident(),
            join_tables in proptest::collection::btree_set(ident(), 0..3),
            join_cols in proptest::collection::vec((col(), col()), 3),
            conds in proptest::collection::vec((any::<bool>(), col(), op(), literal()), 0..4),
        ) -> SqlQuery {
            let select = items.into_iter().enumerate().map(|(i, (agg, distinct, c))| {
                let target = match (agg, c) {
                    (AggOp::None, None) => return SelectItem::star(),
                    (_, None) => SelectTarget::Star,
                    (_, Some(c)) => SelectTarget::Column(c),
                };
                let distinct = distinct && (agg != AggOp::None || i == 0);
                SelectItem { agg, distinct, target }
            }).collect();
            let joins = join_tables.into_iter().filter(|t| *t != main).zip(join_cols)
                .map(|(table, (left, right))| JoinClause { table, left, right }).collect();
            let conditions = conds.into_iter().enumerate().map(|(i, (or, column, op, value))| Condition {
                connector: (i > 0).then_some(if or { Connector::Or } else { Connector::And }),
                column, op, value,
            }).collect();
            SqlQuery { select, main_table: main, joins, conditions }
        }
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(q in query()) {
            prop_assert!(q.validate().is_ok());
            let text = serialize_sql(&q);
            prop_assert_eq!(parse_sql(&text).unwrap(), q);
        }

        #[test]
        fn tokenization_idempotent(q in query(), noise in "[ a-zA-Z0-9,()<>=!.*\t\n]{0,30}") {
            for text in [serialize_sql(&q), noise] {
                let once = tokenize_sql(&text).unwrap();
                let twice = tokenize_sql(&once.to_string()).unwrap();
                prop_assert_eq!(&twice, &once);
                prop_assert!(once.as_slice().iter().all(|t| !t.is_empty()));
            }
        }

        #[test]
        fn one_main_table(q in query()) {
            let parsed = parse_sql(&serialize_sql(&q)).unwrap();
            let pos = table_positions(&parsed);
            prop_assert_eq!(pos.values().filter(|p| **p == TablePosition::Main).count(), 1);
            prop_assert_eq!(pos.len(), 1 + parsed.joins.len());
        }
    }
}
