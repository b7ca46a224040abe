use super::ast::*;
use super::lexer::{lex, LexKind, Lexeme};
use super::SqlError;

/// Words that can never be used as a bare identifier.
const RESERVED: &[&str] = &[
    "SELECT", "FROM", "WHERE", "AND", "OR", "INNER", "JOIN", "ON", "DISTINCT", "LIKE",
];

/// Keywords that belong to SQL but not to the supported dialect.
const UNSUPPORTED: &[&str] = &[
    "GROUP", "ORDER", "HAVING", "LIMIT", "OFFSET", "UNION", "INTERSECT", "EXCEPT", "LEFT",
    "RIGHT", "FULL", "OUTER", "CROSS", "NATURAL", "AS", "IN", "BETWEEN", "NOT", "EXISTS", "IS",
    "CASE", "USING",
];

pub(crate) fn parse(text: &str) -> Result<SqlQuery, SqlError> {
    let lexemes = lex(text)?;
    let mut p = Parser { lx: lexemes, pos: 0, end: text.len() };
    let q = p.query()?;
    q.validate().map_err(|e| SqlError::Unsupported { offset: 0, construct: e.to_string() })?;
    Ok(q)
}

struct Parser {
    lx: Vec<Lexeme>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Lexeme> {
        self.lx.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |l| l.offset)
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, SqlError> {
        let nested = |i: usize| {
            matches!(self.lx.get(i), Some(Lexeme { kind: LexKind::Ident(w), .. }) if w.eq_ignore_ascii_case("SELECT"))
        };
        if self.pos > 0 && (nested(self.pos) || (self.at_punct("(") && nested(self.pos + 1))) {
            return Err(SqlError::Unsupported { offset: self.offset(), construct: "subquery".into() });
        }
        if let Some(l) = self.peek() {
            if let LexKind::Ident(w) = &l.kind {
                let up = w.to_ascii_uppercase();
                if UNSUPPORTED.contains(&up.as_str()) {
                    return Err(SqlError::Unsupported { offset: l.offset, construct: up });
                }
            }
        }
        Err(SqlError::Parse {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().map_or_else(|| "end of input".to_string(), Lexeme::describe),
        })
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Lexeme { kind: LexKind::Ident(w), .. }) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SqlError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.fail(&[kw])
        }
    }

    fn at_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Lexeme { kind: LexKind::Punct(q), .. }) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), SqlError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.fail(&[p])
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, SqlError> {
        match self.peek() {
            Some(Lexeme { kind: LexKind::Ident(w), .. }) => {
                let up = w.to_ascii_uppercase();
                if RESERVED.contains(&up.as_str()) || UNSUPPORTED.contains(&up.as_str()) {
                    return self.fail(&[what]);
                }
                self.pos += 1;
                Ok(up)
            }
            _ => self.fail(&[what]),
        }
    }

    fn query(&mut self) -> Result<SqlQuery, SqlError> {
        self.expect_keyword("SELECT")?;
        let leading_distinct = self.eat_keyword("DISTINCT");
        let mut select = vec![self.select_item()?];
        if leading_distinct {
            if select[0].agg != AggOp::None {
                return Err(SqlError::Unsupported {
                    offset: self.lx[self.pos - 1].offset,
                    construct: "DISTINCT before an aggregate".into(),
                });
            }
            select[0].distinct = true;
        }
        while self.eat_punct(",") {
            select.push(self.select_item()?);
        }
        self.expect_keyword("FROM")?;
        let main_table = self.table_name()?;
        let mut joins = Vec::new();
        while self.at_keyword("INNER") || self.at_keyword("JOIN") {
            joins.push(self.join()?);
        }
        let mut conditions = Vec::new();
        if self.eat_keyword("WHERE") {
            conditions.push(self.condition(None)?);
            loop {
                let connector = if self.eat_keyword("AND") {
                    Connector::And
                } else if self.eat_keyword("OR") {
                    Connector::Or
                } else {
                    break;
                };
                conditions.push(self.condition(Some(connector))?);
            }
        }
        self.eat_punct(";");
        if self.peek().is_some() {
            let expected: &[&str] = if conditions.is_empty() {
                &["INNER JOIN", "WHERE", "end of input"]
            } else {
                &["AND", "OR", "end of input"]
            };
            return self.fail(expected);
        }
        Ok(SqlQuery { select, main_table, joins, conditions })
    }

    fn table_name(&mut self) -> Result<String, SqlError> {
        if self.at_punct("(") {
            return Err(SqlError::Unsupported { offset: self.offset(), construct: "subquery".into() });
        }
        self.ident("table name")
    }

    fn select_item(&mut self) -> Result<SelectItem, SqlError> {
        if self.eat_punct("*") {
            return Ok(SelectItem::star());
        }
        let agg = match self.peek() {
            Some(Lexeme { kind: LexKind::Ident(w), .. }) => AggOp::from_keyword(w),
            _ => None,
        };
        let Some(agg) = agg else {
            return Ok(SelectItem::column(self.column_ref()?));
        };
        self.pos += 1;
        self.expect_punct("(")?;
        let distinct = self.eat_keyword("DISTINCT");
        let target = if self.eat_punct("*") {
            SelectTarget::Star
        } else {
            SelectTarget::Column(self.column_ref()?)
        };
        self.expect_punct(")")?;
        Ok(SelectItem::aggregate(agg, distinct, target))
    }

    fn column_ref(&mut self) -> Result<ColumnRef, SqlError> {
        let first = self.ident("column name")?;
        if !self.eat_punct(".") {
            return Ok(ColumnRef { table: None, column: first });
        }
        // `TABLE."COLUMN"` is how some releases quote column names.
        let column = match self.peek() {
            Some(Lexeme { kind: LexKind::Str { content, quote: '"' }, .. })
                if is_plain_identifier(content) =>
            {
                let c = content.to_ascii_uppercase();
                self.pos += 1;
                c
            }
            _ => self.ident("column name")?,
        };
        Ok(ColumnRef { table: Some(first), column })
    }

    fn join(&mut self) -> Result<JoinClause, SqlError> {
        self.eat_keyword("INNER");
        self.expect_keyword("JOIN")?;
        let table = self.table_name()?;
        self.expect_keyword("ON")?;
        let left = self.column_ref()?;
        self.expect_punct("=")?;
        let right = self.column_ref()?;
        Ok(JoinClause { table, left, right })
    }

    fn condition(&mut self, connector: Option<Connector>) -> Result<Condition, SqlError> {
        if self.at_punct("(") {
            return Err(SqlError::Unsupported {
                offset: self.offset(),
                construct: "parenthesised condition".into(),
            });
        }
        let column = self.column_ref()?;
        let op = self.compare_op()?;
        let value = self.literal()?;
        Ok(Condition { connector, column, op, value })
    }

    fn compare_op(&mut self) -> Result<CompareOp, SqlError> {
        let op = match self.peek().map(|l| &l.kind) {
            Some(LexKind::Punct("=")) => CompareOp::Eq,
            Some(LexKind::Punct("!=")) | Some(LexKind::Punct("<>")) => CompareOp::Neq,
            Some(LexKind::Punct("<")) => CompareOp::Lt,
            Some(LexKind::Punct("<=")) => CompareOp::Lte,
            Some(LexKind::Punct(">")) => CompareOp::Gt,
            Some(LexKind::Punct(">=")) => CompareOp::Gte,
            Some(LexKind::Ident(w)) if w.eq_ignore_ascii_case("LIKE") => CompareOp::Like,
            _ => return self.fail(&["=", "!=", "<", "<=", ">", ">=", "LIKE"]),
        };
        self.pos += 1;
        Ok(op)
    }

    fn literal(&mut self) -> Result<Literal, SqlError> {
        if self.at_punct("(") {
            return Err(SqlError::Unsupported { offset: self.offset(), construct: "subquery".into() });
        }
        let negative = self.eat_punct("-");
        match self.peek().map(|l| l.kind.clone()) {
            Some(LexKind::Number(n)) => {
                self.pos += 1;
                Ok(Literal::Number(if negative { format!("-{n}") } else { n }))
            }
            Some(LexKind::Str { content, .. }) if !negative => {
                self.pos += 1;
                Ok(Literal::Text(content))
            }
            _ => self.fail(&["string literal", "number"]),
        }
    }
}

fn is_plain_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED.contains(&s.to_ascii_uppercase().as_str())
}
