use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AggOp {
    None,
    Count,
    Max,
    Min,
    Avg,
    Sum,
}

impl AggOp {
    pub fn keyword(self) -> Option<&'static str> {
        match self {
            AggOp::None => None,
            AggOp::Count => Some("COUNT"),
            AggOp::Max => Some("MAX"),
            AggOp::Min => Some("MIN"),
            AggOp::Avg => Some("AVG"),
            AggOp::Sum => Some("SUM"),
        }
    }

    pub(crate) fn from_keyword(word: &str) -> Option<Self> {
        match word.to_ascii_uppercase().as_str() {
            "COUNT" => Some(AggOp::Count),
            "MAX" => Some(AggOp::Max),
            "MIN" => Some(AggOp::Min),
            "AVG" => Some(AggOp::Avg),
            "SUM" => Some(AggOp::Sum),
            _ => None,
        }
    }
}

/// A possibly table-qualified column. Names are stored upper-cased.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table: Option<String>,
    pub column: String,
}

impl ColumnRef {
    pub fn new(table: Option<&str>, column: &str) -> Self {
        ColumnRef {
            table: table.map(|t| t.to_ascii_uppercase()),
            column: column.to_ascii_uppercase(),
        }
    }

    pub fn qualified(table: &str, column: &str) -> Self {
        Self::new(Some(table), column)
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.table {
            Some(t) => write!(f, "{t}.{}", self.column),
            None => f.write_str(&self.column),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SelectTarget {
    Star,
    Column(ColumnRef),
}

impl fmt::Display for SelectTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectTarget::Star => f.write_str("*"),
            SelectTarget::Column(c) => c.fmt(f),
        }
    }
}

/// One projected expression.
///
/// `distinct` on an aggregate means `AGG(DISTINCT col)`. On a plain column it
/// can only be set for the first item and renders as `SELECT DISTINCT ...`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SelectItem {
    pub agg: AggOp,
    pub distinct: bool,
    pub target: SelectTarget,
}

impl SelectItem {
    pub fn star() -> Self {
        SelectItem { agg: AggOp::None, distinct: false, target: SelectTarget::Star }
    }

    pub fn column(col: ColumnRef) -> Self {
        SelectItem { agg: AggOp::None, distinct: false, target: SelectTarget::Column(col) }
    }

    pub fn aggregate(agg: AggOp, distinct: bool, target: SelectTarget) -> Self {
        SelectItem { agg, distinct, target }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JoinClause {
    pub table: String,
    pub left: ColumnRef,
    pub right: ColumnRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CompareOp {
    Eq,
    Neq,
    Lt,
    Lte,
    Gt,
    Gte,
    Like,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Neq => "!=",
            CompareOp::Lt => "<",
            CompareOp::Lte => "<=",
            CompareOp::Gt => ">",
            CompareOp::Gte => ">=",
            CompareOp::Like => "LIKE",
        }
    }
}

/// A condition value. Numbers keep their source lexeme so rendering is exact.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Literal {
    Text(String),
    Number(String),
}

impl Literal {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            Literal::Text(s) => Some(s),
            Literal::Number(_) => None,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Text(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            Literal::Number(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Connector {
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Condition {
    /// `None` for the first condition, `Some` for every later one.
    pub connector: Option<Connector>,
    pub column: ColumnRef,
    pub op: CompareOp,
    pub value: Literal,
}

/// Where a table appears in a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TablePosition {
    /// Argument of `FROM`.
    Main,
    /// Introduced by `INNER JOIN`.
    Joined,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SqlQuery {
    pub select: Vec<SelectItem>,
    pub main_table: String,
    pub joins: Vec<JoinClause>,
    pub conditions: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvariantError {
    #[error("select list is empty")]
    EmptySelect,
    #[error("main table is empty")]
    EmptyMainTable,
    #[error("table {0} appears more than once")]
    RepeatedTable(String),
    #[error("DISTINCT on a plain column is only allowed on the first select item")]
    MisplacedDistinct,
    #[error("condition {0} has the wrong connector presence")]
    Connector(usize),
}

impl SqlQuery {
    /// A `SELECT * FROM table` query.
    pub fn select_all(table: &str) -> Self {
        SqlQuery {
            select: vec![SelectItem::star()],
            main_table: table.to_ascii_uppercase(),
            joins: Vec::new(),
            conditions: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), InvariantError> {
        if self.select.is_empty() {
            return Err(InvariantError::EmptySelect);
        }
        if self.main_table.is_empty() {
            return Err(InvariantError::EmptyMainTable);
        }
        let mut seen = BTreeSet::from([self.main_table.as_str()]);
        for j in &self.joins {
            if !seen.insert(j.table.as_str()) {
                return Err(InvariantError::RepeatedTable(j.table.clone()));
            }
        }
        if self.select.iter().skip(1).any(|s| s.agg == AggOp::None && s.distinct) {
            return Err(InvariantError::MisplacedDistinct);
        }
        for (i, c) in self.conditions.iter().enumerate() {
            if c.connector.is_some() != (i > 0) {
                return Err(InvariantError::Connector(i));
            }
        }
        Ok(())
    }

    /// Every table mentioned, mapped to the one position it occupies.
    pub fn table_positions(&self) -> BTreeMap<String, TablePosition> {
        let mut out = BTreeMap::new();
        out.insert(self.main_table.clone(), TablePosition::Main);
        for j in &self.joins {
            out.insert(j.table.clone(), TablePosition::Joined);
        }
        out
    }

    pub fn tables(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.main_table.as_str()).chain(self.joins.iter().map(|j| j.table.as_str()))
    }

    /// Resolve the table a column belongs to. Qualified columns answer
    /// directly; unqualified ones fall back to the main table.
    pub fn owning_table<'a>(&'a self, col: &'a ColumnRef) -> &'a str {
        col.table.as_deref().unwrap_or(&self.main_table)
    }
}

impl fmt::Display for SqlQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        for (i, item) in self.select.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match item.agg.keyword() {
                Some(kw) if item.distinct => write!(f, "{kw}(DISTINCT {})", item.target)?,
                Some(kw) => write!(f, "{kw}({})", item.target)?,
                None if item.distinct => write!(f, "DISTINCT {}", item.target)?,
                None => write!(f, "{}", item.target)?,
            }
        }
        write!(f, " FROM {}", self.main_table)?;
        for j in &self.joins {
            write!(f, " INNER JOIN {} ON {} = {}", j.table, j.left, j.right)?;
        }
        for (i, c) in self.conditions.iter().enumerate() {
            let lead = match (i, c.connector) {
                (0, _) => " WHERE",
                (_, Some(Connector::Or)) => " OR",
                _ => " AND",
            };
            write!(f, "{lead} {} {} {}", c.column, c.op.symbol(), c.value)?;
        }
        Ok(())
    }
}
