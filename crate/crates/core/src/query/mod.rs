//! Tree-SQL: SELECT/FROM/WHERE/GROUP BY over one tree-structured table.
//!
//! Queries are parsed to a raw AST, bound against a schema (resolving each
//! path to a plain leaf or a single reference hop), and evaluated over the
//! flattened relation of the paths the query uses. Aggregates are SUM,
//! COUNT, MIN, MAX, AVG; conditions are boolean combinations of comparison
//! atoms.

mod bind;
mod eval;
mod explain;
mod parse;

pub use bind::{bind_query, BoundCondition, BoundOperand, BoundQuery, BoundSelect};
pub use eval::{evaluate, evaluate_via_full};
pub use explain::explain;
pub use parse::parse_query;

use std::fmt;

/// Aggregate functions over a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggFunc {
    Sum,
    Count,
    Min,
    Max,
    Avg,
}

impl AggFunc {
    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Sum => "SUM",
            AggFunc::Count => "COUNT",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
            AggFunc::Avg => "AVG",
        }
    }
}

/// One item of the select list.
#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    Path(String),
    Aggregate { func: AggFunc, path: String },
    CountStar,
}

/// Comparison operators of condition atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "<>",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }

    /// Whether an ordering between the operands satisfies the operator.
    pub fn accepts(self, ordering: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        matches!(
            (self, ordering),
            (CompareOp::Eq, Equal)
                | (CompareOp::Ne, Less)
                | (CompareOp::Ne, Greater)
                | (CompareOp::Lt, Less)
                | (CompareOp::Le, Less)
                | (CompareOp::Le, Equal)
                | (CompareOp::Gt, Greater)
                | (CompareOp::Ge, Greater)
                | (CompareOp::Ge, Equal)
        )
    }
}

/// A literal in a condition atom.
#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Integer(i64),
    Float(f64),
    String(String),
    Boolean(bool),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Integer(v) => write!(f, "{v}"),
            Literal::Float(v) => write!(f, "{v}"),
            Literal::String(v) => write!(f, "'{}'", v.replace('\'', "''")),
            Literal::Boolean(v) => write!(f, "{v}"),
        }
    }
}

/// One side of a comparison atom.
#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Path(String),
    Literal(Literal),
}

/// A boolean condition over comparison atoms.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Atom { left: Operand, op: CompareOp, right: Operand },
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
    Not(Box<Condition>),
}

/// A parsed, unbound query.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub select: Vec<SelectItem>,
    pub table: String,
    pub condition: Option<Condition>,
    pub group_by: Vec<String>,
}
