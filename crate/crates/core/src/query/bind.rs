//! Resolving a parsed query against a schema.
//!
//! Binding resolves every path (select, where, group-by) to a leaf or a
//! single reference hop, assembles the leaf set the flattening will use,
//! and enforces the static rules: the source table must match, SUM/AVG
//! need numeric arguments, comparisons need matching types (integer
//! literals widen to float), and when aggregates or GROUP BY appear, every
//! bare selected path must be grouped on.

use super::{AggFunc, Condition, Literal, Operand, Query, SelectItem};
use crate::error::QueryError;
use crate::flatten::QueryLeafSet;
use crate::instance::Value;
use crate::query::CompareOp;
use crate::schema::{resolve_path, PrimitiveType, TreeSchema};

/// A select item with its path resolved to a leaf-set column.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundSelect {
    Column(usize),
    Aggregate { func: AggFunc, column: usize },
    CountStar,
}

/// A comparison operand after binding.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundOperand {
    Column(usize),
    Literal(Value),
}

/// A condition whose paths are bound to leaf-set columns.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundCondition {
    Atom { left: BoundOperand, op: CompareOp, right: BoundOperand },
    And(Box<BoundCondition>, Box<BoundCondition>),
    Or(Box<BoundCondition>, Box<BoundCondition>),
    Not(Box<BoundCondition>),
}

/// A query ready for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundQuery {
    /// The original AST, kept for plan rendering.
    pub query: Query,
    /// Every leaf the query touches, in first-use order.
    pub leaf_set: QueryLeafSet,
    pub select: Vec<BoundSelect>,
    pub condition: Option<BoundCondition>,
    /// Leaf-set column indices grouped on.
    pub group_by: Vec<usize>,
    /// Primitive type of each leaf-set column.
    pub column_types: Vec<PrimitiveType>,
}

impl BoundQuery {
    /// True when any select item aggregates.
    pub fn has_aggregates(&self) -> bool {
        self.select
            .iter()
            .any(|s| matches!(s, BoundSelect::Aggregate { .. } | BoundSelect::CountStar))
    }

    /// Column names of the leaf set, shared by both evaluation routes.
    pub fn column_names(&self, schema: &TreeSchema) -> Vec<String> {
        self.leaf_set.header(schema)
    }
}

struct Binder<'s> {
    schema: &'s TreeSchema,
    set: QueryLeafSet,
}

impl<'s> Binder<'s> {
    fn column(&mut self, path: &str) -> Result<usize, QueryError> {
        let binding = resolve_path(self.schema, path)?;
        Ok(self.set.insert(&binding))
    }

    fn column_type(&self, column: usize) -> PrimitiveType {
        let leaf = if column < self.set.plain.len() {
            self.set.plain[column]
        } else {
            self.set.referenced[column - self.set.plain.len()].leaf
        };
        self.schema.leaf_type(leaf).expect("bound columns are leaves")
    }
}

/// Binds a parsed query against the schema.
pub fn bind_query(schema: &TreeSchema, query: &Query) -> Result<BoundQuery, QueryError> {
    if query.table != schema.table_name() {
        return Err(QueryError::UnknownTable {
            expected: schema.table_name().to_string(),
            found: query.table.clone(),
        });
    }
    let mut binder = Binder { schema, set: QueryLeafSet::default() };

    // The leaf set must be complete before any column index is recorded:
    // referenced columns sit after all plain columns, so inserting a plain
    // leaf later (say from the WHERE clause) would shift them.
    let mut paths: Vec<&str> = Vec::new();
    for item in &query.select {
        match item {
            SelectItem::Path(p) | SelectItem::Aggregate { path: p, .. } => paths.push(p),
            SelectItem::CountStar => {}
        }
    }
    if let Some(condition) = &query.condition {
        condition_paths(condition, &mut paths);
    }
    paths.extend(query.group_by.iter().map(String::as_str));
    for path in paths {
        binder.column(path)?;
    }

    let mut select = Vec::with_capacity(query.select.len());
    for item in &query.select {
        select.push(match item {
            SelectItem::Path(path) => BoundSelect::Column(binder.column(path)?),
            SelectItem::Aggregate { func, path } => {
                let column = binder.column(path)?;
                let ty = binder.column_type(column);
                if matches!(func, AggFunc::Sum | AggFunc::Avg)
                    && !matches!(ty, PrimitiveType::Integer | PrimitiveType::Float)
                {
                    return Err(QueryError::Bind(format!(
                        "{} requires a numeric argument, but {path:?} is {}",
                        func.name(),
                        ty.name()
                    )));
                }
                BoundSelect::Aggregate { func: *func, column }
            }
            SelectItem::CountStar => BoundSelect::CountStar,
        });
    }

    let condition = match &query.condition {
        Some(c) => Some(bind_condition(&mut binder, c)?),
        None => None,
    };

    let mut group_by = Vec::with_capacity(query.group_by.len());
    for path in &query.group_by {
        group_by.push(binder.column(path)?);
    }

    // With aggregation or grouping in play, a bare selected path must be
    // one of the grouping columns.
    let grouped_context = !group_by.is_empty()
        || select
            .iter()
            .any(|s| matches!(s, BoundSelect::Aggregate { .. } | BoundSelect::CountStar));
    if grouped_context {
        for (item, bound) in query.select.iter().zip(&select) {
            if let (SelectItem::Path(path), BoundSelect::Column(column)) = (item, bound) {
                if !group_by.contains(column) {
                    return Err(QueryError::Bind(format!(
                        "selected path {path:?} must appear in GROUP BY"
                    )));
                }
            }
        }
    }

    let column_types = (0..binder.set.column_count()).map(|i| binder.column_type(i)).collect();
    Ok(BoundQuery {
        query: query.clone(),
        leaf_set: binder.set,
        select,
        condition,
        group_by,
        column_types,
    })
}

fn condition_paths<'q>(condition: &'q Condition, out: &mut Vec<&'q str>) {
    match condition {
        Condition::Atom { left, right, .. } => {
            for operand in [left, right] {
                if let Operand::Path(path) = operand {
                    out.push(path);
                }
            }
        }
        Condition::And(a, b) | Condition::Or(a, b) => {
            condition_paths(a, out);
            condition_paths(b, out);
        }
        Condition::Not(inner) => condition_paths(inner, out),
    }
}

fn bind_condition(binder: &mut Binder, condition: &Condition) -> Result<BoundCondition, QueryError> {
    Ok(match condition {
        Condition::And(a, b) => BoundCondition::And(
            Box::new(bind_condition(binder, a)?),
            Box::new(bind_condition(binder, b)?),
        ),
        Condition::Or(a, b) => BoundCondition::Or(
            Box::new(bind_condition(binder, a)?),
            Box::new(bind_condition(binder, b)?),
        ),
        Condition::Not(inner) => BoundCondition::Not(Box::new(bind_condition(binder, inner)?)),
        Condition::Atom { left, op, right } => bind_atom(binder, left, *op, right)?,
    })
}

fn bind_atom(
    binder: &mut Binder,
    left: &Operand,
    op: CompareOp,
    right: &Operand,
) -> Result<BoundCondition, QueryError> {
    let left = bind_operand(binder, left)?;
    let right = bind_operand(binder, right)?;
    let lt = operand_type(binder, &left);
    let rt = operand_type(binder, &right);
    // Integer literals widen to float when the other side is float; any
    // other type mix is an error.
    let (left, right) = match (lt, rt) {
        _ if lt == rt => (left, right),
        (PrimitiveType::Integer, PrimitiveType::Float) if widened(&left).is_some() => {
            (widened(&left).expect("checked"), right)
        }
        (PrimitiveType::Float, PrimitiveType::Integer) if widened(&right).is_some() => {
            (left, widened(&right).expect("checked"))
        }
        _ => {
            return Err(QueryError::Bind(format!(
                "cannot compare {} with {}",
                lt.name(),
                rt.name()
            )))
        }
    };
    Ok(BoundCondition::Atom { left, op, right })
}

fn widened(operand: &BoundOperand) -> Option<BoundOperand> {
    match operand {
        BoundOperand::Literal(Value::Integer(i)) => {
            Some(BoundOperand::Literal(Value::Float(*i as f64)))
        }
        _ => None,
    }
}

fn bind_operand(binder: &mut Binder, operand: &Operand) -> Result<BoundOperand, QueryError> {
    Ok(match operand {
        Operand::Path(path) => BoundOperand::Column(binder.column(path)?),
        Operand::Literal(literal) => BoundOperand::Literal(match literal {
            Literal::Integer(v) => Value::Integer(*v),
            Literal::Float(v) => Value::Float(*v),
            Literal::String(v) => Value::String(v.clone()),
            Literal::Boolean(v) => Value::Boolean(*v),
        }),
    })
}

fn operand_type(binder: &Binder, operand: &BoundOperand) -> PrimitiveType {
    match operand {
        BoundOperand::Column(column) => binder.column_type(*column),
        BoundOperand::Literal(value) => value.type_of().expect("literals are never NULL"),
    }
}
