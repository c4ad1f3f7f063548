//! Query evaluation over flattened relations.
//!
//! The bound query's leaf set is flattened first; then conventional SQL
//! semantics apply: WHERE filters rows (a comparison with a NULL operand
//! is simply no-match — two-valued logic at the atom), GROUP BY buckets
//! rows by exact value equality (NULLs group together, floats by bit
//! pattern, groups in first-appearance order), aggregates skip NULLs, and
//! the select list projects last. Aggregating an empty bucket yields 0 for
//! COUNT and NULL for the rest.

use indexmap::IndexMap;

use super::{AggFunc, BoundCondition, BoundOperand, BoundQuery, BoundSelect};
use crate::error::QueryError;
use crate::flatten::{flatten_full, flatten_with_constraints, FlattenedRelation};
use crate::instance::{TreeInstance, Value};
use crate::schema::TreeSchema;

/// Evaluates the query over the flattening of exactly the leaves it uses
/// (relative flattening, extended with reference joins when present).
pub fn evaluate(
    schema: &TreeSchema,
    query: &BoundQuery,
    instance: &TreeInstance,
) -> Result<FlattenedRelation, QueryError> {
    let relation = flatten_with_constraints(schema, instance, &query.leaf_set);
    let identity: Vec<usize> = (0..relation.header.len()).collect();
    run_pipeline(schema, query, relation.rows, &identity)
}

/// Evaluates the query over the full flattening instead of the relative
/// one. Reference paths have no column there, so they are rejected. Used
/// to observe how full flattening inflates multiplicities.
pub fn evaluate_via_full(
    schema: &TreeSchema,
    query: &BoundQuery,
    instance: &TreeInstance,
) -> Result<FlattenedRelation, QueryError> {
    if !query.leaf_set.referenced.is_empty() {
        return Err(QueryError::Eval(
            "reference paths cannot be evaluated via full flattening".to_string(),
        ));
    }
    let leaves = schema.leaves();
    let map: Vec<usize> = query
        .leaf_set
        .plain
        .iter()
        .map(|leaf| leaves.iter().position(|l| l == leaf).expect("leaf of the schema"))
        .collect();
    let relation = flatten_full(schema, instance);
    run_pipeline(schema, query, relation.rows, &map)
}

/// Shared WHERE → GROUP BY → aggregate → project pipeline. `column_map`
/// translates leaf-set column indices into source-row positions.
fn run_pipeline(
    schema: &TreeSchema,
    query: &BoundQuery,
    rows: Vec<Vec<Value>>,
    column_map: &[usize],
) -> Result<FlattenedRelation, QueryError> {
    let names = query.column_names(schema);

    let filtered: Vec<Vec<Value>> = match &query.condition {
        None => rows,
        Some(condition) => rows
            .into_iter()
            .filter(|row| holds(condition, row, column_map))
            .collect(),
    };

    let header: Vec<String> = query
        .select
        .iter()
        .map(|item| match item {
            BoundSelect::Column(i) => names[*i].clone(),
            BoundSelect::Aggregate { func, column } => {
                format!("{}({})", func.name(), names[*column])
            }
            BoundSelect::CountStar => "COUNT(*)".to_string(),
        })
        .collect();

    if query.group_by.is_empty() && !query.has_aggregates() {
        let rows = filtered
            .iter()
            .map(|row| {
                query
                    .select
                    .iter()
                    .map(|item| match item {
                        BoundSelect::Column(i) => row[column_map[*i]].clone(),
                        _ => unreachable!("no aggregates on this branch"),
                    })
                    .collect()
            })
            .collect();
        return Ok(FlattenedRelation { header, rows });
    }

    // Bucket rows by the grouping key; an empty GROUP BY means one global
    // bucket, present even when no rows survived the filter.
    let mut groups: IndexMap<Vec<Value>, Vec<usize>> = IndexMap::new();
    if query.group_by.is_empty() {
        groups.insert(Vec::new(), (0..filtered.len()).collect());
    } else {
        for (i, row) in filtered.iter().enumerate() {
            let key: Vec<Value> =
                query.group_by.iter().map(|&g| row[column_map[g]].clone()).collect();
            groups.entry(key).or_default().push(i);
        }
    }

    let mut out = Vec::with_capacity(groups.len());
    for (key, members) in &groups {
        let mut row = Vec::with_capacity(query.select.len());
        for item in &query.select {
            row.push(match item {
                BoundSelect::Column(i) => {
                    let j = query
                        .group_by
                        .iter()
                        .position(|g| g == i)
                        .expect("bind enforced GROUP BY coverage");
                    key[j].clone()
                }
                BoundSelect::CountStar => Value::Integer(members.len() as i64),
                BoundSelect::Aggregate { func, column } => {
                    let values = members
                        .iter()
                        .map(|&i| &filtered[i][column_map[*column]])
                        .filter(|v| !v.is_null());
                    aggregate(*func, values)?
                }
            });
        }
        out.push(row);
    }
    Ok(FlattenedRelation { header, rows: out })
}

/// Two-valued condition check; comparisons touching NULL do not match.
fn holds(condition: &BoundCondition, row: &[Value], column_map: &[usize]) -> bool {
    match condition {
        BoundCondition::And(a, b) => holds(a, row, column_map) && holds(b, row, column_map),
        BoundCondition::Or(a, b) => holds(a, row, column_map) || holds(b, row, column_map),
        BoundCondition::Not(inner) => !holds(inner, row, column_map),
        BoundCondition::Atom { left, op, right } => {
            let left = operand_value(left, row, column_map);
            let right = operand_value(right, row, column_map);
            match left.sql_cmp(right) {
                Some(ordering) => op.accepts(ordering),
                None => false,
            }
        }
    }
}

fn operand_value<'a>(
    operand: &'a BoundOperand,
    row: &'a [Value],
    column_map: &[usize],
) -> &'a Value {
    match operand {
        BoundOperand::Column(i) => &row[column_map[*i]],
        BoundOperand::Literal(value) => value,
    }
}

/// Folds the non-NULL values of one bucket.
fn aggregate<'a>(
    func: AggFunc,
    values: impl Iterator<Item = &'a Value>,
) -> Result<Value, QueryError> {
    match func {
        AggFunc::Count => Ok(Value::Integer(values.count() as i64)),
        AggFunc::Sum => {
            let mut acc: Option<Value> = None;
            for v in values {
                acc = Some(match (acc, v) {
                    (None, v) => v.clone(),
                    (Some(Value::Integer(a)), Value::Integer(b)) => Value::Integer(
                        a.checked_add(*b)
                            .ok_or_else(|| QueryError::Eval("SUM overflowed".to_string()))?,
                    ),
                    (Some(Value::Float(a)), Value::Float(b)) => Value::Float(a + b),
                    _ => return Err(QueryError::Eval("SUM over mixed types".to_string())),
                });
            }
            Ok(acc.unwrap_or(Value::Null))
        }
        AggFunc::Min | AggFunc::Max => {
            let mut acc: Option<&Value> = None;
            for v in values {
                acc = Some(match acc {
                    None => v,
                    Some(best) => match v.sql_cmp(best) {
                        Some(std::cmp::Ordering::Less) if func == AggFunc::Min => v,
                        Some(std::cmp::Ordering::Greater) if func == AggFunc::Max => v,
                        // Incomparable values (NaN) keep the current best.
                        _ => best,
                    },
                });
            }
            Ok(acc.cloned().unwrap_or(Value::Null))
        }
        AggFunc::Avg => {
            let mut sum = 0.0f64;
            let mut count = 0usize;
            for v in values {
                sum += match v {
                    Value::Integer(i) => *i as f64,
                    Value::Float(f) => *f,
                    _ => return Err(QueryError::Eval("AVG over non-numeric values".to_string())),
                };
                count += 1;
            }
            if count == 0 {
                Ok(Value::Null)
            } else {
                Ok(Value::Float(sum / count as f64))
            }
        }
    }
}
