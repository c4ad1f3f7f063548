//! Human-readable evaluation plans for bound queries.
//!
//! The plan walks the same pipeline `evaluate` executes: which leaves get
//! flattened, which reference joins are spliced in (and whether each join
//! is within range or can multiply rows), then filter, grouping,
//! aggregation, and projection.

use std::fmt::Write;

use super::{BoundQuery, BoundSelect, Condition, Operand};
use crate::schema::{classify_reference, RefClass, TreeSchema};

/// Renders the evaluation plan for `query` as indented text.
pub fn explain(schema: &TreeSchema, query: &BoundQuery) -> String {
    let names = query.column_names(schema);
    let mut out = String::new();

    if query.leaf_set.referenced.is_empty() {
        let _ = writeln!(out, "scan {}: flatten over the query's leaves", schema.table_name());
    } else {
        let _ = writeln!(
            out,
            "scan {}: flatten over the query's leaves with reference joins",
            schema.table_name()
        );
    }
    for leaf in &query.leaf_set.plain {
        let _ = writeln!(out, "  column {}", schema.short_path(*leaf));
    }

    // One join per distinct (referrer, range group) pair, exactly as the
    // flattening stage shares instantiations.
    let mut seen = Vec::new();
    for entry in &query.leaf_set.referenced {
        let key = (entry.referrer, entry.range_group);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let _ = writeln!(
            out,
            "  join {} -> {} (range {})",
            schema.short_path(entry.referrer),
            schema.short_path(entry.identifier),
            schema.short_path(entry.range_group),
        );
        let constraint = schema
            .constraints
            .references_from(entry.referrer)
            .into_iter()
            .find(|c| c.referent == entry.identifier)
            .expect("bound reference paths follow a declared reference");
        match classify_reference(schema, constraint) {
            RefClass::WithinRange => {
                let _ = writeln!(
                    out,
                    "    within range: each referrer instance matches exactly one identifier"
                );
            }
            RefClass::OutOfRange => {
                let _ = writeln!(
                    out,
                    "    warning: out of range — a repeated group sits between the join's \
                     common ancestor and the range group, so one referrer value can match \
                     identifier instances in several scopes and multiply rows"
                );
            }
        }
        for e in &query.leaf_set.referenced {
            if (e.referrer, e.range_group) == key {
                let _ = writeln!(out, "    column {}", names[query.leaf_set.plain.len() + index_of(query, e)]);
            }
        }
    }

    if let Some(condition) = &query.query.condition {
        let _ = writeln!(out, "filter: {}", condition_text(condition));
    }
    if !query.group_by.is_empty() {
        let keys: Vec<&str> = query.group_by.iter().map(|&g| names[g].as_str()).collect();
        let _ = writeln!(out, "group rows by: {}", keys.join(", "));
    } else if query.has_aggregates() {
        let _ = writeln!(out, "aggregate all rows into one group");
    }
    let projected: Vec<String> = query
        .select
        .iter()
        .map(|item| match item {
            BoundSelect::Column(i) => names[*i].clone(),
            BoundSelect::Aggregate { func, column } => format!("{}({})", func.name(), names[*column]),
            BoundSelect::CountStar => "COUNT(*)".to_string(),
        })
        .collect();
    let _ = writeln!(out, "project: {}", projected.join(", "));
    out
}

fn index_of(query: &BoundQuery, entry: &crate::flatten::RefLeaf) -> usize {
    query
        .leaf_set
        .referenced
        .iter()
        .position(|e| e == entry)
        .expect("entry comes from this leaf set")
}

fn condition_text(condition: &Condition) -> String {
    match condition {
        Condition::Atom { left, op, right } => {
            format!("{} {} {}", operand_text(left), op.symbol(), operand_text(right))
        }
        Condition::And(a, b) => {
            format!("{} AND {}", guard(a, true), guard(b, true))
        }
        Condition::Or(a, b) => format!("{} OR {}", condition_text(a), condition_text(b)),
        Condition::Not(inner) => format!("NOT {}", guard(inner, false)),
    }
}

/// Parenthesizes children whose operator binds looser than the parent.
fn guard(condition: &Condition, parent_is_and: bool) -> String {
    let needs_parens = match condition {
        Condition::Or(..) => true,
        Condition::And(..) => !parent_is_and,
        _ => false,
    };
    if needs_parens {
        format!("({})", condition_text(condition))
    } else {
        condition_text(condition)
    }
}

fn operand_text(operand: &Operand) -> String {
    match operand {
        Operand::Path(p) => p.clone(),
        Operand::Literal(l) => l.to_string(),
    }
}
