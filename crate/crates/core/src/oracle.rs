//! Brute-force reference evaluator for the flattening operators.
//!
//! Where the engine walks parent-to-child and prunes as it goes, this
//! evaluator enumerates the raw cartesian product of all candidate nodes
//! per selected path and then filters by the mapping conditions. That is
//! exponentially wasteful — hence the explicit budget — but it derives the
//! result from the definitions alone, which makes it a useful arbiter in
//! tests. Never use it outside of tests.

use crate::error::OracleError;
use crate::flatten::{FlattenedRelation, QueryLeafSet};
use crate::instance::{TreeInstance, TreeRecord, Value};
use crate::schema::{NodeId, SchemaSubset, TreeSchema};

/// One candidate mapping: schema node index -> record node.
type Assignment = Vec<Option<NodeId>>;

/// Evaluates the selected leaf set by exhaustive enumeration.
pub fn brute_force_flatten(
    schema: &TreeSchema,
    instance: &TreeInstance,
    set: &QueryLeafSet,
    budget: u128,
) -> Result<FlattenedRelation, OracleError> {
    let mut plain_and_referrers: Vec<NodeId> = set.plain.clone();
    plain_and_referrers.extend(set.referenced.iter().map(|r| r.referrer));
    let base_subset = SchemaSubset::from_nodes(schema, &plain_and_referrers);

    // Referenced leaves sharing (referrer, range group) resolve through one
    // shared mapping; collect the distinct keys in first-appearance order.
    let mut keys: Vec<(NodeId, NodeId)> = Vec::new();
    for entry in &set.referenced {
        let key = (entry.referrer, entry.range_group);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let group_subsets: Vec<SchemaSubset> = keys
        .iter()
        .map(|&(referrer, range_group)| {
            let mut nodes = vec![referrer];
            for entry in &set.referenced {
                if entry.range_group == range_group {
                    nodes.push(entry.leaf);
                }
                if (entry.referrer, entry.range_group) == (referrer, range_group) {
                    nodes.push(entry.identifier);
                }
            }
            SchemaSubset::from_nodes(schema, &nodes)
        })
        .collect();

    let mut rows = Vec::new();
    for record in &instance.records {
        let base = mappings(schema, record, &base_subset, budget)?;
        let mut group_mappings: Vec<Vec<Assignment>> = Vec::new();
        for (key, subset) in keys.iter().zip(&group_subsets) {
            let identifiers: Vec<NodeId> = set
                .referenced
                .iter()
                .filter(|e| (e.referrer, e.range_group) == *key)
                .map(|e| e.identifier)
                .collect();
            let filtered = mappings(schema, record, subset, budget)?
                .into_iter()
                .filter(|m| {
                    let rv = value_of(record, m, key.0);
                    !rv.is_null() && identifiers.iter().all(|&i| value_of(record, m, i) == rv)
                })
                .collect();
            group_mappings.push(filtered);
        }

        for m in &base {
            let per_group: Vec<Vec<&Assignment>> = keys
                .iter()
                .zip(&group_mappings)
                .map(|(&(referrer, _), cands)| {
                    cands
                        .iter()
                        .filter(|c| c[referrer.index()] == m[referrer.index()])
                        .collect()
                })
                .collect();
            if per_group.iter().any(|g| g.is_empty()) {
                continue;
            }
            product(&per_group, &mut |chosen| {
                let mut row = Vec::with_capacity(set.column_count());
                for &leaf in &set.plain {
                    row.push(value_of(record, m, leaf).clone());
                }
                for entry in &set.referenced {
                    let key = (entry.referrer, entry.range_group);
                    let g = keys.iter().position(|&k| k == key).expect("key collected");
                    row.push(value_of(record, chosen[g], entry.leaf).clone());
                }
                rows.push(row);
            });
        }
    }

    Ok(FlattenedRelation { header: set.header(schema), rows })
}

fn value_of<'r>(record: &'r TreeRecord, assignment: &Assignment, node: NodeId) -> &'r Value {
    let image = assignment[node.index()].expect("node belongs to the subset");
    record.value(image).expect("leaf maps to a leaf")
}

/// All parent-consistent, label-preserving mappings of the subset into the
/// record, found by filtering the cartesian product of per-node candidates.
fn mappings(
    schema: &TreeSchema,
    record: &TreeRecord,
    subset: &SchemaSubset,
    budget: u128,
) -> Result<Vec<Assignment>, OracleError> {
    let members = subset.members();

    // Candidates by reachability path, independently of any tree walk.
    let mut candidates: Vec<Vec<NodeId>> = Vec::with_capacity(members.len());
    for &node in &members {
        let want = schema.reachability_path(node);
        let found: Vec<NodeId> = (0..record.node_count() as u32)
            .map(NodeId)
            .filter(|&n| record_path(record, n) == want)
            .collect();
        candidates.push(found);
    }

    let mut size: u128 = 1;
    for c in &candidates {
        size = size.saturating_mul(c.len() as u128);
        if size > budget {
            return Err(OracleError::BudgetExceeded { size, budget });
        }
    }

    let mut out = Vec::new();
    let mut choice = vec![0usize; members.len()];
    if candidates.iter().any(|c| c.is_empty()) {
        return Ok(out);
    }
    loop {
        let mut assignment: Assignment = vec![None; schema.node_count()];
        for (i, &node) in members.iter().enumerate() {
            assignment[node.index()] = Some(candidates[i][choice[i]]);
        }
        let consistent = members.iter().all(|&node| match schema.node(node).parent {
            None => assignment[node.index()] == Some(record.root()),
            Some(parent) => {
                let image = assignment[node.index()].expect("assigned");
                record.node(image).parent == assignment[parent.index()]
            }
        });
        if consistent {
            out.push(assignment);
        }
        let mut level = members.len();
        loop {
            if level == 0 {
                return Ok(out);
            }
            level -= 1;
            choice[level] += 1;
            if choice[level] < candidates[level].len() {
                break;
            }
            choice[level] = 0;
        }
    }
}

fn record_path(record: &TreeRecord, node: NodeId) -> Vec<&str> {
    record.path_to(node).into_iter().map(|n| record.label(n)).collect()
}

/// Calls `emit` with every combination of one element per group.
fn product<'a, T, F: FnMut(&[&'a T])>(groups: &[Vec<&'a T>], emit: &mut F) {
    let mut choice = vec![0usize; groups.len()];
    loop {
        let chosen: Vec<&T> = groups.iter().zip(&choice).map(|(g, &i)| g[i]).collect();
        emit(&chosen);
        let mut level = groups.len();
        loop {
            if level == 0 {
                return;
            }
            level -= 1;
            choice[level] += 1;
            if choice[level] < groups[level].len() {
                break;
            }
            choice[level] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flatten::{flatten_full, flatten_with_constraints};
    use crate::instance::parse_instance;
    use crate::schema::{parse_schema, resolve_path};

    const BUDGET: u128 = 1 << 20;

    #[test]
    fn agrees_with_the_engine_on_nested_repetition() {
        let schema = parse_schema(
            r#"{"table": {"name": "T", "fields": [
                {"name": "N1", "type": "string"},
                {"name": "N3", "repetition": "repeated", "fields": [
                    {"name": "N2", "repetition": "repeated", "type": "string"},
                    {"name": "N4", "repetition": "optional", "type": "string"}
                ]}
            ]}}"#,
        )
        .unwrap();
        let instance = parse_instance(
            &schema,
            r#"[{"N1": "V1", "N3": [{"N2": ["V2", "V3"], "N4": "V4"}, {"N2": ["V5"]}]}]"#,
        )
        .unwrap();
        let set = QueryLeafSet::all_leaves(&schema);
        let oracle = brute_force_flatten(&schema, &instance, &set, BUDGET).unwrap();
        assert!(oracle.multiset_eq(&flatten_full(&schema, &instance)));
    }

    #[test]
    fn agrees_with_the_engine_on_reference_joins() {
        let schema = parse_schema(
            r#"{"table": {"name": "T", "fields": [
                {"name": "S", "repetition": "repeated", "fields": [
                    {"name": "Ref", "repetition": "optional", "type": "integer"}
                ]},
                {"name": "G", "repetition": "repeated", "fields": [
                    {"name": "Id", "type": "integer"},
                    {"name": "City", "type": "string"}
                ]}
            ]},
            "identities": [{"id_path": "G.Id"}],
            "references": [{"referrer_path": "S.Ref", "referent_path": "G.Id"}]}"#,
        )
        .unwrap();
        let instance = parse_instance(
            &schema,
            r#"[{"S": [{"Ref": 2}, {}, {"Ref": 1}],
                 "G": [{"Id": 1, "City": "a"}, {"Id": 2, "City": "b"}]}]"#,
        )
        .unwrap();
        let mut set = QueryLeafSet::default();
        set.insert(&resolve_path(&schema, "Ref.City").unwrap());
        let oracle = brute_force_flatten(&schema, &instance, &set, BUDGET).unwrap();
        let engine = flatten_with_constraints(&schema, &instance, &set);
        assert!(oracle.multiset_eq(&engine));
        assert_eq!(engine.rows.len(), 2);
    }

    #[test]
    fn budget_overflow_is_an_error() {
        let schema = parse_schema(
            r#"{"table": {"name": "T", "fields": [
                {"name": "X", "repetition": "repeated", "type": "integer"},
                {"name": "Y", "repetition": "repeated", "type": "integer"}
            ]}}"#,
        )
        .unwrap();
        let instance = parse_instance(
            &schema,
            r#"[{"X": [1, 2, 3, 4], "Y": [1, 2, 3, 4]}]"#,
        )
        .unwrap();
        let set = QueryLeafSet::all_leaves(&schema);
        let err = brute_force_flatten(&schema, &instance, &set, 8).unwrap_err();
        assert!(matches!(err, OracleError::BudgetExceeded { .. }));
    }
}
