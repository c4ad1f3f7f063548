//! Seeded random instance generation.
//!
//! Produces structurally valid records that satisfy every declared
//! constraint, which makes the output usable as ground truth in property
//! tests. Subtrees rooted at an identifier's ancestors are always kept
//! present so that reference pools are never empty; identifier instances
//! get distinct values per scope; referrers then pick a random identifier
//! value from their scope. The same seed always yields the same instance.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{TreeInstance, TreeRecord, Value};
use crate::error::GenError;
use crate::schema::{NodeId, PrimitiveType, Repetition, TreeSchema};

/// Size limits for generated instances.
#[derive(Debug, Clone, Copy)]
pub struct GenBudget {
    /// Number of records to generate.
    pub records: usize,
    /// Upper bound on instances of each repeated node, per parent.
    pub max_repeat: usize,
    /// Soft cap on nodes per record; once reached, the rest of the record
    /// is built with minimal counts.
    pub max_nodes: usize,
}

impl Default for GenBudget {
    fn default() -> Self {
        GenBudget { records: 4, max_repeat: 2, max_nodes: 50 }
    }
}

/// Generates a deterministic random instance of the schema.
pub fn generate_random_instance(
    schema: &TreeSchema,
    seed: u64,
    budget: GenBudget,
) -> Result<TreeInstance, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forced = forced_nodes(schema);
    let mut records = Vec::with_capacity(budget.records);
    for _ in 0..budget.records {
        let mut record = TreeRecord::new(schema.table_name());
        let root = record.root();
        let mut built = 1usize;
        for &child in schema.children(schema.root()) {
            build(schema, child, &mut record, root, &forced, &budget, &mut built, &mut rng);
        }
        assign_identifiers(schema, &mut record, &mut rng)?;
        assign_referrers(schema, &mut record, &mut rng)?;
        records.push(record);
    }
    Ok(TreeInstance { records })
}

/// Nodes that must stay present so every scope holds at least one
/// identifier instance: the referenced identifiers and their ancestors.
fn forced_nodes(schema: &TreeSchema) -> HashSet<NodeId> {
    let mut forced = HashSet::new();
    for reference in &schema.constraints.references {
        for node in schema.path_to(reference.referent) {
            forced.insert(node);
        }
    }
    forced
}

#[allow(clippy::too_many_arguments)]
fn build(
    schema: &TreeSchema,
    node: NodeId,
    record: &mut TreeRecord,
    parent_image: NodeId,
    forced: &HashSet<NodeId>,
    budget: &GenBudget,
    built: &mut usize,
    rng: &mut ChaCha8Rng,
) {
    let minimal = *built >= budget.max_nodes;
    let must_exist = forced.contains(&node);
    let count = match schema.node(node).repetition {
        Repetition::Required => 1,
        Repetition::Optional => {
            if must_exist || (!minimal && rng.gen_bool(0.7)) {
                1
            } else {
                0
            }
        }
        Repetition::Repeated => {
            let lo = usize::from(must_exist);
            if minimal {
                lo
            } else {
                rng.gen_range(lo..=budget.max_repeat.max(lo))
            }
        }
        Repetition::RepeatedRequired => {
            if minimal {
                1
            } else {
                rng.gen_range(1..=budget.max_repeat.max(1))
            }
        }
    };
    if count == 0 {
        super::parse::add_dummy(schema, node, record, parent_image);
        *built += subtree_size(schema, node);
        return;
    }
    for _ in 0..count {
        *built += 1;
        if schema.is_leaf(node) {
            let ty = schema.leaf_type(node).expect("leaf");
            record.add_leaf(parent_image, schema.label(node), random_value(ty, rng), false);
        } else {
            let image = record.add_group(parent_image, schema.label(node), false);
            for &child in schema.children(node) {
                build(schema, child, record, image, forced, budget, built, rng);
            }
        }
    }
}

fn subtree_size(schema: &TreeSchema, node: NodeId) -> usize {
    1 + schema.children(node).iter().map(|&c| subtree_size(schema, c)).sum::<usize>()
}

fn random_value(ty: PrimitiveType, rng: &mut ChaCha8Rng) -> Value {
    match ty {
        PrimitiveType::Integer => Value::Integer(rng.gen_range(0..100)),
        PrimitiveType::Float => Value::Float(f64::from(rng.gen_range(0..100)) / 4.0),
        PrimitiveType::String => {
            let n: u32 = rng.gen_range(0..26);
            Value::String(format!("{}{}", char::from(b'a' + n as u8), rng.gen_range(0..10)))
        }
        PrimitiveType::Boolean => Value::Boolean(rng.gen_bool(0.5)),
    }
}

/// Gives the identifier instances within each scope distinct values. For a
/// group identifier the first leaf underneath is made distinct, which is
/// enough to make the subtrees pairwise non-isomorphic.
fn assign_identifiers(
    schema: &TreeSchema,
    record: &mut TreeRecord,
    rng: &mut ChaCha8Rng,
) -> Result<(), GenError> {
    for identity in &schema.constraints.identities {
        let scope = schema.identity_scope(identity);
        let below = labels_between(schema, scope, identity.identifier);
        let distinct_leaf = first_leaf(schema, identity.identifier);
        let offset = labels_between(schema, identity.identifier, distinct_leaf);
        let ty = schema.leaf_type(distinct_leaf).expect("first leaf is a leaf");
        for scope_inst in record.instances_of(schema, scope) {
            let ids: Vec<NodeId> = record
                .instances_below(scope_inst, &below)
                .into_iter()
                .filter(|&n| !record.node(n).dummy)
                .collect();
            let values = distinct_values(ty, ids.len(), schema, distinct_leaf, rng)?;
            for (id_inst, value) in ids.iter().zip(values) {
                let target = record
                    .instances_below(*id_inst, &offset)
                    .into_iter()
                    .next()
                    .expect("identifier subtree is fully required");
                record.set_value(target, value);
            }
        }
    }
    Ok(())
}

/// First leaf under `node` in document order (`node` itself when a leaf).
fn first_leaf(schema: &TreeSchema, node: NodeId) -> NodeId {
    let mut cur = node;
    while let Some(&child) = schema.children(cur).first() {
        cur = child;
    }
    cur
}

fn distinct_values(
    ty: PrimitiveType,
    n: usize,
    schema: &TreeSchema,
    leaf: NodeId,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Value>, GenError> {
    match ty {
        PrimitiveType::Boolean => {
            if n > 2 {
                return Err(GenError::IdentifierDomainExhausted {
                    needed: n,
                    ty: ty.name().to_string(),
                    path: schema.path_string(leaf),
                });
            }
            let mut pool = vec![Value::Boolean(false), Value::Boolean(true)];
            pool.shuffle(rng);
            Ok(pool.into_iter().take(n).collect())
        }
        _ => {
            let mut pool: Vec<i64> = (1..=(n as i64 * 3).max(8)).collect();
            pool.shuffle(rng);
            Ok(pool
                .into_iter()
                .take(n)
                .map(|i| match ty {
                    PrimitiveType::Integer => Value::Integer(i),
                    PrimitiveType::Float => Value::Float(i as f64),
                    PrimitiveType::String => Value::String(format!("id{i}")),
                    PrimitiveType::Boolean => unreachable!(),
                })
                .collect())
        }
    }
}

/// Points every non-dummy referrer at a random identifier value from its
/// scope.
fn assign_referrers(
    schema: &TreeSchema,
    record: &mut TreeRecord,
    rng: &mut ChaCha8Rng,
) -> Result<(), GenError> {
    for reference in &schema.constraints.references {
        let range = schema
            .constraints
            .identity_for(reference.referent)
            .expect("referent is a declared identifier")
            .range_group;
        let scope = schema.lca(reference.referrer, range);
        let to_referrer = labels_between(schema, scope, reference.referrer);
        let to_identifier = labels_between(schema, scope, reference.referent);
        for scope_inst in record.instances_of(schema, scope) {
            let pool: Vec<Value> = record
                .instances_below(scope_inst, &to_identifier)
                .into_iter()
                .filter(|&n| !record.node(n).dummy)
                .filter_map(|n| record.value(n).cloned())
                .collect();
            let referrers: Vec<NodeId> = record
                .instances_below(scope_inst, &to_referrer)
                .into_iter()
                .filter(|&n| !record.node(n).dummy)
                .collect();
            for referrer in referrers {
                match pool.choose(rng) {
                    Some(value) => record.set_value(referrer, value.clone()),
                    None => {
                        return Err(GenError::UnsatisfiableReference {
                            path: record.display_path(referrer),
                        })
                    }
                }
            }
        }
    }
    Ok(())
}

/// Labels on the walk from `top` (exclusive) down to `node` (inclusive).
fn labels_between(schema: &TreeSchema, top: NodeId, node: NodeId) -> Vec<&str> {
    let path = schema.path_to(node);
    let skip = schema.path_to(top).len();
    path[skip..].iter().map(|&n| schema.label(n)).collect()
}
