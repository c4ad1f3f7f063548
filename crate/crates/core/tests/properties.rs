//! Property suite over seeded random workloads.
//!
//! Generation is driven by seeds so every failure shrinks to a seed pair
//! that reproduces the workload exactly.

use proptest::prelude::*;

use treesql_core::{
    flatten_full, flatten_relative, generate_random_instance, isomorphic, parse_instance,
    parse_schema, random_schema, serialize_instance, serialize_schema, validate_instance,
    GenBudget, SchemaConfig, TreeInstance, TreeSchema,
};

fn workload(schema_seed: u64, data_seed: u64, references: usize) -> (TreeSchema, TreeInstance) {
    let config = SchemaConfig { references, ..SchemaConfig::default() };
    let schema = random_schema(schema_seed, &config);
    let budget = GenBudget { records: 2, max_repeat: 2, max_nodes: 30 };
    let instance =
        generate_random_instance(&schema, data_seed, budget).expect("workloads generate");
    (schema, instance)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn schema_serialization_round_trips(seed in any::<u64>(), references in 0usize..3) {
        let config = SchemaConfig { references, ..SchemaConfig::default() };
        let schema = random_schema(seed, &config);
        let reparsed = parse_schema(&serialize_schema(&schema)).expect("serialized schemas parse");
        prop_assert_eq!(schema, reparsed);
    }

    #[test]
    fn instance_serialization_round_trips(seed in any::<u64>(), data_seed in any::<u64>()) {
        let (schema, instance) = workload(seed, data_seed, 1);
        let text = serialize_instance(&schema, &instance).to_string();
        let reparsed = parse_instance(&schema, &text).expect("serialized instances parse");
        prop_assert_eq!(instance.records.len(), reparsed.records.len());
        for (a, b) in instance.records.iter().zip(&reparsed.records) {
            prop_assert!(isomorphic(a, a.root(), b, b.root()));
        }
    }

    #[test]
    fn generated_instances_validate(seed in any::<u64>(), data_seed in any::<u64>()) {
        let (schema, instance) = workload(seed, data_seed, 2);
        prop_assert!(validate_instance(&schema, &instance).is_empty());
    }

    #[test]
    fn flattening_is_deterministic(seed in any::<u64>(), data_seed in any::<u64>()) {
        let (schema, instance) = workload(seed, data_seed, 0);
        let a = flatten_full(&schema, &instance);
        let b = flatten_full(&schema, &instance);
        prop_assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn relative_support_is_the_projected_full_support(
        seed in any::<u64>(),
        data_seed in any::<u64>(),
        pick in any::<u64>(),
    ) {
        let (schema, instance) = workload(seed, data_seed, 0);
        let leaves = schema.leaves();
        let count = 1 + (pick as usize) % leaves.len().min(3);
        let mut subset: Vec<_> = leaves
            .iter()
            .copied()
            .enumerate()
            .filter(|(i, _)| (pick >> (i % 60)) & 1 == 0)
            .map(|(_, l)| l)
            .take(count)
            .collect();
        if subset.is_empty() {
            subset.push(leaves[0]);
        }
        subset.sort_unstable();

        let relative = flatten_relative(&schema, &instance, &subset);
        let full = flatten_full(&schema, &instance);
        let positions: Vec<usize> = subset
            .iter()
            .map(|l| leaves.iter().position(|x| x == l).expect("subset of leaves"))
            .collect();
        let projected: std::collections::HashSet<Vec<_>> = full
            .rows
            .iter()
            .map(|row| positions.iter().map(|&p| row[p].clone()).collect())
            .collect();
        prop_assert_eq!(relative.support(), projected);
        prop_assert!(relative.rows.len() <= full.rows.len());
    }

    #[test]
    fn every_record_yields_at_least_one_full_row(seed in any::<u64>(), data_seed in any::<u64>()) {
        // Dummies materialize absent subtrees, so full flattening never
        // silently drops a record.
        let (schema, instance) = workload(seed, data_seed, 0);
        let rows = flatten_full(&schema, &instance).rows.len();
        prop_assert!(rows >= instance.records.len());
    }
}
