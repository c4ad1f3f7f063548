//! Flattening throughput over a generated workload.
//!
//! Run `cargo bench` for the parallel pipeline and
//! `cargo bench --no-default-features` for the sequential fallback; the
//! reported times compare directly because the workload is seeded.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use treesql_core::{
    bind_query, evaluate, flatten_full, generate_random_instance, parse_query, random_schema,
    GenBudget, SchemaConfig, TreeInstance, TreeSchema,
};

fn workload() -> (TreeSchema, TreeInstance) {
    let config = SchemaConfig { max_depth: 4, max_children: 4, references: 2, ..SchemaConfig::default() };
    let schema = random_schema(97, &config);
    let budget = GenBudget { records: 400, max_repeat: 3, max_nodes: 120 };
    let instance = generate_random_instance(&schema, 97, budget).expect("generable workload");
    (schema, instance)
}

fn bench_flatten(c: &mut Criterion) {
    let (schema, instance) = workload();
    c.bench_function("flatten_full/400_records", |b| {
        b.iter_batched(
            || (),
            |_| flatten_full(&schema, &instance),
            BatchSize::SmallInput,
        )
    });
}

fn bench_query(c: &mut Criterion) {
    let (schema, instance) = workload();
    // Aggregate over every leaf-bearing row; exercises flatten + pipeline.
    let leaf = schema.leaves()[0];
    let text = format!(
        "SELECT COUNT({path}) FROM {table}",
        path = schema.short_path(leaf),
        table = schema.table_name()
    );
    let query = bind_query(&schema, &parse_query(&text).expect("valid query")).expect("bindable");
    c.bench_function("evaluate/count_over_400_records", |b| {
        b.iter_batched(
            || (),
            |_| evaluate(&schema, &query, &instance).expect("evaluable"),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, bench_flatten, bench_query);
criterion_main!(benches);
