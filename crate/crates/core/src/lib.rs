//! Data model and query engine for tree-structured records.
//!
//! A *tree-schema* describes nested records: interior nodes are groups,
//! leaves carry primitive values, and every node is annotated as required,
//! optional (`?`), repeated (`*`), or repeated-required (`+`). Records are
//! trees shaped by the schema in which absent optional/repeated subtrees are
//! materialized as all-NULL *dummy* copies, so every record embeds the full
//! schema outline.
//!
//! On top of the structural model the crate supports:
//!
//! * within-record identity constraints (`I => N`: no two equal instances of
//!   the identifier `I` inside one scope) and referential constraints
//!   (`R -> I`: every referrer value must match an identifier value in the
//!   enclosing scope),
//! * three flattening operators that turn a collection of records into a
//!   relation: full (all leaves), relative (a chosen leaf subset), and
//!   constraint-aware (leaf paths may navigate across one reference),
//! * a small SQL dialect (`SELECT`/`FROM`/`WHERE`/`GROUP BY` with the usual
//!   aggregates) evaluated over the flattened relation.
//!
//! With the default `parallel` feature, flattening and evaluation fan out
//! across records with rayon and merge results in document order; disabling
//! the feature yields the identical sequential pipeline.

pub mod error;
pub mod flatten;
pub mod gen;
pub mod instance;
pub mod oracle;
pub mod query;
pub mod schema;

pub use error::{DataError, GenError, OracleError, PathError, QueryError, SchemaError};
pub use flatten::{
    flatten_full, flatten_relative, flatten_with_constraints, project_schema, FlattenedRelation,
    QueryLeafSet, RefLeaf,
};
pub use gen::{random_schema, SchemaConfig};
pub use instance::{
    check_constraints, check_identity, check_reference, enumerate_instantiations,
    generate_random_instance, isomorphic, parse_instance, parse_record, reference_match_counts,
    serialize_instance, serialize_record, validate_instance, validate_record, ConstraintViolation,
    GenBudget, Instantiation, TreeInstance, TreeRecord, Value,
};
pub use oracle::brute_force_flatten;
pub use query::{bind_query, evaluate, evaluate_via_full, explain, parse_query, BoundQuery, Query};
pub use schema::{
    classify_reference, detect_reference_cycles, parse_schema, resolve_path, serialize_schema,
    validate_schema, ConstraintSet, IdentityConstraint, NodeId, PathBinding, PrimitiveType,
    RefClass, ReferentialConstraint, Repetition, SchemaNode, SchemaSubset, TreeSchema,
};

/// Runs `op` over an indexed collection, in parallel when the `parallel`
/// feature is enabled, collecting results in input order.
pub(crate) fn map_records<T, U, F>(items: &[T], op: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(op).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(op).collect()
    }
}
