//! Structural validation and constraint checking for records.
//!
//! Structural checks confirm that a record honors its schema's repetition
//! annotations and leaf types. Constraint checks enforce identity
//! (uniqueness of identifier instances per scope) and referential
//! integrity (every non-NULL referrer matches some identifier in scope).
//! Both run per record and report every violation rather than stopping at
//! the first.

use std::fmt;

use super::{isomorphic, InstancePayload, TreeInstance, TreeRecord, Value};
use crate::schema::{
    IdentityConstraint, NodeId, PrimitiveType, ReferentialConstraint, Repetition, TreeSchema,
};

/// A structural problem found by `validate_record`.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceDiagnostic {
    /// The record's root label does not match the table name.
    RootLabelMismatch { expected: String, found: String },
    /// A required or repeated-required node has no real instance.
    RequiredAbsent { path: String },
    /// A required node has more than one instance.
    RequiredMultiple { path: String, count: usize },
    /// An optional node has more than one real instance.
    OptionalMultiple { path: String, count: usize },
    /// A dummy where none belongs: under a required annotation, next to
    /// real siblings, or duplicated.
    UnexpectedDummy { path: String },
    /// An optional or repeated node with neither real instances nor a dummy.
    AbsentWithoutDummy { path: String },
    /// A dummy subtree containing a non-NULL value or a non-dummy node.
    MalformedDummy { path: String },
    /// A real leaf holding NULL; NULL belongs only to dummies.
    NullOutsideDummy { path: String },
    /// A leaf value of the wrong primitive type.
    TypeMismatch { path: String, expected: PrimitiveType, found: String },
}

impl fmt::Display for InstanceDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceDiagnostic::RootLabelMismatch { expected, found } => {
                write!(f, "record root is `{found}` but the table is `{expected}`")
            }
            InstanceDiagnostic::RequiredAbsent { path } => {
                write!(f, "required node `{path}` is absent")
            }
            InstanceDiagnostic::RequiredMultiple { path, count } => {
                write!(f, "required node `{path}` appears {count} times")
            }
            InstanceDiagnostic::OptionalMultiple { path, count } => {
                write!(f, "optional node `{path}` appears {count} times")
            }
            InstanceDiagnostic::UnexpectedDummy { path } => {
                write!(f, "unexpected dummy at `{path}`")
            }
            InstanceDiagnostic::AbsentWithoutDummy { path } => {
                write!(f, "absent node `{path}` has no dummy placeholder")
            }
            InstanceDiagnostic::MalformedDummy { path } => {
                write!(f, "dummy subtree at `{path}` contains real content")
            }
            InstanceDiagnostic::NullOutsideDummy { path } => {
                write!(f, "NULL at real leaf `{path}`")
            }
            InstanceDiagnostic::TypeMismatch { path, expected, found } => {
                write!(f, "leaf `{path}` expects {} but holds {found}", expected.name())
            }
        }
    }
}

/// Checks one record's structure against the schema.
pub fn validate_record(schema: &TreeSchema, record: &TreeRecord) -> Vec<InstanceDiagnostic> {
    let mut out = Vec::new();
    if record.label(record.root()) != schema.table_name() {
        out.push(InstanceDiagnostic::RootLabelMismatch {
            expected: schema.table_name().to_string(),
            found: record.label(record.root()).to_string(),
        });
        return out;
    }
    check_group(schema, schema.root(), record, record.root(), &mut out);
    out
}

/// Checks every record; returns `(record index, diagnostic)` pairs.
pub fn validate_instance(
    schema: &TreeSchema,
    instance: &TreeInstance,
) -> Vec<(usize, InstanceDiagnostic)> {
    instance
        .records
        .iter()
        .enumerate()
        .flat_map(|(i, r)| validate_record(schema, r).into_iter().map(move |d| (i, d)))
        .collect()
}

fn check_group(
    schema: &TreeSchema,
    group: NodeId,
    record: &TreeRecord,
    image: NodeId,
    out: &mut Vec<InstanceDiagnostic>,
) {
    for &child in schema.children(group) {
        let instances = record.children_labeled(image, schema.label(child));
        let (real, dummy): (Vec<NodeId>, Vec<NodeId>) =
            instances.iter().partition(|&&n| !record.node(n).dummy);
        let path = || record.display_path(image) + "." + schema.label(child);
        match schema.node(child).repetition {
            Repetition::Required => {
                if !dummy.is_empty() {
                    out.push(InstanceDiagnostic::UnexpectedDummy { path: path() });
                }
                if real.is_empty() {
                    out.push(InstanceDiagnostic::RequiredAbsent { path: path() });
                } else if real.len() > 1 {
                    out.push(InstanceDiagnostic::RequiredMultiple { path: path(), count: real.len() });
                }
            }
            Repetition::Optional => {
                if real.len() > 1 {
                    out.push(InstanceDiagnostic::OptionalMultiple { path: path(), count: real.len() });
                }
                check_dummy_slot(&real, &dummy, path, out);
            }
            Repetition::Repeated => {
                check_dummy_slot(&real, &dummy, path, out);
            }
            Repetition::RepeatedRequired => {
                if !dummy.is_empty() {
                    out.push(InstanceDiagnostic::UnexpectedDummy { path: path() });
                }
                if real.is_empty() {
                    out.push(InstanceDiagnostic::RequiredAbsent { path: path() });
                }
            }
        }
        for &node in &dummy {
            check_dummy_subtree(record, node, out);
        }
        for &node in &real {
            check_real_node(schema, child, record, node, out);
        }
    }
}

/// Dummies stand in for absence: at most one, never next to real instances,
/// and mandatory when nothing real is present.
fn check_dummy_slot(
    real: &[NodeId],
    dummy: &[NodeId],
    path: impl Fn() -> String,
    out: &mut Vec<InstanceDiagnostic>,
) {
    if dummy.len() > 1 || (!dummy.is_empty() && !real.is_empty()) {
        out.push(InstanceDiagnostic::UnexpectedDummy { path: path() });
    }
    if real.is_empty() && dummy.is_empty() {
        out.push(InstanceDiagnostic::AbsentWithoutDummy { path: path() });
    }
}

fn check_real_node(
    schema: &TreeSchema,
    schema_node: NodeId,
    record: &TreeRecord,
    node: NodeId,
    out: &mut Vec<InstanceDiagnostic>,
) {
    match &record.node(node).payload {
        InstancePayload::Leaf(value) => {
            let expected = schema.leaf_type(schema_node);
            match (expected, value) {
                (None, _) => out.push(InstanceDiagnostic::TypeMismatch {
                    path: record.display_path(node),
                    expected: PrimitiveType::String,
                    found: "a leaf where the schema has a group".to_string(),
                }),
                (Some(_), Value::Null) => out.push(InstanceDiagnostic::NullOutsideDummy {
                    path: record.display_path(node),
                }),
                (Some(t), v) => {
                    if v.type_of() != Some(t) {
                        out.push(InstanceDiagnostic::TypeMismatch {
                            path: record.display_path(node),
                            expected: t,
                            found: format!("{v}"),
                        });
                    }
                }
            }
        }
        InstancePayload::Group(_) => {
            if schema.is_leaf(schema_node) {
                out.push(InstanceDiagnostic::TypeMismatch {
                    path: record.display_path(node),
                    expected: schema.leaf_type(schema_node).unwrap_or(PrimitiveType::String),
                    found: "a group where the schema has a leaf".to_string(),
                });
            } else {
                check_group(schema, schema_node, record, node, out);
            }
        }
    }
}

fn check_dummy_subtree(record: &TreeRecord, node: NodeId, out: &mut Vec<InstanceDiagnostic>) {
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        if !record.node(n).dummy {
            out.push(InstanceDiagnostic::MalformedDummy { path: record.display_path(node) });
            return;
        }
        match &record.node(n).payload {
            InstancePayload::Leaf(Value::Null) => {}
            InstancePayload::Leaf(_) => {
                out.push(InstanceDiagnostic::MalformedDummy { path: record.display_path(node) });
                return;
            }
            InstancePayload::Group(children) => stack.extend(children.iter().copied()),
        }
    }
}

/// Two identifier instances in the same scope that are isomorphic.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityViolation {
    pub constraint: IdentityConstraint,
    pub scope: NodeId,
    pub first: NodeId,
    pub second: NodeId,
}

/// A non-NULL referrer instance with no matching identifier in scope.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceViolation {
    pub constraint: ReferentialConstraint,
    pub scope: NodeId,
    pub referrer: NodeId,
}

/// Any constraint violation, tagged with the record it occurred in.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintViolation {
    Identity { record: usize, violation: IdentityViolation },
    Reference { record: usize, violation: ReferenceViolation },
}

impl ConstraintViolation {
    /// Human-readable description with record paths.
    pub fn describe(&self, schema: &TreeSchema, instance: &TreeInstance) -> String {
        match self {
            ConstraintViolation::Identity { record, violation } => {
                let r = &instance.records[*record];
                format!(
                    "record {record}: identity {} => {} violated: `{}` and `{}` are equal",
                    schema.short_path(violation.constraint.identifier),
                    schema.short_path(violation.constraint.range_group),
                    r.display_path(violation.first),
                    r.display_path(violation.second),
                )
            }
            ConstraintViolation::Reference { record, violation } => {
                let r = &instance.records[*record];
                let value = r
                    .value(violation.referrer)
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                format!(
                    "record {record}: reference {} -> {} violated: `{}` = {value} matches no identifier in `{}`",
                    schema.short_path(violation.constraint.referrer),
                    schema.short_path(violation.constraint.referent),
                    r.display_path(violation.referrer),
                    r.display_path(violation.scope),
                )
            }
        }
    }
}

/// Checks one identity constraint in one record: within every scope
/// instance, reports each pair of isomorphic non-dummy identifier
/// instances.
pub fn check_identity(
    schema: &TreeSchema,
    record: &TreeRecord,
    constraint: &IdentityConstraint,
) -> Vec<IdentityViolation> {
    let scope = schema.identity_scope(constraint);
    let below = labels_between(schema, scope, constraint.identifier);
    let mut out = Vec::new();
    for scope_inst in record.instances_of(schema, scope) {
        let ids: Vec<NodeId> = record
            .instances_below(scope_inst, &below)
            .into_iter()
            .filter(|&n| !record.node(n).dummy)
            .collect();
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                if isomorphic(record, ids[i], record, ids[j]) {
                    out.push(IdentityViolation {
                        constraint: *constraint,
                        scope: scope_inst,
                        first: ids[i],
                        second: ids[j],
                    });
                }
            }
        }
    }
    out
}

/// For each non-NULL, non-dummy referrer instance: how many identifier
/// instances in its scope carry the same value. A count of zero is a
/// violation; within-range references always count exactly one.
pub fn reference_match_counts(
    schema: &TreeSchema,
    record: &TreeRecord,
    constraint: &ReferentialConstraint,
) -> Vec<(NodeId, usize)> {
    let range = schema
        .constraints
        .identity_for(constraint.referent)
        .expect("referent is a declared identifier")
        .range_group;
    let scope = schema.lca(constraint.referrer, range);
    let to_referrer = labels_between(schema, scope, constraint.referrer);
    let to_identifier = labels_between(schema, scope, constraint.referent);
    let mut out = Vec::new();
    for scope_inst in record.instances_of(schema, scope) {
        let identifiers: Vec<&Value> = record
            .instances_below(scope_inst, &to_identifier)
            .into_iter()
            .filter(|&n| !record.node(n).dummy)
            .filter_map(|n| record.value(n))
            .collect();
        for referrer in record.instances_below(scope_inst, &to_referrer) {
            if record.node(referrer).dummy {
                continue;
            }
            let value = record.value(referrer).expect("referrer is a leaf");
            if value.is_null() {
                continue;
            }
            let count = identifiers.iter().filter(|&&v| v == value).count();
            out.push((referrer, count));
        }
    }
    out
}

/// Checks one referential constraint in one record.
pub fn check_reference(
    schema: &TreeSchema,
    record: &TreeRecord,
    constraint: &ReferentialConstraint,
) -> Vec<ReferenceViolation> {
    let range = schema
        .constraints
        .identity_for(constraint.referent)
        .expect("referent is a declared identifier")
        .range_group;
    let scope = schema.lca(constraint.referrer, range);
    reference_match_counts(schema, record, constraint)
        .into_iter()
        .filter(|&(_, count)| count == 0)
        .map(|(referrer, _)| {
            let scope_inst = *record
                .path_to(referrer)
                .get(schema.path_to(scope).len() - 1)
                .expect("referrer sits below its scope");
            ReferenceViolation { constraint: *constraint, scope: scope_inst, referrer }
        })
        .collect()
}

/// Runs every declared constraint over every record.
pub fn check_constraints(schema: &TreeSchema, instance: &TreeInstance) -> Vec<ConstraintViolation> {
    let mut out = Vec::new();
    for (i, record) in instance.records.iter().enumerate() {
        for identity in &schema.constraints.identities {
            for violation in check_identity(schema, record, identity) {
                out.push(ConstraintViolation::Identity { record: i, violation });
            }
        }
        for reference in &schema.constraints.references {
            for violation in check_reference(schema, record, reference) {
                out.push(ConstraintViolation::Reference { record: i, violation });
            }
        }
    }
    out
}

/// Labels on the walk from `top` (exclusive) down to `node` (inclusive).
fn labels_between(schema: &TreeSchema, top: NodeId, node: NodeId) -> Vec<&str> {
    let path = schema.path_to(node);
    let skip = schema.path_to(top).len();
    path[skip..].iter().map(|&n| schema.label(n)).collect()
}
