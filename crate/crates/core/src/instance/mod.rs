//! Tree-records: instances of a tree-schema.
//!
//! A record mirrors its schema's outline. Required nodes appear exactly
//! once, optional nodes once or as a dummy, repeated nodes any number of
//! times or as a dummy, repeated-required nodes at least once. A *dummy* is
//! a fully materialized all-NULL copy of the missing subtree, so every
//! schema path is present in every record — that is what makes flattening
//! total.

mod check;
mod generate;
mod parse;

pub use check::{
    check_constraints, check_identity, check_reference, reference_match_counts, validate_instance,
    validate_record, ConstraintViolation, IdentityViolation, InstanceDiagnostic, ReferenceViolation,
};
pub use generate::{generate_random_instance, GenBudget};
pub use parse::{parse_instance, parse_record, serialize_instance, serialize_record};

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::schema::{NodeId, PrimitiveType, SchemaSubset, TreeSchema};

/// A primitive value at a leaf, or NULL.
///
/// Equality and hashing are exact: floats compare by bit pattern, and NULL
/// equals NULL. This is the notion used for identity checking, reference
/// matching, and grouping. Ordered comparisons for filters go through
/// [`Value::sql_cmp`], which instead treats NULL and mismatched kinds as
/// incomparable.
#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Integer(i64),
    Float(f64),
    String(String),
    Boolean(bool),
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Integer(a), Value::Integer(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::String(a), Value::String(b)) => a == b,
            (Value::Boolean(a), Value::Boolean(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Value::Null => 0u8.hash(state),
            Value::Integer(v) => {
                1u8.hash(state);
                v.hash(state);
            }
            Value::Float(v) => {
                2u8.hash(state);
                v.to_bits().hash(state);
            }
            Value::String(v) => {
                3u8.hash(state);
                v.hash(state);
            }
            Value::Boolean(v) => {
                4u8.hash(state);
                v.hash(state);
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Integer(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v}"),
            Value::String(v) => write!(f, "{v}"),
            Value::Boolean(v) => write!(f, "{v}"),
        }
    }
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// The primitive type of a non-NULL value.
    pub fn type_of(&self) -> Option<PrimitiveType> {
        match self {
            Value::Null => None,
            Value::Integer(_) => Some(PrimitiveType::Integer),
            Value::Float(_) => Some(PrimitiveType::Float),
            Value::String(_) => Some(PrimitiveType::String),
            Value::Boolean(_) => Some(PrimitiveType::Boolean),
        }
    }

    /// Comparison used by filters and MIN/MAX: defined only between values
    /// of the same kind, never for NULL, and strings collate bytewise.
    pub fn sql_cmp(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Integer(a), Value::Integer(b)) => Some(a.cmp(b)),
            (Value::Float(a), Value::Float(b)) => a.partial_cmp(b),
            (Value::String(a), Value::String(b)) => Some(a.as_bytes().cmp(b.as_bytes())),
            (Value::Boolean(a), Value::Boolean(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }

    /// Arbitrary but stable total order; handy for sorting rows in tests.
    pub fn total_cmp(&self, other: &Value) -> Ordering {
        fn rank(v: &Value) -> u8 {
            match v {
                Value::Null => 0,
                Value::Boolean(_) => 1,
                Value::Integer(_) => 2,
                Value::Float(_) => 3,
                Value::String(_) => 4,
            }
        }
        match (self, other) {
            (Value::Boolean(a), Value::Boolean(b)) => a.cmp(b),
            (Value::Integer(a), Value::Integer(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::String(a), Value::String(b)) => a.cmp(b),
            _ => rank(self).cmp(&rank(other)),
        }
    }
}

/// Group with ordered child instances, or a leaf holding a value.
#[derive(Debug, Clone, PartialEq)]
pub enum InstancePayload {
    Group(Vec<NodeId>),
    Leaf(Value),
}

/// One node of a tree-record.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceNode {
    pub id: NodeId,
    pub label: String,
    pub parent: Option<NodeId>,
    pub payload: InstancePayload,
    /// True for nodes materialized in place of an absent subtree.
    pub dummy: bool,
}

impl InstanceNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self.payload, InstancePayload::Leaf(_))
    }
}

/// A single record: an arena of nodes with ids in document order.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeRecord {
    nodes: Vec<InstanceNode>,
    root: NodeId,
}

impl TreeRecord {
    /// Creates a record consisting of just a root group.
    pub fn new(root_label: &str) -> TreeRecord {
        TreeRecord {
            nodes: vec![InstanceNode {
                id: NodeId(0),
                label: root_label.to_string(),
                parent: None,
                payload: InstancePayload::Group(Vec::new()),
                dummy: false,
            }],
            root: NodeId(0),
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &InstanceNode {
        &self.nodes[id.index()]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id.index()].label
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        match &self.nodes[id.index()].payload {
            InstancePayload::Group(children) => children,
            InstancePayload::Leaf(_) => &[],
        }
    }

    /// The value at a leaf node.
    pub fn value(&self, id: NodeId) -> Option<&Value> {
        match &self.nodes[id.index()].payload {
            InstancePayload::Leaf(v) => Some(v),
            InstancePayload::Group(_) => None,
        }
    }

    pub fn add_group(&mut self, parent: NodeId, label: &str, dummy: bool) -> NodeId {
        self.push(parent, label, InstancePayload::Group(Vec::new()), dummy)
    }

    pub fn add_leaf(&mut self, parent: NodeId, label: &str, value: Value, dummy: bool) -> NodeId {
        self.push(parent, label, InstancePayload::Leaf(value), dummy)
    }

    pub fn set_value(&mut self, id: NodeId, value: Value) {
        self.nodes[id.index()].payload = InstancePayload::Leaf(value);
    }

    fn push(&mut self, parent: NodeId, label: &str, payload: InstancePayload, dummy: bool) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(InstanceNode {
            id,
            label: label.to_string(),
            parent: Some(parent),
            payload,
            dummy,
        });
        match &mut self.nodes[parent.index()].payload {
            InstancePayload::Group(children) => children.push(id),
            InstancePayload::Leaf(_) => panic!("cannot attach a child to a leaf"),
        }
        id
    }

    /// Children of `id` labeled `label`, in order.
    pub fn children_labeled(&self, id: NodeId, label: &str) -> Vec<NodeId> {
        self.children(id).iter().copied().filter(|&c| self.label(c) == label).collect()
    }

    /// Nodes from the root down to `id`, inclusive.
    pub fn path_to(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur.index()].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// All instances of a schema node: record nodes whose label path matches
    /// the schema node's reachability path.
    pub fn instances_of(&self, schema: &TreeSchema, target: NodeId) -> Vec<NodeId> {
        if self.label(self.root) != schema.table_name() {
            return Vec::new();
        }
        let labels: Vec<&str> = schema.reachability_path(target);
        self.instances_below(self.root, &labels[1..])
    }

    /// Descendants of `start` reached by following `labels` one level at a
    /// time. An empty label list yields `start` itself.
    pub fn instances_below(&self, start: NodeId, labels: &[&str]) -> Vec<NodeId> {
        let mut frontier = vec![start];
        for label in labels {
            let mut next = Vec::new();
            for node in frontier {
                next.extend(self.children_labeled(node, label));
            }
            frontier = next;
        }
        frontier
    }

    /// Path with sibling indexes for diagnostics, e.g. `Booking.Service[1].Id`.
    pub fn display_path(&self, id: NodeId) -> String {
        let mut parts = Vec::new();
        for node in self.path_to(id) {
            let label = self.label(node);
            match self.nodes[node.index()].parent {
                None => parts.push(label.to_string()),
                Some(parent) => {
                    let siblings = self.children_labeled(parent, label);
                    if siblings.len() > 1 {
                        let idx = siblings.iter().position(|&s| s == node).expect("sibling");
                        parts.push(format!("{label}[{idx}]"));
                    } else {
                        parts.push(label.to_string());
                    }
                }
            }
        }
        parts.join(".")
    }
}

/// An ordered collection of records; the unit that flattening and queries
/// operate on.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TreeInstance {
    pub records: Vec<TreeRecord>,
}

/// True when the two subtrees have the same shape, labels, and leaf values.
/// Children are compared in order; node ids are ignored.
pub fn isomorphic(ra: &TreeRecord, a: NodeId, rb: &TreeRecord, b: NodeId) -> bool {
    if ra.label(a) != rb.label(b) {
        return false;
    }
    match (&ra.node(a).payload, &rb.node(b).payload) {
        (InstancePayload::Leaf(va), InstancePayload::Leaf(vb)) => va == vb,
        (InstancePayload::Group(ca), InstancePayload::Group(cb)) => {
            ca.len() == cb.len()
                && ca.iter().zip(cb).all(|(&x, &y)| isomorphic(ra, x, rb, y))
        }
        _ => false,
    }
}

/// A mapping from schema nodes to record nodes in which labels match level
/// by level and each child's image sits under its parent's image.
#[derive(Debug, Clone, PartialEq)]
pub struct Instantiation {
    images: Vec<Option<NodeId>>,
}

impl Instantiation {
    pub fn image_of(&self, schema_node: NodeId) -> Option<NodeId> {
        self.images[schema_node.index()]
    }

    /// The value under the image of a schema leaf.
    pub fn value_at<'a>(&self, record: &'a TreeRecord, schema_leaf: NodeId) -> &'a Value {
        let img = self.image_of(schema_leaf).expect("leaf is part of the instantiation");
        record.value(img).expect("image of a leaf is a leaf")
    }
}

/// Enumerates every instantiation of the given prefix-closed schema subset
/// into the record, in document order (choices for later nodes vary fastest).
pub fn enumerate_instantiations(
    schema: &TreeSchema,
    record: &TreeRecord,
    subset: &SchemaSubset,
) -> Vec<Instantiation> {
    if record.label(record.root()) != schema.table_name() {
        return Vec::new();
    }
    // Members are in document order, so parents precede their children.
    let members: Vec<NodeId> = subset.members();
    let mut images = vec![None; schema.node_count()];
    images[schema.root().index()] = Some(record.root());
    let mut out = Vec::new();
    fill(schema, record, &members, 1, &mut images, &mut out);
    out
}

fn fill(
    schema: &TreeSchema,
    record: &TreeRecord,
    members: &[NodeId],
    idx: usize,
    images: &mut Vec<Option<NodeId>>,
    out: &mut Vec<Instantiation>,
) {
    if idx == members.len() {
        out.push(Instantiation { images: images.clone() });
        return;
    }
    let node = members[idx];
    let parent = schema.node(node).parent.expect("only the root has no parent");
    let parent_image = images[parent.index()].expect("members are in document order");
    let label = schema.label(node);
    for candidate in record.children_labeled(parent_image, label) {
        images[node.index()] = Some(candidate);
        fill(schema, record, members, idx + 1, images, out);
    }
    images[node.index()] = None;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::parse_schema;

    fn nested_schema() -> TreeSchema {
        parse_schema(
            r#"{"table": {"name": "T", "fields": [
                {"name": "N1", "type": "string"},
                {"name": "N3", "repetition": "repeated", "fields": [
                    {"name": "N2", "repetition": "repeated", "type": "string"},
                    {"name": "N4", "repetition": "optional", "type": "string"}
                ]}
            ]}}"#,
        )
        .unwrap()
    }

    fn nested_record(schema: &TreeSchema) -> TreeRecord {
        parse_record(
            schema,
            r#"{"N1": "V1", "N3": [
                {"N2": ["V2", "V3"], "N4": "V4"},
                {"N2": ["V5"]}
            ]}"#,
        )
        .unwrap()
    }

    #[test]
    fn value_equality_is_exact() {
        assert_eq!(Value::Null, Value::Null);
        assert_ne!(Value::Integer(1), Value::Float(1.0));
        assert_eq!(Value::Float(1.5), Value::Float(1.5));
        assert_ne!(Value::Float(0.0), Value::Float(-0.0));
    }

    #[test]
    fn sql_cmp_rejects_null_and_mixed_kinds() {
        assert!(Value::Null.sql_cmp(&Value::Null).is_none());
        assert!(Value::Integer(1).sql_cmp(&Value::Float(1.0)).is_none());
        assert_eq!(
            Value::String("a".into()).sql_cmp(&Value::String("b".into())),
            Some(std::cmp::Ordering::Less)
        );
    }

    #[test]
    fn instances_of_walks_label_paths() {
        let schema = nested_schema();
        let record = nested_record(&schema);
        let n2 = crate::schema::resolve_path(&schema, "N2").unwrap();
        let leaf = match n2 {
            crate::schema::PathBinding::Leaf(l) => l,
            _ => unreachable!(),
        };
        assert_eq!(record.instances_of(&schema, leaf).len(), 3);
    }

    #[test]
    fn isomorphism_compares_shape_and_values() {
        let schema = nested_schema();
        let record = nested_record(&schema);
        let n3 = record.children_labeled(record.root(), "N3");
        assert_eq!(n3.len(), 2);
        assert!(!isomorphic(&record, n3[0], &record, n3[1]));
        assert!(isomorphic(&record, n3[0], &record, n3[0]));
    }

    #[test]
    fn instantiations_multiply_along_repeated_choices() {
        let schema = nested_schema();
        let record = nested_record(&schema);
        let all = SchemaSubset::from_nodes(&schema, &schema.leaves());
        // First N3 instance offers two N2 choices, the second offers one.
        assert_eq!(enumerate_instantiations(&schema, &record, &all).len(), 3);
    }

    #[test]
    fn restricted_subset_yields_fewer_instantiations() {
        let schema = nested_schema();
        let record = nested_record(&schema);
        let n1 = schema.child_by_label(schema.root(), "N1").unwrap();
        let n3 = schema.child_by_label(schema.root(), "N3").unwrap();
        let n4 = schema.child_by_label(n3, "N4").unwrap();
        let sub = SchemaSubset::from_nodes(&schema, &[n1, n4]);
        let instantiations = enumerate_instantiations(&schema, &record, &sub);
        assert_eq!(instantiations.len(), 2);
        let values: Vec<Vec<Value>> = instantiations
            .iter()
            .map(|m| vec![m.value_at(&record, n1).clone(), m.value_at(&record, n4).clone()])
            .collect();
        assert_eq!(
            values,
            vec![
                vec![Value::String("V1".into()), Value::String("V4".into())],
                vec![Value::String("V1".into()), Value::Null],
            ]
        );
    }

    #[test]
    fn display_path_indexes_repeated_siblings() {
        let schema = nested_schema();
        let record = nested_record(&schema);
        let n3 = record.children_labeled(record.root(), "N3");
        let n2 = record.children_labeled(n3[0], "N2");
        assert_eq!(record.display_path(n2[1]), "T.N3[0].N2[1]");
    }
}
