//! Flattening tree-records into rows.
//!
//! Each row corresponds to one instantiation: a label-preserving,
//! parent-consistent mapping of the selected schema paths into a record.
//! Dummy nodes participate like any others, so absent subtrees surface as
//! NULLs rather than dropping rows. Three operators are provided:
//!
//! * [`flatten_full`] — one column per schema leaf;
//! * [`flatten_relative`] — a chosen subset of leaves, columns in document
//!   order, typically yielding fewer rows than projecting the full result;
//! * [`flatten_with_constraints`] — additionally follows references, joining
//!   each referrer to the identifier instances it matches in scope.
//!
//! Records are independent, so with the `parallel` feature rows are
//! computed per record on a thread pool; ordering is unaffected.

use std::collections::HashMap;

use serde_json::{Map, Number, Value as Json};

use crate::instance::{enumerate_instantiations, Instantiation, TreeInstance, TreeRecord, Value};
use crate::map_records;
use crate::schema::{NodeId, PathBinding, SchemaSubset, TreeSchema};

/// A leaf reached through a reference: read `leaf` inside the `range_group`
/// instance whose `identifier` equals the referrer's value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RefLeaf {
    pub referrer: NodeId,
    pub identifier: NodeId,
    pub range_group: NodeId,
    pub leaf: NodeId,
}

/// The leaves a flattening selects: plain schema leaves plus
/// reference-reached leaves.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryLeafSet {
    pub plain: Vec<NodeId>,
    pub referenced: Vec<RefLeaf>,
}

impl QueryLeafSet {
    pub fn plain_only(leaves: &[NodeId]) -> QueryLeafSet {
        let mut set = QueryLeafSet::default();
        for &leaf in leaves {
            set.insert(&PathBinding::Leaf(leaf));
        }
        set
    }

    pub fn all_leaves(schema: &TreeSchema) -> QueryLeafSet {
        QueryLeafSet::plain_only(&schema.leaves())
    }

    /// Adds a binding unless already present; returns its column index.
    /// Plain leaves occupy the first columns, referenced leaves follow.
    pub fn insert(&mut self, binding: &PathBinding) -> usize {
        match *binding {
            PathBinding::Leaf(leaf) => {
                if let Some(i) = self.plain.iter().position(|&l| l == leaf) {
                    return i;
                }
                self.plain.push(leaf);
                self.plain.len() - 1
            }
            PathBinding::Reference { referrer, identifier, range_group, leaf } => {
                let entry = RefLeaf { referrer, identifier, range_group, leaf };
                if let Some(i) = self.referenced.iter().position(|&r| r == entry) {
                    return self.plain.len() + i;
                }
                self.referenced.push(entry);
                self.plain.len() + self.referenced.len() - 1
            }
        }
    }

    pub fn column_count(&self) -> usize {
        self.plain.len() + self.referenced.len()
    }

    fn plain_with_referrers(&self) -> Vec<NodeId> {
        let mut nodes = self.plain.clone();
        nodes.extend(self.referenced.iter().map(|r| r.referrer));
        nodes
    }

    pub(crate) fn header(&self, schema: &TreeSchema) -> Vec<String> {
        let mut header: Vec<String> =
            self.plain.iter().map(|&l| schema.short_path(l)).collect();
        header.extend(self.referenced.iter().map(|r| {
            PathBinding::Reference {
                referrer: r.referrer,
                identifier: r.identifier,
                range_group: r.range_group,
                leaf: r.leaf,
            }
            .spelling(schema)
        }));
        header
    }
}

/// A flat relation: named columns and value rows in deterministic order
/// (record order, then instantiation order within each record).
#[derive(Debug, Clone, PartialEq)]
pub struct FlattenedRelation {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl FlattenedRelation {
    /// RFC 4180 CSV with a header row; NULL renders as an empty field.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.header).expect("write to memory");
        for row in &self.rows {
            writer
                .write_record(row.iter().map(csv_field))
                .expect("write to memory");
        }
        String::from_utf8(writer.into_inner().expect("flush to memory")).expect("utf8")
    }

    /// JSON array of objects keyed by column name; NULL renders as `null`.
    pub fn to_json(&self) -> Json {
        Json::Array(
            self.rows
                .iter()
                .map(|row| {
                    let mut obj = Map::new();
                    for (name, value) in self.header.iter().zip(row) {
                        obj.insert(name.clone(), value_to_json(value));
                    }
                    Json::Object(obj)
                })
                .collect(),
        )
    }

    /// Row multiset as a count map.
    pub fn row_counts(&self) -> HashMap<Vec<Value>, usize> {
        let mut counts = HashMap::new();
        for row in &self.rows {
            *counts.entry(row.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Distinct rows, ignoring multiplicity.
    pub fn support(&self) -> std::collections::HashSet<Vec<Value>> {
        self.rows.iter().cloned().collect()
    }

    /// True when both relations hold the same rows with the same
    /// multiplicities, regardless of row order.
    pub fn multiset_eq(&self, other: &FlattenedRelation) -> bool {
        self.header == other.header && self.row_counts() == other.row_counts()
    }

    /// Rows sorted by a stable total order; for golden comparisons.
    pub fn rows_sorted(&self) -> Vec<Vec<Value>> {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != std::cmp::Ordering::Equal)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        rows
    }
}

fn csv_field(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn value_to_json(value: &Value) -> Json {
    match value {
        Value::Null => Json::Null,
        Value::Integer(v) => Json::Number((*v).into()),
        // Non-finite floats have no JSON encoding and degrade to null.
        Value::Float(v) => Number::from_f64(*v).map(Json::Number).unwrap_or(Json::Null),
        Value::String(v) => Json::String(v.clone()),
        Value::Boolean(v) => Json::Bool(*v),
    }
}

/// The prefix closure of a set of leaves: what an instantiation must cover.
pub fn project_schema(schema: &TreeSchema, leaves: &[NodeId]) -> SchemaSubset {
    SchemaSubset::from_nodes(schema, leaves)
}

/// Flattens every leaf of the schema.
pub fn flatten_full(schema: &TreeSchema, instance: &TreeInstance) -> FlattenedRelation {
    flatten_relative(schema, instance, &schema.leaves())
}

/// Flattens a subset of leaves; columns appear in document order.
///
/// # Panics
///
/// Panics when `leaves` is empty: a relation with no columns is
/// meaningless here, so the caller must select at least one leaf.
pub fn flatten_relative(
    schema: &TreeSchema,
    instance: &TreeInstance,
    leaves: &[NodeId],
) -> FlattenedRelation {
    assert!(!leaves.is_empty(), "flatten_relative requires at least one leaf");
    let mut leaves: Vec<NodeId> = leaves.to_vec();
    leaves.sort_unstable();
    leaves.dedup();
    let set = QueryLeafSet::plain_only(&leaves);
    flatten_with_constraints(schema, instance, &set)
}

struct RefGroup {
    referrer: NodeId,
    range_group: NodeId,
    /// Identifiers this referrer must match, deduplicated.
    identifiers: Vec<NodeId>,
    subset: SchemaSubset,
}

/// Flattens plain and reference-reached leaves together. For each group of
/// referenced leaves sharing `(referrer, range group)`, instantiations of
/// the range subtree are joined to the base rows on two conditions: the
/// referrer node is the same one the base row selected, and its value
/// equals the identifier's value (both non-NULL). Rows whose referrer is
/// NULL or dangling produce nothing for that group.
pub fn flatten_with_constraints(
    schema: &TreeSchema,
    instance: &TreeInstance,
    set: &QueryLeafSet,
) -> FlattenedRelation {
    // Group referenced leaves by (referrer, range group): leaves in the
    // same group must come from one shared range instance per row.
    let mut groups: Vec<RefGroup> = Vec::new();
    let mut group_of: Vec<usize> = Vec::with_capacity(set.referenced.len());
    for entry in &set.referenced {
        let key = (entry.referrer, entry.range_group);
        let idx = match groups.iter().position(|g| (g.referrer, g.range_group) == key) {
            Some(i) => i,
            None => {
                groups.push(RefGroup {
                    referrer: entry.referrer,
                    range_group: entry.range_group,
                    identifiers: Vec::new(),
                    subset: SchemaSubset::from_nodes(schema, &[]),
                });
                groups.len() - 1
            }
        };
        if !groups[idx].identifiers.contains(&entry.identifier) {
            groups[idx].identifiers.push(entry.identifier);
        }
        group_of.push(idx);
    }
    for group in &mut groups {
        let mut nodes = vec![group.referrer];
        nodes.extend(&group.identifiers);
        // Any selected leaf under this range group joins the same subtree
        // walk, whichever referrer reaches it.
        nodes.extend(
            set.referenced
                .iter()
                .filter(|e| e.range_group == group.range_group)
                .map(|e| e.leaf),
        );
        group.subset = SchemaSubset::from_nodes(schema, &nodes);
    }

    let base = SchemaSubset::from_nodes(schema, &set.plain_with_referrers());
    let per_record = map_records(&instance.records, |record| {
        rows_for_record(schema, record, set, &base, &groups, &group_of)
    });

    FlattenedRelation {
        header: set.header(schema),
        rows: per_record.into_iter().flatten().collect(),
    }
}

fn rows_for_record(
    schema: &TreeSchema,
    record: &TreeRecord,
    set: &QueryLeafSet,
    base: &SchemaSubset,
    groups: &[RefGroup],
    group_of: &[usize],
) -> Vec<Vec<Value>> {
    let base_insts = enumerate_instantiations(schema, record, base);
    if base_insts.is_empty() {
        return Vec::new();
    }
    // One shared enumeration per group and record, filtered to mappings
    // where the referrer's value lands on its identifiers'.
    let candidates: Vec<Vec<Instantiation>> = groups
        .iter()
        .map(|group| {
            enumerate_instantiations(schema, record, &group.subset)
                .into_iter()
                .filter(|m| {
                    let rv = m.value_at(record, group.referrer);
                    !rv.is_null()
                        && group
                            .identifiers
                            .iter()
                            .all(|&i| m.value_at(record, i) == rv)
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    for m in &base_insts {
        let selected: Vec<Vec<&Instantiation>> = groups
            .iter()
            .zip(&candidates)
            .map(|(group, cands)| {
                cands
                    .iter()
                    .filter(|c| c.image_of(group.referrer) == m.image_of(group.referrer))
                    .collect()
            })
            .collect();
        if selected.iter().any(|s| s.is_empty()) {
            continue;
        }
        emit_rows(record, set, group_of, m, &selected, &mut rows);
    }
    rows
}

/// Cartesian product over the per-group matches, in group order.
fn emit_rows(
    record: &TreeRecord,
    set: &QueryLeafSet,
    group_of: &[usize],
    base: &Instantiation,
    selected: &[Vec<&Instantiation>],
    rows: &mut Vec<Vec<Value>>,
) {
    let mut choice = vec![0usize; selected.len()];
    loop {
        let mut row = Vec::with_capacity(set.column_count());
        for &leaf in &set.plain {
            row.push(base.value_at(record, leaf).clone());
        }
        for (j, entry) in set.referenced.iter().enumerate() {
            let chosen = selected[group_of[j]][choice[group_of[j]]];
            row.push(chosen.value_at(record, entry.leaf).clone());
        }
        rows.push(row);

        // Advance the odometer; later groups vary fastest.
        let mut level = selected.len();
        loop {
            if level == 0 {
                return;
            }
            level -= 1;
            choice[level] += 1;
            if choice[level] < selected[level].len() {
                break;
            }
            choice[level] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::parse_instance;
    use crate::schema::{parse_schema, resolve_path};

    fn fig_schema() -> TreeSchema {
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

    fn fig_instance(schema: &TreeSchema) -> TreeInstance {
        parse_instance(
            schema,
            r#"[{"N1": "V1", "N3": [
                {"N2": ["V2", "V3"], "N4": "V4"},
                {"N2": ["V5"]}
            ]}]"#,
        )
        .unwrap()
    }

    fn s(v: &str) -> Value {
        Value::String(v.into())
    }

    #[test]
    fn full_flattening_multiplies_repeated_branches() {
        let schema = fig_schema();
        let instance = fig_instance(&schema);
        let rel = flatten_full(&schema, &instance);
        assert_eq!(rel.header, vec!["N1", "N3.N2", "N3.N4"]);
        assert_eq!(
            rel.rows,
            vec![
                vec![s("V1"), s("V2"), s("V4")],
                vec![s("V1"), s("V3"), s("V4")],
                vec![s("V1"), s("V5"), Value::Null],
            ]
        );
    }

    #[test]
    fn relative_flattening_skips_unselected_repetition() {
        let schema = fig_schema();
        let instance = fig_instance(&schema);
        let n1 = match resolve_path(&schema, "N1").unwrap() {
            PathBinding::Leaf(l) => l,
            _ => unreachable!(),
        };
        let n4 = match resolve_path(&schema, "N4").unwrap() {
            PathBinding::Leaf(l) => l,
            _ => unreachable!(),
        };
        let rel = flatten_relative(&schema, &instance, &[n4, n1]);
        assert_eq!(rel.header, vec!["N1", "N3.N4"]);
        assert_eq!(rel.rows, vec![vec![s("V1"), s("V4")], vec![s("V1"), Value::Null]]);
    }

    #[test]
    fn relative_support_matches_projected_full_support() {
        let schema = fig_schema();
        let instance = fig_instance(&schema);
        let full = flatten_full(&schema, &instance);
        // Project the full result onto the N1 and N3.N4 columns.
        let projected: std::collections::HashSet<Vec<Value>> = full
            .rows
            .iter()
            .map(|r| vec![r[0].clone(), r[2].clone()])
            .collect();
        let leaves = [schema.leaves()[0], schema.leaves()[2]];
        let relative = flatten_relative(&schema, &instance, &leaves);
        assert_eq!(relative.support(), projected);
        assert!(relative.rows.len() <= full.rows.len());
    }

    fn ref_schema() -> TreeSchema {
        parse_schema(
            r#"{"table": {"name": "T", "fields": [
                {"name": "A", "fields": [
                    {"name": "Ref", "repetition": "optional", "type": "integer"},
                    {"name": "Tag", "type": "string"}
                ]},
                {"name": "G", "repetition": "repeated", "fields": [
                    {"name": "Id", "type": "integer"},
                    {"name": "City", "type": "string"},
                    {"name": "Zip", "type": "string"}
                ]}
            ]},
            "identities": [{"id_path": "G.Id"}],
            "references": [{"referrer_path": "A.Ref", "referent_path": "G.Id"}]}"#,
        )
        .unwrap()
    }

    fn ref_binding(schema: &TreeSchema, path: &str) -> PathBinding {
        resolve_path(schema, path).unwrap()
    }

    #[test]
    fn reference_join_reads_the_matching_range_instance() {
        let schema = ref_schema();
        let instance = parse_instance(
            &schema,
            r#"[{"A": {"Ref": 2, "Tag": "t"},
                 "G": [{"Id": 1, "City": "a", "Zip": "z1"}, {"Id": 2, "City": "b", "Zip": "z2"}]}]"#,
        )
        .unwrap();
        let mut set = QueryLeafSet::default();
        set.insert(&ref_binding(&schema, "Tag"));
        set.insert(&ref_binding(&schema, "Ref.City"));
        let rel = flatten_with_constraints(&schema, &instance, &set);
        assert_eq!(rel.header, vec!["A.Tag", "A.Ref.City"]);
        assert_eq!(rel.rows, vec![vec![s("t"), s("b")]]);
    }

    #[test]
    fn null_referrer_produces_no_joined_row() {
        let schema = ref_schema();
        let instance = parse_instance(
            &schema,
            r#"[{"A": {"Tag": "t"}, "G": [{"Id": 1, "City": "a", "Zip": "z"}]}]"#,
        )
        .unwrap();
        let mut set = QueryLeafSet::default();
        set.insert(&ref_binding(&schema, "Ref.City"));
        let rel = flatten_with_constraints(&schema, &instance, &set);
        assert!(rel.rows.is_empty());
    }

    #[test]
    fn dangling_referrer_produces_no_joined_row() {
        let schema = ref_schema();
        let instance = parse_instance(
            &schema,
            r#"[{"A": {"Ref": 9, "Tag": "t"}, "G": [{"Id": 1, "City": "a", "Zip": "z"}]}]"#,
        )
        .unwrap();
        let mut set = QueryLeafSet::default();
        set.insert(&ref_binding(&schema, "Ref.City"));
        let rel = flatten_with_constraints(&schema, &instance, &set);
        assert!(rel.rows.is_empty());
    }

    #[test]
    fn leaves_behind_one_referrer_share_the_range_instance() {
        let schema = ref_schema();
        let instance = parse_instance(
            &schema,
            r#"[{"A": {"Ref": 1, "Tag": "t"},
                 "G": [{"Id": 1, "City": "a", "Zip": "z1"}, {"Id": 2, "City": "b", "Zip": "z2"}]}]"#,
        )
        .unwrap();
        let mut set = QueryLeafSet::default();
        set.insert(&ref_binding(&schema, "Ref.City"));
        set.insert(&ref_binding(&schema, "Ref.Zip"));
        let rel = flatten_with_constraints(&schema, &instance, &set);
        assert_eq!(rel.rows, vec![vec![s("a"), s("z1")]]);
    }

    #[test]
    fn duplicate_identifiers_multiply_joined_rows() {
        // With identity checking skipped, a referrer matching two range
        // instances contributes one row per match.
        let schema = ref_schema();
        let instance = parse_instance(
            &schema,
            r#"[{"A": {"Ref": 1, "Tag": "t"},
                 "G": [{"Id": 1, "City": "a", "Zip": "z1"}, {"Id": 1, "City": "b", "Zip": "z2"}]}]"#,
        )
        .unwrap();
        let mut set = QueryLeafSet::default();
        set.insert(&ref_binding(&schema, "Ref.City"));
        let rel = flatten_with_constraints(&schema, &instance, &set);
        assert_eq!(rel.rows, vec![vec![s("a")], vec![s("b")]]);
    }

    #[test]
    fn csv_renders_null_as_empty_and_quotes_when_needed() {
        let rel = FlattenedRelation {
            header: vec!["x".into(), "y".into()],
            rows: vec![
                vec![Value::Null, Value::String("a,b".into())],
                vec![Value::Integer(3), Value::String("plain".into())],
            ],
        };
        assert_eq!(rel.to_csv(), "x,y\n,\"a,b\"\n3,plain\n");
    }

    #[test]
    fn json_output_keys_rows_by_column_name() {
        let rel = FlattenedRelation {
            header: vec!["x".into(), "y".into()],
            rows: vec![vec![Value::Integer(1), Value::Null]],
        };
        assert_eq!(rel.to_json().to_string(), r#"[{"x":1,"y":null}]"#);
    }

    #[test]
    fn multiset_equality_ignores_row_order() {
        let a = FlattenedRelation {
            header: vec!["x".into()],
            rows: vec![vec![Value::Integer(1)], vec![Value::Integer(2)]],
        };
        let b = FlattenedRelation {
            header: vec!["x".into()],
            rows: vec![vec![Value::Integer(2)], vec![Value::Integer(1)]],
        };
        let c = FlattenedRelation {
            header: vec!["x".into()],
            rows: vec![vec![Value::Integer(1)], vec![Value::Integer(1)]],
        };
        assert!(a.multiset_eq(&b));
        assert!(!a.multiset_eq(&c));
    }
}
