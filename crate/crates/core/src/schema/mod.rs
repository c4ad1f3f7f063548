//! Tree-schemas: annotated trees of groups and typed leaves, plus the
//! identity and referential constraints declared over them.

mod parse;
mod path;

pub use parse::{parse_schema, serialize_schema};
pub use path::{resolve_path, PathBinding};

use std::fmt;

/// Index of a node inside a schema or record arena, assigned in document
/// order (pre-order walk).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// How many instances of a node each parent instance may hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Repetition {
    /// Exactly one instance.
    Required,
    /// Zero or one instance (`?`).
    Optional,
    /// Zero or more instances (`*`).
    Repeated,
    /// One or more instances (`+`).
    RepeatedRequired,
}

impl Repetition {
    /// The annotation symbol as drawn next to a node label.
    pub fn annotation(self) -> &'static str {
        match self {
            Repetition::Required => "",
            Repetition::Optional => "?",
            Repetition::Repeated => "*",
            Repetition::RepeatedRequired => "+",
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Repetition::Required => "required",
            Repetition::Optional => "optional",
            Repetition::Repeated => "repeated",
            Repetition::RepeatedRequired => "repeated_required",
        }
    }

    /// True for `*` and `+`: more than one instance is allowed.
    pub fn is_repeated(self) -> bool {
        matches!(self, Repetition::Repeated | Repetition::RepeatedRequired)
    }

    /// True when at least one real (non-dummy) instance must exist.
    pub fn requires_presence(self) -> bool {
        matches!(self, Repetition::Required | Repetition::RepeatedRequired)
    }
}

/// Primitive type carried by a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrimitiveType {
    Integer,
    Float,
    String,
    Boolean,
}

impl PrimitiveType {
    pub fn name(self) -> &'static str {
        match self {
            PrimitiveType::Integer => "integer",
            PrimitiveType::Float => "float",
            PrimitiveType::String => "string",
            PrimitiveType::Boolean => "boolean",
        }
    }
}

impl fmt::Display for PrimitiveType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Group node with ordered children, or a typed leaf.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemaPayload {
    Group(Vec<NodeId>),
    Leaf(PrimitiveType),
}

/// One node of a tree-schema.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaNode {
    pub id: NodeId,
    pub label: String,
    pub repetition: Repetition,
    pub parent: Option<NodeId>,
    pub payload: SchemaPayload,
}

impl SchemaNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self.payload, SchemaPayload::Leaf(_))
    }

    pub fn leaf_type(&self) -> Option<PrimitiveType> {
        match self.payload {
            SchemaPayload::Leaf(t) => Some(t),
            SchemaPayload::Group(_) => None,
        }
    }
}

/// `I => N`: within each instance of `N`'s parent, no two instances of the
/// identifier `I` may be equal. `N` is called the range group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IdentityConstraint {
    pub identifier: NodeId,
    pub range_group: NodeId,
}

/// `R -> I`: every non-NULL instance of the referrer leaf `R` must equal
/// some instance of the identifier leaf `I` within their common scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ReferentialConstraint {
    pub referrer: NodeId,
    pub referent: NodeId,
}

/// All constraints declared by a schema, in declaration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSet {
    pub identities: Vec<IdentityConstraint>,
    pub references: Vec<ReferentialConstraint>,
}

impl ConstraintSet {
    /// The identity constraint whose identifier is `node`, if declared.
    pub fn identity_for(&self, node: NodeId) -> Option<&IdentityConstraint> {
        self.identities.iter().find(|c| c.identifier == node)
    }

    /// All references whose referrer is `node`.
    pub fn references_from(&self, node: NodeId) -> Vec<&ReferentialConstraint> {
        self.references.iter().filter(|c| c.referrer == node).collect()
    }
}

/// A parsed tree-schema: the root label doubles as the table name.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSchema {
    pub(crate) nodes: Vec<SchemaNode>,
    pub(crate) root: NodeId,
    pub constraints: ConstraintSet,
}

impl TreeSchema {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn table_name(&self) -> &str {
        &self.nodes[self.root.index()].label
    }

    pub fn node(&self, id: NodeId) -> &SchemaNode {
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
            SchemaPayload::Group(children) => children,
            SchemaPayload::Leaf(_) => &[],
        }
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id.index()].is_leaf()
    }

    pub fn leaf_type(&self, id: NodeId) -> Option<PrimitiveType> {
        self.nodes[id.index()].leaf_type()
    }

    /// All leaf ids in document order.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.nodes.iter().filter(|n| n.is_leaf()).map(|n| n.id).collect()
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

    /// Labels from the root down to `id`, inclusive.
    pub fn reachability_path(&self, id: NodeId) -> Vec<&str> {
        self.path_to(id).into_iter().map(|n| self.label(n)).collect()
    }

    /// Dotted label path including the root label.
    pub fn path_string(&self, id: NodeId) -> String {
        self.reachability_path(id).join(".")
    }

    /// Dotted label path without the root label; used for column names and
    /// diagnostics, where the table name would be noise.
    pub fn short_path(&self, id: NodeId) -> String {
        let labels = self.reachability_path(id);
        if labels.len() == 1 {
            labels[0].to_string()
        } else {
            labels[1..].join(".")
        }
    }

    /// True when `a` is an ancestor of `b` or equal to it.
    pub fn is_ancestor_or_self(&self, a: NodeId, b: NodeId) -> bool {
        let mut cur = Some(b);
        while let Some(n) = cur {
            if n == a {
                return true;
            }
            cur = self.nodes[n.index()].parent;
        }
        false
    }

    fn depth(&self, id: NodeId) -> usize {
        let mut d = 0;
        let mut cur = id;
        while let Some(p) = self.nodes[cur.index()].parent {
            d += 1;
            cur = p;
        }
        d
    }

    /// Lowest common ancestor of two nodes.
    pub fn lca(&self, a: NodeId, b: NodeId) -> NodeId {
        let (mut a, mut b) = (a, b);
        let (mut da, mut db) = (self.depth(a), self.depth(b));
        while da > db {
            a = self.nodes[a.index()].parent.expect("depth accounted");
            da -= 1;
        }
        while db > da {
            b = self.nodes[b.index()].parent.expect("depth accounted");
            db -= 1;
        }
        while a != b {
            a = self.nodes[a.index()].parent.expect("roots meet");
            b = self.nodes[b.index()].parent.expect("roots meet");
        }
        a
    }

    /// Child of `id` labeled `label`, if any.
    pub fn child_by_label(&self, id: NodeId, label: &str) -> Option<NodeId> {
        self.children(id).iter().copied().find(|&c| self.label(c) == label)
    }

    /// The scope node of an identity constraint: the range group's parent,
    /// or the range group itself when it is the root.
    pub fn identity_scope(&self, c: &IdentityConstraint) -> NodeId {
        self.nodes[c.range_group.index()].parent.unwrap_or(c.range_group)
    }
}

/// A prefix-closed subset of schema nodes: the union of reachability paths
/// of a set of leaves. Annotations are untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaSubset {
    contains: Vec<bool>,
}

impl SchemaSubset {
    /// The subset covering the reachability paths of the given nodes
    /// (plus the root, which is always a member).
    pub fn from_nodes(schema: &TreeSchema, nodes: &[NodeId]) -> SchemaSubset {
        let mut contains = vec![false; schema.node_count()];
        contains[schema.root().index()] = true;
        for &n in nodes {
            for anc in schema.path_to(n) {
                contains[anc.index()] = true;
            }
        }
        SchemaSubset { contains }
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.contains[id.index()]
    }

    /// Members in document order.
    pub fn members(&self) -> Vec<NodeId> {
        self.contains
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| NodeId(i as u32))
            .collect()
    }

    /// Children of `id` that are members, in document order.
    pub fn children_in<'a>(
        &'a self,
        schema: &'a TreeSchema,
        id: NodeId,
    ) -> impl Iterator<Item = NodeId> + 'a {
        schema.children(id).iter().copied().filter(|c| self.contains(*c))
    }
}

/// Whether a reference can always be resolved inside a single scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefClass {
    /// Every referrer instance has at most one identifier scope to search;
    /// under a satisfied identity this pins exactly one match.
    WithinRange,
    /// A repeated group strictly between the common ancestor and the range
    /// group lets one referrer value match identifiers in several scopes.
    OutOfRange,
}

/// Classifies `reference` by inspecting the ancestor chain of its range
/// group: the reference is out of range iff some node strictly between the
/// lowest common ancestor of referrer and range group (exclusive) and the
/// range group (exclusive) is repeated.
pub fn classify_reference(schema: &TreeSchema, reference: &ReferentialConstraint) -> RefClass {
    let identity = schema
        .constraints
        .identity_for(reference.referent)
        .expect("reference targets a declared identifier");
    let range = identity.range_group;
    let lca = schema.lca(reference.referrer, range);
    let mut cur = schema.node(range).parent;
    while let Some(n) = cur {
        if n == lca {
            break;
        }
        if schema.node(n).repetition.is_repeated() {
            return RefClass::OutOfRange;
        }
        cur = schema.node(n).parent;
    }
    RefClass::WithinRange
}

/// Problems reported by [`validate_schema`].
#[derive(Debug, Clone, PartialEq)]
pub enum SchemaDiagnostic {
    /// The identifier or one of its descendants is not `required`.
    IdentifierNotRequired { identity: IdentityConstraint, node: String },
    /// The range group is not an ancestor of the identifier.
    RangeNotAncestor { identity: IdentityConstraint },
    /// The range group is a leaf, or the identifier is the range group itself.
    RangeNotGroup { identity: IdentityConstraint },
    /// The referrer is a descendant of the referent's range group.
    ReferrerInsideRange { reference: ReferentialConstraint },
    /// The referent of a simple reference must be a leaf.
    ReferentNotLeaf { reference: ReferentialConstraint },
    /// The referrer must be a leaf.
    ReferrerNotLeaf { reference: ReferentialConstraint },
    /// Referrer and referent leaves carry different primitive types.
    ReferenceTypeMismatch {
        reference: ReferentialConstraint,
        referrer_type: PrimitiveType,
        referent_type: PrimitiveType,
    },
}

impl SchemaDiagnostic {
    pub fn describe(&self, schema: &TreeSchema) -> String {
        match self {
            SchemaDiagnostic::IdentifierNotRequired { identity, node } => format!(
                "identity {} => {}: node {} must be required",
                schema.short_path(identity.identifier),
                schema.short_path(identity.range_group),
                node
            ),
            SchemaDiagnostic::RangeNotAncestor { identity } => format!(
                "identity {} => {}: range group is not an ancestor of the identifier",
                schema.short_path(identity.identifier),
                schema.short_path(identity.range_group)
            ),
            SchemaDiagnostic::RangeNotGroup { identity } => format!(
                "identity {} => {}: range group must be an interior node above the identifier",
                schema.short_path(identity.identifier),
                schema.short_path(identity.range_group)
            ),
            SchemaDiagnostic::ReferrerInsideRange { reference } => format!(
                "reference {} -> {}: referrer lies inside the referent's range group",
                schema.short_path(reference.referrer),
                schema.short_path(reference.referent)
            ),
            SchemaDiagnostic::ReferentNotLeaf { reference } => format!(
                "reference {} -> {}: referent must be a leaf",
                schema.short_path(reference.referrer),
                schema.short_path(reference.referent)
            ),
            SchemaDiagnostic::ReferrerNotLeaf { reference } => format!(
                "reference {} -> {}: referrer must be a leaf",
                schema.short_path(reference.referrer),
                schema.short_path(reference.referent)
            ),
            SchemaDiagnostic::ReferenceTypeMismatch {
                reference,
                referrer_type,
                referent_type,
            } => format!(
                "reference {} -> {}: referrer type {} does not match referent type {}",
                schema.short_path(reference.referrer),
                schema.short_path(reference.referent),
                referrer_type,
                referent_type
            ),
        }
    }
}

/// Checks the declared constraints for well-formedness. An empty result
/// means every identity and reference is usable.
pub fn validate_schema(schema: &TreeSchema) -> Vec<SchemaDiagnostic> {
    let mut out = Vec::new();
    for identity in &schema.constraints.identities {
        let range = identity.range_group;
        if schema.is_leaf(range) || identity.identifier == range {
            out.push(SchemaDiagnostic::RangeNotGroup { identity: *identity });
            continue;
        }
        if !schema.is_ancestor_or_self(range, identity.identifier) {
            out.push(SchemaDiagnostic::RangeNotAncestor { identity: *identity });
            continue;
        }
        let mut stack = vec![identity.identifier];
        while let Some(n) = stack.pop() {
            if schema.node(n).repetition != Repetition::Required {
                out.push(SchemaDiagnostic::IdentifierNotRequired {
                    identity: *identity,
                    node: schema.short_path(n),
                });
            }
            stack.extend(schema.children(n).iter().copied());
        }
    }
    for reference in &schema.constraints.references {
        if !schema.is_leaf(reference.referrer) {
            out.push(SchemaDiagnostic::ReferrerNotLeaf { reference: *reference });
            continue;
        }
        if !schema.is_leaf(reference.referent) {
            out.push(SchemaDiagnostic::ReferentNotLeaf { reference: *reference });
            continue;
        }
        let (rt, it) = (
            schema.node(reference.referrer).leaf_type().expect("leaf"),
            schema.node(reference.referent).leaf_type().expect("leaf"),
        );
        if rt != it {
            out.push(SchemaDiagnostic::ReferenceTypeMismatch {
                reference: *reference,
                referrer_type: rt,
                referent_type: it,
            });
        }
        if let Some(identity) = schema.constraints.identity_for(reference.referent) {
            if schema.is_ancestor_or_self(identity.range_group, reference.referrer) {
                out.push(SchemaDiagnostic::ReferrerInsideRange { reference: *reference });
            }
        }
    }
    out
}

/// Enumerates the elementary cycles of the reference graph.
///
/// Vertices are the subtrees rooted at range groups; each reference adds an
/// edge from the innermost range group containing its referrer to the range
/// group of its referent. References outside every range group cannot lie on
/// a cycle and add no edge. Each returned cycle lists its references in
/// traversal order.
pub fn detect_reference_cycles(schema: &TreeSchema) -> Vec<Vec<ReferentialConstraint>> {
    let mut vertices: Vec<NodeId> = schema
        .constraints
        .identities
        .iter()
        .map(|c| c.range_group)
        .collect();
    vertices.sort();
    vertices.dedup();

    // Innermost range group strictly containing the referrer.
    let source_of = |referrer: NodeId| -> Option<NodeId> {
        vertices
            .iter()
            .copied()
            .filter(|&g| g != referrer && schema.is_ancestor_or_self(g, referrer))
            .max_by_key(|&g| schema.path_to(g).len())
    };

    let mut edges: Vec<(usize, usize, ReferentialConstraint)> = Vec::new();
    for reference in &schema.constraints.references {
        let Some(identity) = schema.constraints.identity_for(reference.referent) else {
            continue;
        };
        let Some(src) = source_of(reference.referrer) else {
            continue;
        };
        let from = vertices.iter().position(|&v| v == src).expect("vertex");
        let to = vertices
            .iter()
            .position(|&v| v == identity.range_group)
            .expect("vertex");
        edges.push((from, to, *reference));
    }

    // Every elementary cycle is reported once, rooted at its smallest vertex.
    let mut cycles = Vec::new();
    let n = vertices.len();
    for start in 0..n {
        let mut on_stack = vec![false; n];
        let mut path: Vec<ReferentialConstraint> = Vec::new();
        dfs_cycles(start, start, &edges, &mut on_stack, &mut path, &mut cycles);
    }
    cycles
}

fn dfs_cycles(
    start: usize,
    current: usize,
    edges: &[(usize, usize, ReferentialConstraint)],
    on_stack: &mut Vec<bool>,
    path: &mut Vec<ReferentialConstraint>,
    cycles: &mut Vec<Vec<ReferentialConstraint>>,
) {
    on_stack[current] = true;
    for &(from, to, constraint) in edges {
        if from != current {
            continue;
        }
        if to == start {
            let mut cycle = path.clone();
            cycle.push(constraint);
            cycles.push(cycle);
        } else if to > start && !on_stack[to] {
            path.push(constraint);
            dfs_cycles(start, to, edges, on_stack, path, cycles);
            path.pop();
        }
    }
    on_stack[current] = false;
}
