//! Seeded random schema generation for property tests.
//!
//! Schemas are built as plain JSON and run through the ordinary parser, so
//! every invariant the parser enforces holds for generated schemas too.
//! Labels are globally unique, which keeps suffix path resolution
//! unambiguous, and identity/reference pairs are placed so that the
//! declared constraints are always satisfiable: the identifier sits
//! directly under its range group, and the referrer outside of it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use serde_json::{json, Value as Json};

use crate::schema::{parse_schema, TreeSchema};

/// Shape limits for generated schemas.
#[derive(Debug, Clone, Copy)]
pub struct SchemaConfig {
    /// Maximum nesting depth below the root.
    pub max_depth: usize,
    /// Maximum children per group (at least one is always generated).
    pub max_children: usize,
    /// Number of identity/reference pairs to place.
    pub references: usize,
    /// When true, referrers are placed so every reference is within range:
    /// directly under the range group's parent subtree, outside the range
    /// group itself.
    pub within_range_only: bool,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        SchemaConfig { max_depth: 3, max_children: 3, references: 0, within_range_only: true }
    }
}

struct Proto {
    label: String,
    repetition: &'static str,
    children: Vec<Proto>,
    /// Leaf type name; `None` for groups.
    leaf: Option<&'static str>,
}

/// Generates a deterministic random schema.
pub fn random_schema(seed: u64, config: &SchemaConfig) -> TreeSchema {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counter = 0usize;
    let mut root = Proto {
        label: "T".to_string(),
        repetition: "required",
        children: Vec::new(),
        leaf: None,
    };
    let n = rng.gen_range(1..=config.max_children);
    for _ in 0..n {
        let child = grow(&mut rng, config, &mut counter, config.max_depth);
        root.children.push(child);
    }

    let mut identities = Vec::new();
    let mut references = Vec::new();
    if config.references > 0 {
        ensure_group(&mut root, &mut counter);
        place_references(&mut rng, config, &mut root, &mut counter, &mut identities, &mut references);
    }

    let text = json!({
        "table": render(&root, true),
        "identities": identities,
        "references": references,
    })
    .to_string();
    parse_schema(&text).expect("generated schema parses")
}

fn grow(rng: &mut ChaCha8Rng, config: &SchemaConfig, counter: &mut usize, depth: usize) -> Proto {
    let label = format!("n{}", *counter);
    *counter += 1;
    let repetition = *["required", "required", "optional", "repeated", "repeated_required"]
        .choose(rng)
        .expect("non-empty");
    let make_group = depth > 1 && rng.gen_bool(0.4);
    if make_group {
        let n = rng.gen_range(1..=config.max_children);
        let children = (0..n).map(|_| grow(rng, config, counter, depth - 1)).collect();
        Proto { label, repetition, children, leaf: None }
    } else {
        let leaf = *["integer", "float", "string", "boolean"].choose(rng).expect("non-empty");
        Proto { label, repetition, children: Vec::new(), leaf: Some(leaf) }
    }
}

/// Guarantees at least one non-root group to host a range.
fn ensure_group(root: &mut Proto, counter: &mut usize) {
    fn has_group(node: &Proto) -> bool {
        node.children.iter().any(|c| c.leaf.is_none() || has_group(c))
    }
    if !has_group(root) {
        let label = format!("n{}", *counter);
        *counter += 1;
        let leaf_label = format!("n{}", *counter);
        *counter += 1;
        root.children.push(Proto {
            label,
            repetition: "repeated",
            children: vec![Proto {
                label: leaf_label,
                repetition: "required",
                children: Vec::new(),
                leaf: Some("string"),
            }],
            leaf: None,
        });
    }
}

fn place_references(
    rng: &mut ChaCha8Rng,
    config: &SchemaConfig,
    root: &mut Proto,
    counter: &mut usize,
    identities: &mut Vec<Json>,
    references: &mut Vec<Json>,
) {
    // Paths of all non-root groups, root-exclusive, as label vectors.
    let mut group_paths = group_paths(root, &mut Vec::new());
    group_paths.shuffle(rng);
    for range_path in group_paths.into_iter().take(config.references) {
        let id_label = format!("id{}", *counter);
        *counter += 1;
        node_at(root, &range_path).children.push(Proto {
            label: id_label.clone(),
            repetition: "required",
            children: Vec::new(),
            leaf: Some("integer"),
        });
        let id_path = join(&range_path, &id_label);

        // Hosts that make the reference within range sit in the range
        // group's parent subtree but outside the range group itself; the
        // parent itself always qualifies.
        let parent_path = &range_path[..range_path.len() - 1];
        let hosts: Vec<Vec<String>> = if config.within_range_only {
            let mut hosts = subtree_group_paths(root, parent_path);
            hosts.retain(|p| !p.starts_with(&range_path));
            hosts
        } else {
            let mut hosts = subtree_group_paths(root, &[]);
            hosts.retain(|p| !p.starts_with(&range_path));
            hosts
        };
        let host = hosts.choose(rng).cloned().unwrap_or_else(|| parent_path.to_vec());

        let ref_label = format!("r{}", *counter);
        *counter += 1;
        node_at(root, &host).children.push(Proto {
            label: ref_label.clone(),
            repetition: ["required", "optional", "repeated"].choose(rng).expect("non-empty"),
            children: Vec::new(),
            leaf: Some("integer"),
        });

        identities.push(json!({ "id_path": id_path, "range_path": range_path.join(".") }));
        references.push(json!({
            "referrer_path": join(&host, &ref_label),
            "referent_path": id_path,
        }));
    }
}

/// Paths (label vectors, root excluded) of every non-root group.
fn group_paths(node: &Proto, prefix: &mut Vec<String>) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for child in &node.children {
        if child.leaf.is_none() {
            prefix.push(child.label.clone());
            out.push(prefix.clone());
            out.extend(group_paths(child, prefix));
            prefix.pop();
        }
    }
    out
}

/// Group paths within the subtree at `path`, including `path` itself when
/// it names a group (the empty path names the root).
fn subtree_group_paths(root: &Proto, path: &[String]) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    if !path.is_empty() {
        out.push(path.to_vec());
    } else {
        out.push(Vec::new());
    }
    let node = node_at_ref(root, path);
    let mut prefix = path.to_vec();
    out.extend(group_paths(node, &mut prefix));
    out
}

fn node_at<'a>(root: &'a mut Proto, path: &[String]) -> &'a mut Proto {
    let mut cur = root;
    for label in path {
        cur = cur
            .children
            .iter_mut()
            .find(|c| &c.label == label)
            .expect("path stays valid");
    }
    cur
}

fn node_at_ref<'a>(root: &'a Proto, path: &[String]) -> &'a Proto {
    let mut cur = root;
    for label in path {
        cur = cur.children.iter().find(|c| &c.label == label).expect("path stays valid");
    }
    cur
}

fn join(path: &[String], last: &str) -> String {
    if path.is_empty() {
        last.to_string()
    } else {
        format!("{}.{}", path.join("."), last)
    }
}

fn render(node: &Proto, is_root: bool) -> Json {
    let mut obj = serde_json::Map::new();
    obj.insert("name".to_string(), Json::String(node.label.clone()));
    if !is_root && node.repetition != "required" {
        obj.insert("repetition".to_string(), Json::String(node.repetition.to_string()));
    }
    match node.leaf {
        Some(ty) => {
            obj.insert("type".to_string(), Json::String(ty.to_string()));
        }
        None => {
            obj.insert(
                "fields".to_string(),
                Json::Array(node.children.iter().map(|c| render(c, false)).collect()),
            );
        }
    }
    Json::Object(obj)
}
