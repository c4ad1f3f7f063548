//! JSON (de)serialization of tree-schemas.
//!
//! A schema document looks like:
//!
//! ```json
//! {
//!   "table": {
//!     "name": "Booking",
//!     "fields": [
//!       {"name": "Voucher", "type": "string"},
//!       {"name": "Service", "repetition": "repeated_required", "fields": [...]}
//!     ]
//!   },
//!   "identities": [{"id_path": "Service.Id"}],
//!   "references": [{"referrer_path": "R", "referent_path": "Service.Id"}]
//! }
//! ```
//!
//! `repetition` defaults to `required`. Constraint paths are dot-separated
//! label lists starting below the root (a leading table-name segment is also
//! accepted). An identity's `range_path` may be omitted when the range group
//! is the identifier's parent.

use serde_json::{json, Map, Value as Json};

use super::{
    ConstraintSet, IdentityConstraint, NodeId, PrimitiveType, ReferentialConstraint, Repetition,
    SchemaNode, SchemaPayload, TreeSchema,
};
use crate::error::SchemaError;

/// Parses a schema document. Node ids are assigned in document order, so a
/// parse/serialize round trip is stable.
pub fn parse_schema(text: &str) -> Result<TreeSchema, SchemaError> {
    let doc: Json = serde_json::from_str(text).map_err(|e| SchemaError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let doc = doc.as_object().ok_or_else(|| top_level("schema document must be an object"))?;
    let table = doc
        .get("table")
        .ok_or_else(|| top_level("missing \"table\""))?
        .as_object()
        .ok_or_else(|| top_level("\"table\" must be an object"))?;

    let mut nodes = Vec::new();
    let root = parse_node(table, None, "", &mut nodes)?;
    let root_node = &nodes[root.index()];
    if root_node.is_leaf() {
        return Err(top_level("the table node must declare \"fields\""));
    }
    if root_node.repetition != Repetition::Required {
        return Err(top_level("the table node must not carry a repetition annotation"));
    }

    let mut schema = TreeSchema { nodes, root, constraints: ConstraintSet::default() };
    schema.constraints = parse_constraints(doc, &schema)?;
    Ok(schema)
}

fn top_level(message: &str) -> SchemaError {
    SchemaError::Node { path: String::new(), message: message.to_string() }
}

fn parse_node(
    obj: &Map<String, Json>,
    parent: Option<NodeId>,
    parent_path: &str,
    nodes: &mut Vec<SchemaNode>,
) -> Result<NodeId, SchemaError> {
    let name = obj
        .get("name")
        .and_then(Json::as_str)
        .ok_or_else(|| SchemaError::Node {
            path: parent_path.to_string(),
            message: "node is missing a \"name\" string".to_string(),
        })?
        .to_string();
    let path = if parent_path.is_empty() { name.clone() } else { format!("{parent_path}.{name}") };
    if name.is_empty() || name.contains('.') || name.chars().any(char::is_whitespace) {
        return Err(SchemaError::Node {
            path,
            message: "node names must be non-empty and free of dots and whitespace".to_string(),
        });
    }

    let repetition = match obj.get("repetition") {
        None => Repetition::Required,
        Some(Json::String(s)) => match s.as_str() {
            "required" => Repetition::Required,
            "optional" | "?" => Repetition::Optional,
            "repeated" | "*" => Repetition::Repeated,
            "repeated_required" | "+" => Repetition::RepeatedRequired,
            other => {
                return Err(SchemaError::UnknownRepetition { name: other.to_string(), path })
            }
        },
        Some(_) => {
            return Err(SchemaError::Node {
                path,
                message: "\"repetition\" must be a string".to_string(),
            })
        }
    };

    let id = NodeId(nodes.len() as u32);
    match (obj.get("type"), obj.get("fields")) {
        (Some(_), Some(_)) => Err(SchemaError::Node {
            path,
            message: "a node declares either \"type\" or \"fields\", not both".to_string(),
        }),
        (Some(Json::String(ty)), None) => {
            let ty = match ty.as_str() {
                "integer" => PrimitiveType::Integer,
                "float" => PrimitiveType::Float,
                "string" => PrimitiveType::String,
                "boolean" => PrimitiveType::Boolean,
                other => {
                    return Err(SchemaError::UnknownPrimitiveType {
                        name: other.to_string(),
                        path,
                    })
                }
            };
            nodes.push(SchemaNode {
                id,
                label: name,
                repetition,
                parent,
                payload: SchemaPayload::Leaf(ty),
            });
            Ok(id)
        }
        (Some(_), None) => Err(SchemaError::Node {
            path,
            message: "\"type\" must be a string".to_string(),
        }),
        (None, Some(Json::Array(fields))) => {
            nodes.push(SchemaNode {
                id,
                label: name,
                repetition,
                parent,
                payload: SchemaPayload::Group(Vec::new()),
            });
            let mut children = Vec::with_capacity(fields.len());
            let mut seen = Vec::new();
            for field in fields {
                let field = field.as_object().ok_or_else(|| SchemaError::Node {
                    path: path.clone(),
                    message: "entries of \"fields\" must be objects".to_string(),
                })?;
                let child = parse_node(field, Some(id), &path, nodes)?;
                let label = nodes[child.index()].label.clone();
                if seen.contains(&label) {
                    return Err(SchemaError::DuplicateSiblingLabel { path, label });
                }
                seen.push(label);
                children.push(child);
            }
            nodes[id.index()].payload = SchemaPayload::Group(children);
            Ok(id)
        }
        (None, Some(_)) => Err(SchemaError::Node {
            path,
            message: "\"fields\" must be an array".to_string(),
        }),
        (None, None) => Err(SchemaError::Node {
            path,
            message: "a node needs \"type\" (leaf) or \"fields\" (group)".to_string(),
        }),
    }
}

fn parse_constraints(doc: &Map<String, Json>, schema: &TreeSchema) -> Result<ConstraintSet, SchemaError> {
    let mut constraints = ConstraintSet::default();
    if let Some(identities) = doc.get("identities") {
        let identities = identities
            .as_array()
            .ok_or_else(|| top_level("\"identities\" must be an array"))?;
        for entry in identities {
            let entry = entry
                .as_object()
                .ok_or_else(|| top_level("identity entries must be objects"))?;
            let id_path = constraint_path(entry, "id_path")?;
            let identifier = walk_path(schema, &id_path)?;
            let range_group = match entry.get("range_path") {
                None => schema.node(identifier).parent.ok_or_else(|| {
                    SchemaError::ConstraintPath { path: id_path.clone() }
                })?,
                Some(_) => walk_path(schema, &constraint_path(entry, "range_path")?)?,
            };
            if constraints.identity_for(identifier).is_some() {
                return Err(SchemaError::DuplicateIdentity { path: id_path });
            }
            constraints.identities.push(IdentityConstraint { identifier, range_group });
        }
    }
    if let Some(references) = doc.get("references") {
        let references = references
            .as_array()
            .ok_or_else(|| top_level("\"references\" must be an array"))?;
        for entry in references {
            let entry = entry
                .as_object()
                .ok_or_else(|| top_level("reference entries must be objects"))?;
            let referrer = walk_path(schema, &constraint_path(entry, "referrer_path")?)?;
            let referent_path = constraint_path(entry, "referent_path")?;
            let referent = walk_path(schema, &referent_path)?;
            if constraints.identity_for(referent).is_none() {
                return Err(SchemaError::ReferentNotIdentifier { path: referent_path });
            }
            constraints.references.push(ReferentialConstraint { referrer, referent });
        }
    }
    Ok(constraints)
}

fn constraint_path(entry: &Map<String, Json>, key: &str) -> Result<String, SchemaError> {
    entry
        .get(key)
        .and_then(Json::as_str)
        .map(str::to_string)
        .ok_or_else(|| top_level(&format!("constraint entries need a {key:?} string")))
}

/// Walks a dot-separated label path from the root. A leading segment equal
/// to the table name is tolerated.
fn walk_path(schema: &TreeSchema, path: &str) -> Result<NodeId, SchemaError> {
    let segments: Vec<&str> = path.split('.').collect();
    let err = || SchemaError::ConstraintPath { path: path.to_string() };
    if segments.iter().any(|s| s.is_empty()) {
        return Err(err());
    }
    let attempt = |segments: &[&str]| -> Option<NodeId> {
        let mut cur = schema.root();
        for seg in segments {
            cur = schema.child_by_label(cur, seg)?;
        }
        Some(cur)
    };
    attempt(&segments)
        .or_else(|| {
            if segments.len() > 1 && segments[0] == schema.table_name() {
                attempt(&segments[1..])
            } else {
                None
            }
        })
        .ok_or_else(err)
}

/// Renders a schema back to its canonical JSON document.
pub fn serialize_schema(schema: &TreeSchema) -> String {
    let mut doc = Map::new();
    doc.insert("table".to_string(), node_to_json(schema, schema.root()));
    let identities: Vec<Json> = schema
        .constraints
        .identities
        .iter()
        .map(|c| {
            json!({
                "id_path": schema.short_path(c.identifier),
                "range_path": schema.short_path(c.range_group),
            })
        })
        .collect();
    let references: Vec<Json> = schema
        .constraints
        .references
        .iter()
        .map(|c| {
            json!({
                "referrer_path": schema.short_path(c.referrer),
                "referent_path": schema.short_path(c.referent),
            })
        })
        .collect();
    if !identities.is_empty() {
        doc.insert("identities".to_string(), Json::Array(identities));
    }
    if !references.is_empty() {
        doc.insert("references".to_string(), Json::Array(references));
    }
    serde_json::to_string_pretty(&Json::Object(doc)).expect("schema json is serializable")
}

fn node_to_json(schema: &TreeSchema, id: NodeId) -> Json {
    let node = schema.node(id);
    let mut obj = Map::new();
    obj.insert("name".to_string(), Json::String(node.label.clone()));
    if node.repetition != Repetition::Required {
        obj.insert(
            "repetition".to_string(),
            Json::String(node.repetition.keyword().to_string()),
        );
    }
    match &node.payload {
        SchemaPayload::Leaf(ty) => {
            obj.insert("type".to_string(), Json::String(ty.name().to_string()));
        }
        SchemaPayload::Group(children) => {
            obj.insert(
                "fields".to_string(),
                Json::Array(children.iter().map(|&c| node_to_json(schema, c)).collect()),
            );
        }
    }
    Json::Object(obj)
}
