//! JSON encoding of tree-records.
//!
//! A record is a JSON object mirroring the schema: groups are objects,
//! repeated nodes are arrays, leaves are scalars. Absent optional or
//! repeated subtrees (missing key, `null`, or an empty array) come back as
//! all-NULL dummy subtrees so that every schema path is populated. Count
//! violations — a missing required field, several values for an optional
//! one — are represented as-is and reported by `validate_record`, not here.

use serde_json::{Map, Number, Value as Json};

use super::{TreeInstance, TreeRecord, Value};
use crate::error::DataError;
use crate::schema::{NodeId, PrimitiveType, Repetition, TreeSchema};

/// Parses a JSON array of records against the schema.
pub fn parse_instance(schema: &TreeSchema, text: &str) -> Result<TreeInstance, DataError> {
    let json: Json = serde_json::from_str(text).map_err(|e| DataError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let items = json.as_array().ok_or_else(|| DataError::Shape {
        path: schema.table_name().to_string(),
        message: "expected a JSON array of records".to_string(),
    })?;
    let mut records = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        records.push(record_from_json(schema, item).map_err(|e| match e {
            DataError::Shape { path, message } => DataError::Record {
                record: i,
                message: format!("{path}: {message}"),
            },
            other => other,
        })?);
    }
    Ok(TreeInstance { records })
}

/// Parses a single JSON object as one record.
pub fn parse_record(schema: &TreeSchema, text: &str) -> Result<TreeRecord, DataError> {
    let json: Json = serde_json::from_str(text).map_err(|e| DataError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    record_from_json(schema, &json)
}

fn record_from_json(schema: &TreeSchema, json: &Json) -> Result<TreeRecord, DataError> {
    let obj = json.as_object().ok_or_else(|| DataError::Shape {
        path: schema.table_name().to_string(),
        message: "record must be a JSON object".to_string(),
    })?;
    let mut record = TreeRecord::new(schema.table_name());
    let root = record.root();
    fill_group(schema, schema.root(), obj, &mut record, root)?;
    Ok(record)
}

fn fill_group(
    schema: &TreeSchema,
    group: NodeId,
    obj: &Map<String, Json>,
    record: &mut TreeRecord,
    image: NodeId,
) -> Result<(), DataError> {
    for key in obj.keys() {
        if schema.child_by_label(group, key).is_none() {
            return Err(DataError::Shape {
                path: schema.path_string(group),
                message: format!("unknown field `{key}`"),
            });
        }
    }
    for &child in schema.children(group) {
        let label = schema.label(child);
        let rep = schema.node(child).repetition;
        match obj.get(label) {
            None | Some(Json::Null) => absent(schema, child, rep, record, image),
            Some(Json::Array(items)) => {
                if items.is_empty() {
                    absent(schema, child, rep, record, image);
                } else {
                    for item in items {
                        if item.is_null() {
                            return Err(DataError::Shape {
                                path: schema.path_string(child),
                                message: "array elements must not be null".to_string(),
                            });
                        }
                        one_instance(schema, child, item, record, image)?;
                    }
                }
            }
            Some(value) => one_instance(schema, child, value, record, image)?,
        }
    }
    Ok(())
}

/// Missing subtree: materialize a dummy where the schema allows absence,
/// otherwise add nothing and let validation report the count violation.
fn absent(schema: &TreeSchema, node: NodeId, rep: Repetition, record: &mut TreeRecord, image: NodeId) {
    match rep {
        Repetition::Optional | Repetition::Repeated => {
            add_dummy(schema, node, record, image);
        }
        Repetition::Required | Repetition::RepeatedRequired => {}
    }
}

fn one_instance(
    schema: &TreeSchema,
    node: NodeId,
    json: &Json,
    record: &mut TreeRecord,
    parent_image: NodeId,
) -> Result<(), DataError> {
    let label = schema.label(node);
    if schema.is_leaf(node) {
        let value = leaf_value(schema, node, json)?;
        record.add_leaf(parent_image, label, value, false);
    } else {
        let obj = json.as_object().ok_or_else(|| DataError::Shape {
            path: schema.path_string(node),
            message: format!("expected an object for group `{label}`"),
        })?;
        let image = record.add_group(parent_image, label, false);
        fill_group(schema, node, obj, record, image)?;
    }
    Ok(())
}

/// Converts a JSON scalar into a value. Numbers lean on the declared type:
/// a whole number parses as a float when the leaf is declared float. Type
/// mismatches are stored as-is for validation to report.
fn leaf_value(schema: &TreeSchema, leaf: NodeId, json: &Json) -> Result<Value, DataError> {
    let declared = schema.leaf_type(leaf);
    match json {
        Json::Bool(b) => Ok(Value::Boolean(*b)),
        Json::String(s) => Ok(Value::String(s.clone())),
        Json::Number(n) => {
            if declared == Some(PrimitiveType::Float) {
                Ok(Value::Float(n.as_f64().unwrap_or(f64::NAN)))
            } else if let Some(i) = n.as_i64() {
                Ok(Value::Integer(i))
            } else {
                Ok(Value::Float(n.as_f64().unwrap_or(f64::NAN)))
            }
        }
        _ => Err(DataError::Shape {
            path: schema.path_string(leaf),
            message: "expected a scalar at a leaf".to_string(),
        }),
    }
}

/// Materializes the all-NULL copy of the subtree rooted at `node`.
pub(crate) fn add_dummy(schema: &TreeSchema, node: NodeId, record: &mut TreeRecord, parent_image: NodeId) {
    let label = schema.label(node);
    if schema.is_leaf(node) {
        record.add_leaf(parent_image, label, Value::Null, true);
    } else {
        let image = record.add_group(parent_image, label, true);
        for &child in schema.children(node) {
            add_dummy(schema, child, record, image);
        }
    }
}

/// Renders a record back to JSON. Dummy subtrees are omitted; repeated
/// nodes always serialize as arrays.
pub fn serialize_record(schema: &TreeSchema, record: &TreeRecord) -> Json {
    group_to_json(schema, schema.root(), record, record.root())
}

/// Renders all records as a JSON array.
pub fn serialize_instance(schema: &TreeSchema, instance: &TreeInstance) -> Json {
    Json::Array(instance.records.iter().map(|r| serialize_record(schema, r)).collect())
}

fn group_to_json(schema: &TreeSchema, group: NodeId, record: &TreeRecord, image: NodeId) -> Json {
    let mut obj = Map::new();
    for &child in schema.children(group) {
        let label = schema.label(child);
        let instances: Vec<NodeId> = record
            .children_labeled(image, label)
            .into_iter()
            .filter(|&n| !record.node(n).dummy)
            .collect();
        if instances.is_empty() {
            continue;
        }
        let rendered: Vec<Json> = instances
            .iter()
            .map(|&n| node_to_json(schema, child, record, n))
            .collect();
        let rep = schema.node(child).repetition;
        let value = if rep.is_repeated() || rendered.len() > 1 {
            Json::Array(rendered)
        } else {
            rendered.into_iter().next().expect("non-empty")
        };
        obj.insert(label.to_string(), value);
    }
    Json::Object(obj)
}

fn node_to_json(schema: &TreeSchema, node: NodeId, record: &TreeRecord, image: NodeId) -> Json {
    if schema.is_leaf(node) {
        match record.value(image).expect("leaf image") {
            Value::Null => Json::Null,
            Value::Integer(v) => Json::Number((*v).into()),
            Value::Float(v) => Number::from_f64(*v).map(Json::Number).unwrap_or(Json::Null),
            Value::String(v) => Json::String(v.clone()),
            Value::Boolean(v) => Json::Bool(*v),
        }
    } else {
        group_to_json(schema, node, record, image)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::parse_schema;

    fn schema() -> TreeSchema {
        parse_schema(
            r#"{"table": {"name": "T", "fields": [
                {"name": "A", "type": "string"},
                {"name": "G", "repetition": "repeated", "fields": [
                    {"name": "X", "repetition": "repeated", "type": "integer"},
                    {"name": "Y", "repetition": "optional", "type": "float"}
                ]}
            ]}}"#,
        )
        .unwrap()
    }

    #[test]
    fn absent_optional_and_repeated_become_dummies() {
        let s = schema();
        let r = parse_record(&s, r#"{"A": "v"}"#).unwrap();
        let g = r.children_labeled(r.root(), "G");
        assert_eq!(g.len(), 1);
        assert!(r.node(g[0]).dummy);
        let x = r.children_labeled(g[0], "X");
        let y = r.children_labeled(g[0], "Y");
        assert!(r.node(x[0]).dummy && r.value(x[0]).unwrap().is_null());
        assert!(r.node(y[0]).dummy && r.value(y[0]).unwrap().is_null());
    }

    #[test]
    fn empty_array_counts_as_absent() {
        let s = schema();
        let r = parse_record(&s, r#"{"A": "v", "G": []}"#).unwrap();
        let g = r.children_labeled(r.root(), "G");
        assert_eq!(g.len(), 1);
        assert!(r.node(g[0]).dummy);
    }

    #[test]
    fn declared_float_accepts_whole_numbers() {
        let s = schema();
        let r = parse_record(&s, r#"{"A": "v", "G": [{"X": [1, 2], "Y": 3}]}"#).unwrap();
        let g = r.children_labeled(r.root(), "G");
        let y = r.children_labeled(g[0], "Y");
        assert_eq!(r.value(y[0]), Some(&Value::Float(3.0)));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let s = schema();
        let err = parse_record(&s, r#"{"A": "v", "B": 1}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn missing_required_field_parses_but_leaves_a_gap() {
        let s = schema();
        let r = parse_record(&s, r#"{"G": [{"X": [1]}]}"#).unwrap();
        assert!(r.children_labeled(r.root(), "A").is_empty());
    }

    #[test]
    fn round_trip_preserves_structure() {
        let s = schema();
        let text = r#"{"A": "v", "G": [{"X": [1, 2], "Y": 1.5}, {"X": [7]}]}"#;
        let r = parse_record(&s, text).unwrap();
        let json = serialize_record(&s, &r);
        let back = record_from_json(&s, &json).unwrap();
        assert!(super::super::isomorphic(&r, r.root(), &back, back.root()));
    }

    #[test]
    fn instance_parsing_reports_record_position() {
        let s = schema();
        let err = parse_instance(&s, r#"[{"A": "v"}, {"A": true, "Bogus": 1}]"#).unwrap_err();
        assert!(err.to_string().contains("record 1"));
    }
}
