//! Query path resolution.
//!
//! Query paths address leaves by any suffix of their reachability path, so
//! `Price` and `Service.Price` both work as long as one leaf matches. A path
//! may also hop across one reference: `Route.From_Location_id.City` names
//! the referrer (by suffix), then continues below the referent's range
//! group. Resolution fails loudly when no or several bindings match; it
//! never picks silently.

use super::{NodeId, TreeSchema};
use crate::error::PathError;

/// What a query path denotes after resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathBinding {
    /// An ordinary schema leaf.
    Leaf(NodeId),
    /// A leaf reached through a reference: follow `referrer`'s value to the
    /// matching `identifier` instance and read `leaf` inside its range group.
    Reference {
        referrer: NodeId,
        identifier: NodeId,
        range_group: NodeId,
        leaf: NodeId,
    },
}

impl PathBinding {
    /// Canonical spelling used in headers and diagnostics.
    pub fn spelling(&self, schema: &TreeSchema) -> String {
        match *self {
            PathBinding::Leaf(leaf) => schema.short_path(leaf),
            PathBinding::Reference { referrer, range_group, leaf, .. } => {
                let mut s = schema.short_path(referrer);
                let below: Vec<&str> = schema
                    .path_to(leaf)
                    .into_iter()
                    .skip_while(|&n| n != range_group)
                    .skip(1)
                    .map(|n| schema.label(n))
                    .collect();
                s.push('.');
                s.push_str(&below.join("."));
                s
            }
        }
    }
}

/// True when `suffix` ends the reachability path of `node`.
fn is_suffix(schema: &TreeSchema, node: NodeId, suffix: &[&str]) -> bool {
    let full = schema.reachability_path(node);
    suffix.len() <= full.len()
        && full[full.len() - suffix.len()..].iter().zip(suffix).all(|(a, b)| a == b)
}

/// Resolves a dot-separated query path to a unique binding.
pub fn resolve_path(schema: &TreeSchema, path: &str) -> Result<PathBinding, PathError> {
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(PathError::Unresolved { path: path.to_string() });
    }

    let mut candidates: Vec<PathBinding> = Vec::new();

    for leaf in schema.leaves() {
        if is_suffix(schema, leaf, &segments) {
            candidates.push(PathBinding::Leaf(leaf));
        }
    }

    // Reference hop: some non-empty head suffix-matches a referrer leaf and
    // the tail walks down from the referent's range group.
    for split in 1..segments.len() {
        let (head, tail) = segments.split_at(split);
        for reference in &schema.constraints.references {
            if !schema.is_leaf(reference.referrer) || !is_suffix(schema, reference.referrer, head)
            {
                continue;
            }
            let Some(identity) = schema.constraints.identity_for(reference.referent) else {
                continue;
            };
            let mut cur = identity.range_group;
            let mut ok = true;
            for seg in tail {
                match schema.child_by_label(cur, seg) {
                    Some(next) => cur = next,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && schema.is_leaf(cur) {
                let binding = PathBinding::Reference {
                    referrer: reference.referrer,
                    identifier: reference.referent,
                    range_group: identity.range_group,
                    leaf: cur,
                };
                if !candidates.contains(&binding) {
                    candidates.push(binding);
                }
            }
        }
    }

    match candidates.len() {
        0 => Err(PathError::Unresolved { path: path.to_string() }),
        1 => Ok(candidates[0]),
        _ => Err(PathError::Ambiguous {
            path: path.to_string(),
            candidates: candidates.iter().map(|c| c.spelling(schema)).collect(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::parse_schema;

    fn booking_like() -> TreeSchema {
        parse_schema(
            r#"{
                "table": {"name": "Booking", "fields": [
                    {"name": "Voucher", "type": "string"},
                    {"name": "Service", "repetition": "repeated_required", "fields": [
                        {"name": "Transfer", "repetition": "repeated", "fields": [
                            {"name": "Route", "fields": [
                                {"name": "From_Location_id", "type": "integer"},
                                {"name": "To_Location_id", "type": "integer"}
                            ]}
                        ]}
                    ]},
                    {"name": "Location", "repetition": "repeated", "fields": [
                        {"name": "Id", "type": "integer"},
                        {"name": "City", "type": "string"}
                    ]}
                ]},
                "identities": [{"id_path": "Location.Id"}],
                "references": [
                    {"referrer_path": "Service.Transfer.Route.From_Location_id", "referent_path": "Location.Id"},
                    {"referrer_path": "Service.Transfer.Route.To_Location_id", "referent_path": "Location.Id"}
                ]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn unique_short_suffix_resolves() {
        let s = booking_like();
        match resolve_path(&s, "City").unwrap() {
            PathBinding::Leaf(leaf) => assert_eq!(s.path_string(leaf), "Booking.Location.City"),
            other => panic!("expected a plain leaf, got {other:?}"),
        }
    }

    #[test]
    fn full_path_resolves_too() {
        let s = booking_like();
        assert!(matches!(
            resolve_path(&s, "Booking.Location.City").unwrap(),
            PathBinding::Leaf(_)
        ));
    }

    #[test]
    fn reference_hop_resolves() {
        let s = booking_like();
        match resolve_path(&s, "Route.From_Location_id.City").unwrap() {
            PathBinding::Reference { referrer, leaf, .. } => {
                assert_eq!(s.label(referrer), "From_Location_id");
                assert_eq!(s.label(leaf), "City");
            }
            other => panic!("expected a reference binding, got {other:?}"),
        }
    }

    #[test]
    fn reference_spelling_is_canonical() {
        let s = booking_like();
        let binding = resolve_path(&s, "From_Location_id.City").unwrap();
        assert_eq!(
            binding.spelling(&s),
            "Service.Transfer.Route.From_Location_id.City"
        );
    }

    #[test]
    fn ambiguous_suffix_is_an_error() {
        let s = parse_schema(
            r#"{"table": {"name": "T", "fields": [
                {"name": "A", "fields": [{"name": "X", "type": "integer"}]},
                {"name": "B", "fields": [{"name": "X", "type": "integer"}]}
            ]}}"#,
        )
        .unwrap();
        match resolve_path(&s, "X") {
            Err(PathError::Ambiguous { candidates, .. }) => assert_eq!(candidates.len(), 2),
            other => panic!("expected ambiguity, got {other:?}"),
        }
        assert!(resolve_path(&s, "A.X").is_ok());
    }

    #[test]
    fn plain_and_reference_collision_is_ambiguous() {
        // "Ref.City" names both a plain leaf (group Ref with child City) and
        // a reference hop (referrer leaf Ref into G); neither may win silently.
        let s = parse_schema(
            r#"{
                "table": {"name": "T", "fields": [
                    {"name": "A", "fields": [{"name": "Ref", "type": "integer"}]},
                    {"name": "B", "fields": [
                        {"name": "Ref", "fields": [{"name": "City", "type": "string"}]}
                    ]},
                    {"name": "G", "repetition": "repeated", "fields": [
                        {"name": "Id", "type": "integer"},
                        {"name": "City", "type": "string"}
                    ]}
                ]},
                "identities": [{"id_path": "G.Id"}],
                "references": [{"referrer_path": "A.Ref", "referent_path": "G.Id"}]
            }"#,
        )
        .unwrap();
        assert!(matches!(
            resolve_path(&s, "Ref.City"),
            Err(PathError::Ambiguous { .. })
        ));
        // Longer spellings disambiguate both readings.
        assert!(matches!(
            resolve_path(&s, "B.Ref.City").unwrap(),
            PathBinding::Leaf(_)
        ));
        assert!(matches!(
            resolve_path(&s, "A.Ref.City").unwrap(),
            PathBinding::Reference { .. }
        ));
    }

    #[test]
    fn unresolved_path_is_an_error() {
        let s = booking_like();
        assert!(matches!(
            resolve_path(&s, "Nonexistent"),
            Err(PathError::Unresolved { .. })
        ));
    }
}
