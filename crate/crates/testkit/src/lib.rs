//! Shared test support: random operation scripts, independent oracles, and
//! normalization helpers. Nothing here reuses the implementation under test
//! beyond its public data accessors.

pub mod chain;
pub mod corrupt;
pub mod gen;
pub mod oracle;

use serde_json::Value;

/// Removes run-dependent fields (timestamps and the document id) so two
/// documents built from the same script compare equal.
pub fn normalize(mut value: Value) -> Value {
    fn strip(value: &mut Value) {
        match value {
            Value::Object(map) => {
                map.remove("created_at");
                for v in map.values_mut() {
                    strip(v);
                }
            }
            Value::Array(items) => items.iter_mut().for_each(strip),
            _ => {}
        }
    }
    if let Value::Object(map) = &mut value {
        map.remove("id");
    }
    strip(&mut value);
    value
}
