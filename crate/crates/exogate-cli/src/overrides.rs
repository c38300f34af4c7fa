//! Dotted-path overrides onto the scenario JSON document.
//!
//! `--set key.path=value` edits happen on the raw document before
//! deserialization, so the schema check still applies to the patched result.
//! Values parse as JSON first (numbers, booleans, arrays) and fall back to a
//! bare string.

use serde_json::Value;

/// Applies one `key.path=value` assignment. Every intermediate segment must
/// already exist as an object; the final key may be inserted (optional fields
/// with defaults) or replaced.
pub fn apply_assignment(doc: &mut Value, assignment: &str) -> Result<(), String> {
    let (path, raw_value) = assignment
        .split_once('=')
        .ok_or_else(|| format!("override '{assignment}' must look like key.path=value"))?;
    let value = parse_value(raw_value);
    set_path(doc, path, value)
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<(), String> {
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(format!("override path '{path}' has an empty segment"));
    }
    let mut cursor = doc;
    for (i, segment) in segments.iter().enumerate() {
        let last = i == segments.len() - 1;
        let obj = cursor.as_object_mut().ok_or_else(|| {
            format!(
                "override path '{path}': '{}' is not an object",
                segments[..i].join(".")
            )
        })?;
        if last {
            obj.insert(segment.to_string(), value);
            return Ok(());
        }
        cursor = obj.get_mut(*segment).ok_or_else(|| {
            format!(
                "override path '{path}' does not resolve: missing '{}'",
                segments[..=i].join(".")
            )
        })?;
    }
    unreachable!("empty paths are rejected above")
}
