//! Parsers for the sweep flags: the `--values` list and the
//! `--param` dotted path.

use crate::Failure;

/// Parses a comma-separated list of finite numbers. Blank entries are
/// skipped; an unparseable entry is an [`Failure::Io`], a non-finite
/// one or an empty list a [`Failure::Domain`].
pub fn parse_values(text: &str) -> Result<Vec<f64>, Failure> {
    let mut values = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let value: f64 = part
            .parse()
            .map_err(|_| Failure::Io(format!("value {part:?} is not a number")))?;
        if !value.is_finite() {
            return Err(Failure::Domain(format!("value {part} is not finite")));
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(Failure::Domain("value list is empty".into()));
    }
    Ok(values)
}

/// Replaces the number at a dotted path (`dt`, `line.min_headway`,
/// `line.segments.0.v_limit`) in a scenario document. Objects are
/// indexed by key, arrays by decimal index; the path must land on a
/// number. `value` must be finite.
pub fn set_numeric_field(
    doc: &mut serde_json::Value,
    path: &str,
    value: f64,
) -> Result<(), Failure> {
    let mut node = doc;
    for part in path.split('.') {
        node = match node {
            serde_json::Value::Object(map) => map
                .get_mut(part)
                .ok_or_else(|| Failure::Domain(format!("no field {part:?} along path {path:?}")))?,
            serde_json::Value::Array(items) => {
                let index: usize = part.parse().map_err(|_| {
                    Failure::Domain(format!("{part:?} is not an array index along path {path:?}"))
                })?;
                items.get_mut(index).ok_or_else(|| {
                    Failure::Domain(format!("index {index} out of bounds along path {path:?}"))
                })?
            }
            _ => {
                return Err(Failure::Domain(format!(
                    "path {path:?} dead-ends at {part:?}"
                )))
            }
        };
    }
    if !node.is_number() {
        return Err(Failure::Domain(format!("{path:?} is not a numeric field")));
    }
    *node = serde_json::Value::Number(
        serde_json::Number::from_f64(value)
            .ok_or_else(|| Failure::Domain(format!("replacement {value} is not finite")))?,
    );
    Ok(())
}
