//! `path=value` edits applied to a scenario document before it is parsed.
//!
//! Paths are dotted field names with optional indices, e.g.
//! `venues[0].speed_bump_in_us` or `agents[2].strategy.enabled`. The value is
//! read as JSON when it parses as such and as a bare string otherwise, so
//! `side=sell` and `side="sell"` are equivalent.

use serde_json::Value;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OverrideError {
    #[error("override `{0}` is not of the form path=value")]
    Syntax(String),
    #[error("{path}: {message}")]
    Path { path: String, message: String },
}

#[derive(Debug, PartialEq, Eq)]
enum Segment<'a> {
    Field(&'a str),
    Index(usize),
}

fn parse_path(path: &str) -> Result<Vec<Segment<'_>>, OverrideError> {
    let bad = |message: &str| OverrideError::Path {
        path: path.into(),
        message: message.into(),
    };
    let mut out = Vec::new();
    for part in path.split('.') {
        let (name, mut rest) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (part, ""),
        };
        if name.is_empty() {
            return Err(bad("empty field name"));
        }
        out.push(Segment::Field(name));
        while !rest.is_empty() {
            let close = rest.find(']').ok_or_else(|| bad("unclosed `[`"))?;
            let index = rest[1..close].parse().map_err(|_| bad("index is not a number"))?;
            out.push(Segment::Index(index));
            rest = &rest[close + 1..];
            if !rest.is_empty() && !rest.starts_with('[') {
                return Err(bad("unexpected text after `]`"));
            }
        }
    }
    Ok(out)
}

/// Splits `path=value` at the first `=`.
pub fn split(spec: &str) -> Result<(&str, Value), OverrideError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| OverrideError::Syntax(spec.into()))?;
    if path.is_empty() {
        return Err(OverrideError::Syntax(spec.into()));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()));
    Ok((path, value))
}

/// Sets the value at `path`. Missing object fields are created so defaulted
/// settings can be overridden; array indices must already exist.
pub fn set(doc: &mut Value, path: &str, value: Value) -> Result<(), OverrideError> {
    let segments = parse_path(path)?;
    let mut node = doc;
    let mut walked = String::new();
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        let here = |walked: &str, message: String| OverrideError::Path {
            path: if walked.is_empty() { path.into() } else { walked.into() },
            message,
        };
        match seg {
            Segment::Field(name) => {
                if !walked.is_empty() {
                    walked.push('.');
                }
                walked.push_str(name);
                let obj = node
                    .as_object_mut()
                    .ok_or_else(|| here(&walked, "parent is not an object".into()))?;
                if last {
                    obj.insert((*name).into(), value);
                    return Ok(());
                }
                node = obj.entry(*name).or_insert_with(|| Value::Object(Default::default()));
            }
            Segment::Index(n) => {
                walked.push_str(&format!("[{n}]"));
                let arr = node
                    .as_array_mut()
                    .ok_or_else(|| here(&walked, "not an array".into()))?;
                let len = arr.len();
                let slot = arr
                    .get_mut(*n)
                    .ok_or_else(|| here(&walked, format!("index out of range (length {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                node = slot;
            }
        }
    }
    unreachable!("paths have at least one segment")
}

/// Applies each `path=value` in order.
pub fn apply<S: AsRef<str>>(doc: &mut Value, specs: &[S]) -> Result<(), OverrideError> {
    for spec in specs {
        let (path, value) = split(spec.as_ref())?;
        set(doc, path, value)?;
    }
    Ok(())
}
