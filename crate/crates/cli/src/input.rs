use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde_path_to_error::Segment;

/// Render a deserializer path as a JSON pointer.
fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = pointer(e.path());
        anyhow!(SchemaError(format!("{origin}: at {at}: {}", e.into_inner())))
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_json(&text, &path.display().to_string())
}

#[derive(Debug)]
pub struct SchemaError(pub String);

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "schema violation in {}", self.0)
    }
}

impl std::error::Error for SchemaError {}

/// `a:b` as a pair of floats.
pub fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s.split_once(':').ok_or_else(|| anyhow!("range '{s}' must be a:b"))?;
    let a: f64 = a.trim().parse().with_context(|| format!("range start in '{s}'"))?;
    let b: f64 = b.trim().parse().with_context(|| format!("range end in '{s}'"))?;
    if !(b > a) {
        bail!("range '{s}' must have end > start");
    }
    Ok((a, b))
}
