//! Result-document assembly and emission.
//!
//! Every successful run emits one document: the command name, the mode, the
//! inputs with content checksums, the effective parameters, and the result
//! payload. JSON output is canonical (sorted keys, fixed float format) so a
//! given invocation is byte-reproducible.

use std::env;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cswap_core::io::{canonical_float, canonical_json, estimate_to_csv, write_text};
use cswap_core::sampling::EstimateResult;
use cswap_core::Result;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Environment variable naming the directory under which relative `--out`
/// paths are resolved.
pub const OUT_DIR_ENV: &str = "CSWAP_OUT_DIR";

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

/// One input to the run: a file (checksummed by content) or a catalog
/// descriptor (checksummed by its text).
#[derive(Debug, Clone)]
pub enum InputRecord {
    File { path: String, sha256: String },
    Catalog { spec: String, sha256: String },
}

impl InputRecord {
    pub fn file(path: &Path, bytes: &[u8]) -> Self {
        InputRecord::File {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        }
    }

    pub fn catalog(spec: &str) -> Self {
        InputRecord::Catalog {
            spec: spec.to_string(),
            sha256: sha256_hex(spec.as_bytes()),
        }
    }

    fn to_value(&self) -> Value {
        let mut m = Map::new();
        match self {
            InputRecord::File { path, sha256 } => {
                m.insert("path".into(), Value::String(path.clone()));
                m.insert("sha256".into(), Value::String(sha256.clone()));
            }
            InputRecord::Catalog { spec, sha256 } => {
                m.insert("catalog".into(), Value::String(spec.clone()));
                m.insert("sha256".into(), Value::String(sha256.clone()));
            }
        }
        Value::Object(m)
    }
}

/// Assembles the full result document.
pub fn document(
    command: &str,
    mode: &str,
    inputs: &[InputRecord],
    params: Map<String, Value>,
    result: Value,
) -> Value {
    let mut doc = Map::new();
    doc.insert("command".into(), Value::String(command.to_string()));
    doc.insert("mode".into(), Value::String(mode.to_string()));
    doc.insert(
        "inputs".into(),
        Value::Array(inputs.iter().map(InputRecord::to_value).collect()),
    );
    doc.insert("params".into(), Value::Object(params));
    doc.insert("result".into(), result);
    Value::Object(doc)
}

/// How the CSV body is rendered: the pinned estimate table when the payload
/// is exactly one estimate per rep, or a generic flatten of the result.
pub enum CsvBody {
    Estimates(Vec<EstimateResult>),
    Flatten,
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.to_string()
            } else if let Some(u) = n.as_u64() {
                u.to_string()
            } else {
                canonical_float(n.as_f64().unwrap_or(f64::NAN))
            }
        }
        Value::String(s) => s.clone(),
        _ => unreachable!("scalar_text called on a composite value"),
    }
}

fn flatten_into(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            for k in keys {
                let p = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_into(&p, &m[k], out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                let p = if prefix.is_empty() {
                    i.to_string()
                } else {
                    format!("{prefix}.{i}")
                };
                flatten_into(&p, x, out);
            }
        }
        scalar => out.push((prefix.to_string(), scalar_text(scalar))),
    }
}

/// Renders a result payload as one CSV header plus one row per rep. A
/// payload of the shape {"reps": [...]} contributes one row per entry;
/// anything else is a single row. Columns are dotted flattened keys in
/// sorted order.
fn flatten_csv(result: &Value) -> String {
    let rows: Vec<&Value> = match result {
        Value::Object(m) if m.len() == 1 && m.contains_key("reps") => match &m["reps"] {
            Value::Array(a) => a.iter().collect(),
            other => vec![other],
        },
        other => vec![other],
    };
    let mut text = String::new();
    for (i, row) in rows.iter().enumerate() {
        let mut cells = Vec::new();
        flatten_into("", row, &mut cells);
        if i == 0 {
            let header: Vec<&str> = cells.iter().map(|(k, _)| k.as_str()).collect();
            text.push_str(&header.join(","));
            text.push('\n');
        }
        let values: Vec<&str> = cells.iter().map(|(_, v)| v.as_str()).collect();
        text.push_str(&values.join(","));
        text.push('\n');
    }
    text
}

fn estimates_csv(ests: &[EstimateResult]) -> String {
    let mut text = String::new();
    for (i, est) in ests.iter().enumerate() {
        let block = estimate_to_csv(est);
        let mut lines = block.lines();
        let header = lines.next().unwrap_or_default();
        let row = lines.next().unwrap_or_default();
        if i == 0 {
            text.push_str(header);
            text.push('\n');
        }
        text.push_str(row);
        text.push('\n');
    }
    text
}

/// Resolves the effective output path: absolute paths pass through,
/// relative paths land under $CSWAP_OUT_DIR when it is set.
pub fn resolve_out(out: Option<&Path>) -> Option<PathBuf> {
    let p = out?;
    if p.is_absolute() {
        return Some(p.to_path_buf());
    }
    match env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => Some(PathBuf::from(dir).join(p)),
        _ => Some(p.to_path_buf()),
    }
}

/// Renders the document in the requested format and writes it to the
/// resolved output path, or to stdout when no path was given.
pub fn emit(doc: &Value, csv: Option<&CsvBody>, out: Option<&Path>) -> Result<()> {
    let text = match csv {
        None => {
            let mut s = canonical_json(doc);
            s.push('\n');
            s
        }
        Some(CsvBody::Estimates(ests)) => estimates_csv(ests),
        Some(CsvBody::Flatten) => flatten_csv(&doc["result"]),
    };
    match resolve_out(out) {
        Some(path) => write_text(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
