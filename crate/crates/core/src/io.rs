//! File formats and canonical serialization. Matrices travel as JSON
//! objects with explicit dimensions and row-major [re, im] entry pairs;
//! density operators add a "kind" tag; networks and channels wrap matrices
//! with their metadata. Emitted JSON is canonical: sorted keys, no spaces,
//! floats in scientific notation with 17 significant digits so equal values
//! always serialize to equal bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde_json::{Map, Value};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::networks::NetworkSpec;
use crate::qmath::{validate_density, ComplexMatrix, DensityOperator};
use crate::sampling::EstimateResult;

fn parse_err(context: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        context: context.to_string(),
        message: message.into(),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads and parses a JSON document.
pub fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_err(&path.display().to_string(), e.to_string()))
}

fn positive_dim(obj: &Map<String, Value>, field: &str, context: &str) -> Result<usize> {
    let value = obj
        .get(field)
        .and_then(Value::as_u64)
        .ok_or_else(|| parse_err(context, format!("{field} missing or not a nonnegative integer")))?;
    if value == 0 {
        return Err(parse_err(context, format!("{field} must be positive")));
    }
    Ok(value as usize)
}

/// Decodes a matrix object, reporting the first offending entry index on
/// malformed shapes.
pub fn matrix_from_value(v: &Value, context: &str) -> Result<ComplexMatrix> {
    let obj = v
        .as_object()
        .ok_or_else(|| parse_err(context, "expected a JSON object"))?;
    let rows = positive_dim(obj, "dim_rows", context)?;
    let cols = positive_dim(obj, "dim_cols", context)?;
    let entries = obj
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err(context, "entries missing or not an array"))?;
    let mut decoded = Vec::with_capacity(entries.len());
    for (index, entry) in entries.iter().enumerate() {
        let pair = entry.as_array().filter(|p| p.len() == 2).ok_or_else(|| {
            parse_err(context, format!("entry {index}: expected a [re, im] pair"))
        })?;
        let re = pair[0]
            .as_f64()
            .ok_or_else(|| parse_err(context, format!("entry {index}: re is not a number")))?;
        let im = pair[1]
            .as_f64()
            .ok_or_else(|| parse_err(context, format!("entry {index}: im is not a number")))?;
        decoded.push(Complex64::new(re, im));
    }
    ComplexMatrix::new(rows, cols, decoded).map_err(|e| match e {
        // Structural problems in a decoded file are parse errors; domain
        // limits such as the dimension cap keep their own class.
        Error::EntryCount { .. } | Error::NonFiniteEntry { .. } | Error::ZeroDimension => {
            parse_err(context, e.to_string())
        }
        other => other,
    })
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix> {
    let value = read_json(path)?;
    matrix_from_value(&value, &path.display().to_string())
}

/// Decodes a density operator: a matrix object, optionally tagged
/// "kind": "density", whose contents must validate as a quantum state.
pub fn density_from_value(value: &Value, context: &str) -> Result<DensityOperator> {
    if let Some(kind) = value.get("kind") {
        if kind.as_str() != Some("density") {
            return Err(parse_err(context, "kind must be \"density\""));
        }
    }
    let matrix = matrix_from_value(value, context)?;
    validate_density(matrix)
}

pub fn read_density(path: &Path) -> Result<DensityOperator> {
    let value = read_json(path)?;
    density_from_value(&value, &path.display().to_string())
}

pub fn network_from_value(value: &Value, context: &str) -> Result<NetworkSpec> {
    let obj = value
        .as_object()
        .ok_or_else(|| parse_err(context, "expected a JSON object"))?;
    let target_dim = positive_dim(obj, "target_dim", context)?;
    let unitary = obj
        .get("unitary")
        .ok_or_else(|| parse_err(context, "unitary missing"))?;
    let unitary = matrix_from_value(unitary, &format!("{context}#unitary"))?;
    let description = obj
        .get("description")
        .and_then(Value::as_str)
        .unwrap_or_default();
    NetworkSpec::new(target_dim, unitary, description)
}

pub fn read_network(path: &Path) -> Result<NetworkSpec> {
    let value = read_json(path)?;
    network_from_value(&value, &path.display().to_string())
}

pub fn channel_from_value(value: &Value, context: &str) -> Result<KrausChannel> {
    let obj = value
        .as_object()
        .ok_or_else(|| parse_err(context, "expected a JSON object"))?;
    let dim = positive_dim(obj, "dim", context)?;
    let kraus_values = obj
        .get("kraus")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err(&context, "kraus missing or not an array"))?;
    let mut kraus = Vec::with_capacity(kraus_values.len());
    for (index, kv) in kraus_values.iter().enumerate() {
        let k = matrix_from_value(kv, &format!("{context}#kraus[{index}]"))?;
        if k.rows() != dim || k.cols() != dim {
            return Err(parse_err(
                &context,
                format!(
                    "kraus[{index}] is {}x{} but dim declares {dim}",
                    k.rows(),
                    k.cols()
                ),
            ));
        }
        kraus.push(k);
    }
    let label = obj.get("label").and_then(Value::as_str).unwrap_or_default();
    KrausChannel::new(kraus, label)
}

pub fn read_channel(path: &Path) -> Result<KrausChannel> {
    let value = read_json(path)?;
    channel_from_value(&value, &path.display().to_string())
}

pub fn matrix_to_value(m: &ComplexMatrix) -> Value {
    let entries: Vec<Value> = (0..m.rows())
        .flat_map(|r| (0..m.cols()).map(move |c| (r, c)))
        .map(|(r, c)| {
            let z = m.get(r, c);
            Value::Array(vec![Value::from(z.re), Value::from(z.im)])
        })
        .collect();
    let mut obj = Map::new();
    obj.insert("dim_rows".into(), Value::from(m.rows() as u64));
    obj.insert("dim_cols".into(), Value::from(m.cols() as u64));
    obj.insert("entries".into(), Value::Array(entries));
    Value::Object(obj)
}

pub fn density_to_value(rho: &DensityOperator) -> Value {
    let mut value = matrix_to_value(rho.matrix());
    value
        .as_object_mut()
        .expect("matrix value is an object")
        .insert("kind".into(), Value::from("density"));
    value
}

pub fn network_to_value(spec: &NetworkSpec) -> Value {
    let mut obj = Map::new();
    obj.insert("target_dim".into(), Value::from(spec.target_dim() as u64));
    obj.insert("unitary".into(), matrix_to_value(spec.unitary()));
    obj.insert("description".into(), Value::from(spec.description()));
    Value::Object(obj)
}

pub fn channel_to_value(ch: &KrausChannel) -> Value {
    let mut obj = Map::new();
    obj.insert("dim".into(), Value::from(ch.dim() as u64));
    obj.insert(
        "kraus".into(),
        Value::Array(ch.kraus_ops().iter().map(matrix_to_value).collect()),
    );
    obj.insert("label".into(), Value::from(ch.label()));
    Value::Object(obj)
}

pub fn estimate_to_value(est: &EstimateResult) -> Value {
    let mut obj = Map::new();
    obj.insert("point".into(), Value::from(est.point));
    obj.insert("std_error".into(), Value::from(est.std_error));
    obj.insert("ci_low".into(), Value::from(est.ci_low));
    obj.insert("ci_high".into(), Value::from(est.ci_high));
    obj.insert("shots".into(), Value::from(est.shots));
    obj.insert("p0_hat".into(), Value::from(est.p0_hat));
    Value::Object(obj)
}

/// One header line plus one data row, floats in canonical form.
pub fn estimate_to_csv(est: &EstimateResult) -> String {
    format!(
        "point,std_error,ci_low,ci_high,shots,p0_hat\n{},{},{},{},{},{}\n",
        canonical_float(est.point),
        canonical_float(est.std_error),
        canonical_float(est.ci_low),
        canonical_float(est.ci_high),
        est.shots,
        canonical_float(est.p0_hat),
    )
}

/// Scientific notation with 16 fractional digits: 17 significant digits,
/// enough to reproduce any double exactly on reparse.
pub fn canonical_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Deterministic JSON text: object keys sorted, no whitespace, floats via
/// [`canonical_float`], integers unchanged.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                let _ = write!(out, "{}", canonical_float(n.as_f64().expect("finite")));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serialization"))
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("string serialization"));
                out.push(':');
                write_canonical(&map[*key], out);
            }
            out.push('}');
        }
    }
}

/// Writes text to a file; the destination directory must already exist.
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::random_density;
    use crate::sampling::ShotPlan;
    use std::path::PathBuf;

    fn scratch(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("cswap-io-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    fn write_scratch(name: &str, content: &str) -> PathBuf {
        let path = scratch(name);
        fs::write(&path, content).unwrap();
        path
    }

    #[test]
    fn matrix_roundtrip_is_exact() {
        let m = ComplexMatrix::new(
            2,
            3,
            vec![
                Complex64::new(0.1, -0.2),
                Complex64::new(1.0 / 3.0, 0.0),
                Complex64::new(-4.5e-13, 2.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(7.25, -1.0 / 7.0),
                Complex64::new(1e300, -1e-300),
            ],
        )
        .unwrap();
        let path = write_scratch("roundtrip.json", &canonical_json(&matrix_to_value(&m)));
        let back = read_matrix(&path).unwrap();
        assert_eq!(back.rows(), 2);
        assert_eq!(back.cols(), 3);
        for r in 0..2 {
            for c in 0..3 {
                assert_eq!(back.get(r, c), m.get(r, c));
            }
        }
    }

    #[test]
    fn density_roundtrip_and_kind_tag() {
        let rho = random_density(3, 2, 55).unwrap();
        let text = canonical_json(&density_to_value(&rho));
        assert!(text.contains("\"kind\":\"density\""));
        let path = write_scratch("density.json", &text);
        let back = read_density(&path).unwrap();
        assert!(back.matrix().frobenius_distance(rho.matrix()) < 1e-15);

        // A plain matrix document that validates is accepted too.
        let plain = write_scratch(
            "density-plain.json",
            &canonical_json(&matrix_to_value(rho.matrix())),
        );
        assert!(read_density(&plain).is_ok());

        let tagged = write_scratch(
            "density-mistagged.json",
            r#"{"dim_rows":1,"dim_cols":1,"entries":[[1.0,0.0]],"kind":"unitary"}"#,
        );
        assert!(matches!(read_density(&tagged), Err(Error::Parse { .. })));
    }

    #[test]
    fn invalid_density_contents_fail_validation_not_parsing() {
        let path = write_scratch(
            "density-invalid.json",
            r#"{"dim_rows":2,"dim_cols":2,"entries":[[0.9,0.0],[0.3,0.1],[0.3,-0.1],[0.4,0.0]],"kind":"density"}"#,
        );
        assert!(matches!(
            read_density(&path),
            Err(Error::InvalidDensity { .. })
        ));
    }

    #[test]
    fn malformed_entry_reports_index() {
        let path = write_scratch(
            "bad-entry.json",
            r#"{"dim_rows":2,"dim_cols":1,"entries":[[1.0,0.0],[0.5]]}"#,
        );
        let err = read_matrix(&path).unwrap_err();
        match err {
            Error::Parse { message, .. } => assert!(message.contains("entry 1"), "{message}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn entry_count_mismatch_is_a_parse_error() {
        let path = write_scratch(
            "bad-count.json",
            r#"{"dim_rows":2,"dim_cols":2,"entries":[[1.0,0.0]]}"#,
        );
        assert!(matches!(read_matrix(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn zero_dim_and_bad_json_are_parse_errors() {
        let zero = write_scratch(
            "zero-dim.json",
            r#"{"dim_rows":0,"dim_cols":2,"entries":[]}"#,
        );
        assert!(matches!(read_matrix(&zero), Err(Error::Parse { .. })));
        let bad = write_scratch("not-json.json", "{\"dim_rows\": 2,");
        assert!(matches!(read_matrix(&bad), Err(Error::Parse { .. })));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let path = scratch("does-not-exist.json");
        let _ = fs::remove_file(&path);
        let err = read_matrix(&path).unwrap_err();
        match err {
            Error::Io { path: p, .. } => assert!(p.contains("does-not-exist")),
            other => panic!("expected io error, got {other:?}"),
        }
    }

    #[test]
    fn network_roundtrip_and_validation() {
        let spec = NetworkSpec::swap(2).unwrap();
        let path = write_scratch("network.json", &canonical_json(&network_to_value(&spec)));
        let back = read_network(&path).unwrap();
        assert_eq!(back.target_dim(), 4);
        assert_eq!(back.description(), "swap(d=2)");
        assert!(back.unitary().frobenius_distance(spec.unitary()) < 1e-15);

        let crooked = write_scratch(
            "network-crooked.json",
            r#"{"target_dim":2,"unitary":{"dim_rows":2,"dim_cols":2,"entries":[[1.0,0.0],[0.0,0.0],[0.0,0.0],[0.5,0.0]]},"description":"shrink"}"#,
        );
        assert!(matches!(read_network(&crooked), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn channel_roundtrip_and_shape_checks() {
        let ch = KrausChannel::depolarizing(2, 0.3).unwrap();
        let path = write_scratch("channel.json", &canonical_json(&channel_to_value(&ch)));
        let back = read_channel(&path).unwrap();
        assert_eq!(back.dim(), 2);
        assert_eq!(back.label(), "depolarizing(p=0.3)");
        assert_eq!(back.kraus_ops().len(), ch.kraus_ops().len());

        let mismatched = write_scratch(
            "channel-mismatch.json",
            r#"{"dim":2,"kraus":[{"dim_rows":1,"dim_cols":1,"entries":[[1.0,0.0]]}],"label":"tiny"}"#,
        );
        let err = read_channel(&mismatched).unwrap_err();
        match err {
            Error::Parse { message, .. } => assert!(message.contains("kraus[0]"), "{message}"),
            other => panic!("expected parse error, got {other:?}"),
        }

        let incomplete = write_scratch(
            "channel-incomplete.json",
            r#"{"dim":1,"kraus":[{"dim_rows":1,"dim_cols":1,"entries":[[0.5,0.0]]}],"label":"leaky"}"#,
        );
        assert!(matches!(
            read_channel(&incomplete),
            Err(Error::KrausIncomplete { .. })
        ));
    }

    #[test]
    fn canonical_json_is_order_insensitive_and_fixed_format() {
        let mut a = Map::new();
        a.insert("beta".into(), Value::from(0.5));
        a.insert("alpha".into(), Value::from(3u64));
        let mut b = Map::new();
        b.insert("alpha".into(), Value::from(3u64));
        b.insert("beta".into(), Value::from(0.5));
        let text_a = canonical_json(&Value::Object(a));
        let text_b = canonical_json(&Value::Object(b));
        assert_eq!(text_a, text_b);
        assert_eq!(text_a, "{\"alpha\":3,\"beta\":5.0000000000000000e-1}");
    }

    #[test]
    fn canonical_float_reparses_exactly() {
        for x in [
            0.1,
            1.0 / 3.0,
            std::f64::consts::PI,
            6.02e23,
            -7.3e-15,
            0.625,
        ] {
            let parsed: f64 = canonical_float(x).parse().unwrap();
            assert_eq!(parsed, x);
        }
    }

    #[test]
    fn estimate_json_and_csv_agree() {
        let plan = ShotPlan::new(10_000, 7, 0.95).unwrap();
        let est = crate::sampling::estimate_from_counts(8125, &plan);
        let json = canonical_json(&estimate_to_value(&est));
        let csv = estimate_to_csv(&est);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "point,std_error,ci_low,ci_high,shots,p0_hat"
        );
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        let parsed: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(row[0].parse::<f64>().unwrap(), parsed["point"].as_f64().unwrap());
        assert_eq!(row[4].parse::<u64>().unwrap(), parsed["shots"].as_u64().unwrap());
        assert_eq!(
            row[5].parse::<f64>().unwrap(),
            parsed["p0_hat"].as_f64().unwrap()
        );
    }

    #[test]
    fn write_text_requires_existing_directory() {
        let path = std::env::temp_dir()
            .join("cswap-io-missing-dir")
            .join("out.json");
        let _ = fs::remove_dir_all(path.parent().unwrap());
        let err = write_text(&path, "{}").unwrap_err();
        match err {
            Error::Io { path: p, .. } => assert!(p.contains("cswap-io-missing-dir")),
            other => panic!("expected io error, got {other:?}"),
        }
    }
}
