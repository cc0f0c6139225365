//! Model (JSON) and dataset (CSV) files.
//!
//! Models are written canonically: sorted keys, tables in configuration
//! order. Datasets carry `# key: value` provenance lines before the header.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::data::{DataError, Dataset, Provenance};
use crate::model::{validate, RawScm, Scm, ValidationErrors, Value};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error(transparent)]
    Invalid(#[from] ValidationErrors),
    #[error(transparent)]
    Data(#[from] DataError),
}

impl IoError {
    /// JSON pointers of every schema-level complaint.
    pub fn pointers(&self) -> Vec<&str> {
        match self {
            IoError::Schema { pointer, .. } => vec![pointer.as_str()],
            IoError::Invalid(v) => v.0.iter().map(|x| x.pointer.as_str()).collect(),
            _ => Vec::new(),
        }
    }
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn to_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
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
    out
}

/// Parses the declarative document without validating it.
pub fn parse_raw_scm(text: &str) -> Result<RawScm, IoError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| IoError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    serde_path_to_error::deserialize(value).map_err(|e| IoError::Schema {
        pointer: to_pointer(e.path()),
        message: e.inner().to_string(),
    })
}

pub fn parse_scm<S: Scalar>(text: &str) -> Result<Scm<S>, IoError> {
    Ok(validate(&parse_raw_scm(text)?)?)
}

pub fn read_scm<S: Scalar>(path: impl AsRef<Path>) -> Result<Scm<S>, IoError> {
    parse_scm(&read_text(path.as_ref())?)
}

/// Canonical JSON text for a model.
pub fn scm_to_string<S: Scalar>(scm: &Scm<S>) -> String {
    // serde_json::Value keeps object keys sorted.
    let value = serde_json::to_value(scm.to_raw()).expect("model serializes");
    let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
    text.push('\n');
    text
}

pub fn write_scm<S: Scalar>(scm: &Scm<S>, path: impl AsRef<Path>) -> Result<(), IoError> {
    write_text(path.as_ref(), &scm_to_string(scm))
}

pub fn dataset_to_string(dataset: &Dataset) -> String {
    let mut out = String::new();
    let p = &dataset.provenance;
    if let Some(source) = &p.source {
        out.push_str(&format!("# source: {source}\n"));
    }
    if let Some(model) = &p.model {
        out.push_str(&format!("# model: {model}\n"));
    }
    if let Some(seed) = p.seed {
        out.push_str(&format!("# seed: {seed}\n"));
    }
    out.push_str(&format!("# n: {}\n", dataset.rows.len()));
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(&dataset.columns).expect("in-memory write");
    for row in &dataset.rows {
        w.write_record(row.iter().map(|v| v.to_string())).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
    out
}

pub fn parse_dataset(text: &str) -> Result<Dataset, IoError> {
    let mut provenance = Provenance::default();
    let mut declared_n = None;
    let mut body_start = 0;
    let mut comment_lines = 0;
    for line in text.split_inclusive('\n') {
        let Some(comment) = line.strip_prefix('#') else { break };
        body_start += line.len();
        comment_lines += 1;
        let Some((key, value)) = comment.split_once(':') else { continue };
        let value = value.trim();
        let bad = |what: &str| IoError::Parse {
            line: comment_lines,
            column: 1,
            message: format!("bad provenance {what}: `{value}`"),
        };
        match key.trim() {
            "source" => provenance.source = Some(value.to_string()),
            "model" => provenance.model = Some(value.to_string()),
            "seed" => provenance.seed = Some(value.parse().map_err(|_| bad("seed"))?),
            "n" => declared_n = Some(value.parse::<usize>().map_err(|_| bad("n"))?),
            _ => {}
        }
    }
    let body = &text[body_start..];
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(body.as_bytes());
    let mut records = reader.records();
    let columns: Vec<String> = match records.next() {
        None => Vec::new(),
        Some(rec) => rec.map_err(|e| csv_error(e, comment_lines))?.iter().map(str::to_string).collect(),
    };
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_error(e, comment_lines))?;
        rows.push(rec.iter().map(Value::parse_token).collect::<Vec<_>>());
    }
    if let Some(n) = declared_n {
        if n != rows.len() {
            return Err(IoError::Parse {
                line: comment_lines + rows.len() + 1,
                column: 1,
                message: format!("provenance declares n = {n} but the file has {} rows", rows.len()),
            });
        }
    }
    provenance.n = rows.len();
    Ok(Dataset {
        columns,
        rows,
        provenance,
    })
}

fn csv_error(e: csv::Error, offset: usize) -> IoError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0) + offset;
    IoError::Parse {
        line,
        column: 1,
        message: e.to_string(),
    }
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset, IoError> {
    parse_dataset(&read_text(path.as_ref())?)
}

pub fn write_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), IoError> {
    write_text(path.as_ref(), &dataset_to_string(dataset))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"{
      "name": "tiny",
      "variables": [
        {"name": "A", "role": "exposure", "support": [0, 1], "parents": [],
         "noise": {"symbols": ["a0", "a1"], "probs": [0.5, 0.5]},
         "table": [{"parents": [], "noise": "a0", "value": 0}, {"parents": [], "noise": "a1", "value": 1}]},
        {"name": "M", "role": "mediator", "support": ["lo", "hi"], "parents": ["A"],
         "noise": {"symbols": ["u"], "probs": [1.0]},
         "table": [{"parents": [0], "noise": "u", "value": "lo"}, {"parents": [1], "noise": "u", "value": "hi"}]},
        {"name": "Y", "role": "outcome", "support": [0, 1], "parents": ["M"],
         "noise": {"symbols": ["u"], "probs": [1.0]},
         "table": [{"parents": ["lo"], "noise": "u", "value": 0}, {"parents": ["hi"], "noise": "u", "value": 1}]}
      ]
    }"#;

    #[test]
    fn round_trip_is_canonical() {
        let scm: Scm<f64> = parse_scm(TINY).unwrap();
        let text = scm_to_string(&scm);
        let again: Scm<f64> = parse_scm(&text).unwrap();
        assert_eq!(scm, again);
        assert_eq!(text, scm_to_string(&again));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_raw_scm("{\n  \"name\": ,\n}").unwrap_err();
        match err {
            IoError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_has_pointer() {
        let text = TINY.replace("\"parents\": [],\n         \"noise\"", "\"parents\": [], \"colour\": 1,\n         \"noise\"");
        let err = parse_raw_scm(&text).unwrap_err();
        assert!(matches!(err, IoError::Schema { .. }), "{err}");
        assert!(err.pointers()[0].starts_with("/variables/0"), "{err}");
    }

    #[test]
    fn bad_mass_pointer() {
        let text = TINY.replacen("[0.5, 0.5]", "[0.5, 0.4]", 1);
        let err = parse_scm::<f64>(&text).unwrap_err();
        assert!(err.pointers().contains(&"/variables/0/noise/probs"), "{err}");
    }

    #[test]
    fn dataset_round_trip() {
        let d = Dataset {
            columns: vec!["A".into(), "M".into(), "Y".into()],
            rows: vec![
                vec![Value::Int(1), Value::Sym("hi".into()), Value::Real(0.1)],
                vec![Value::Int(0), Value::Sym("a, b".into()), Value::Int(3)],
            ],
            provenance: Provenance {
                source: Some("tiny".into()),
                model: Some("models/tiny.json".into()),
                seed: Some(42),
                n: 2,
            },
        };
        let text = dataset_to_string(&d);
        assert!(text.starts_with("# source: tiny\n# model: models/tiny.json\n# seed: 42\n# n: 2\nA,M,Y\n"), "{text}");
        assert_eq!(parse_dataset(&text).unwrap(), d);
    }

    #[test]
    fn header_only_is_empty() {
        let d = parse_dataset("A,M,Y\n").unwrap();
        assert_eq!(d.columns.len(), 3);
        assert!(d.rows.is_empty());
        assert_eq!(d.provenance.n, 0);
    }

    #[test]
    fn ragged_row_is_parse_error() {
        let err = parse_dataset("# n: 2\nA,M\n1,2\n3\n").unwrap_err();
        assert!(matches!(err, IoError::Parse { .. }), "{err}");
    }
}
