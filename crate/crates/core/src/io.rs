//! Readers and writers for the JSONL / JSON / CSV artifacts.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};

/// Serializes a float as a JSON number with exactly six decimals.
pub fn six_decimals<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    let raw = RawValue::from_string(fmt6(*x)).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

pub fn fmt6(x: f64) -> String {
    // Avoid "-0.000000".
    let v = if x == 0.0 { 0.0 } else { x };
    format!("{v:.6}")
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Record {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::io(path, e.into()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Record {
        path: path.to_owned(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Writes a header and rows of pre-formatted cells.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_owned(),
        line: e.position().map(|p| p.line()).unwrap_or(0),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, serde::Deserialize, Debug, PartialEq)]
    struct Rec {
        #[serde(serialize_with = "six_decimals")]
        x: f64,
    }

    #[test]
    fn six_decimal_numbers() {
        assert_eq!(serde_json::to_string(&Rec { x: 1.0 }).unwrap(), r#"{"x":1.000000}"#);
        assert_eq!(serde_json::to_string(&Rec { x: 2.0 / 3.0 }).unwrap(), r#"{"x":0.666667}"#);
        assert_eq!(fmt6(-0.0), "0.000000");
    }

    #[test]
    fn jsonl_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.jsonl");
        write_jsonl(&p, &[Rec { x: 0.5 }, Rec { x: 0.25 }]).unwrap();
        let back: Vec<Rec> = read_jsonl(&p).unwrap();
        assert_eq!(back, [Rec { x: 0.5 }, Rec { x: 0.25 }]);

        std::fs::write(&p, "{\"x\":1}\nnot json\n").unwrap();
        let err = read_jsonl::<Rec>(&p).unwrap_err();
        assert!(matches!(err, Error::Record { line: 2, .. }));
    }
}
