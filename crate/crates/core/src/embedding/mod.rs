//! Per-object embedding tables.
//!
//! File format, UTF-8, `→` standing for a tab:
//!
//! ```text
//! #dim=3→encoder=bert-base
//! dog→0.1 -0.25 3
//! wedding ring→1e-3 0 0.5
//! ```
//!
//! Extra `key=value` header fields (such as `pooling=cls`) are kept as metadata.

mod pca;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use pca::{apply_pca, fit_pca, PcaProjection};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub encoder_name: String,
    pub dim: usize,
    /// Header fields other than `dim` and `encoder`.
    pub metadata: BTreeMap<String, String>,
    entries: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(encoder_name: impl Into<String>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "embedding dimension must be positive".into(),
            ));
        }
        Ok(EmbeddingTable {
            encoder_name: encoder_name.into(),
            dim,
            metadata: BTreeMap::new(),
            entries: BTreeMap::new(),
        })
    }

    /// Adds a vector, rejecting duplicates, wrong lengths and non-finite values.
    pub fn insert(&mut self, object: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let object = object.into();
        if vector.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding vector"));
        }
        if self.entries.contains_key(&object) {
            return Err(Error::InvalidArgument(format!(
                "duplicate object {object:?}"
            )));
        }
        self.entries.insert(object, vector);
        Ok(())
    }

    pub fn get(&self, object: &str) -> Option<&[f64]> {
        self.entries.get(object).map(Vec::as_slice)
    }

    pub fn contains(&self, object: &str) -> bool {
        self.entries.contains_key(object)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries sorted by object name.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Stacks the vectors of `objects` as rows. Every object must be present.
    pub fn matrix<S: AsRef<str>>(&self, objects: &[S]) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(objects.len(), self.dim);
        for (i, o) in objects.iter().enumerate() {
            let v = self.get(o.as_ref()).ok_or_else(|| {
                Error::InvalidArgument(format!("no embedding for {:?}", o.as_ref()))
            })?;
            m.row_mut(i).copy_from_slice(v);
        }
        Ok(m)
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(line) => line?,
            None => {
                return Err(Error::Parse {
                    line: 1,
                    message: "missing header".into(),
                })
            }
        };
        let mut table = parse_header(header.trim_end_matches('\r'))
            .map_err(|message| Error::Parse { line: 1, message })?;
        let mut first_seen: BTreeMap<String, usize> = BTreeMap::new();

        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let (object, values) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected object<TAB>values".into()))?;
            if object.is_empty() {
                return Err(parse_err("empty object name".into()));
            }
            let vector = values
                .split_ascii_whitespace()
                .map(|tok| match tok.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    Ok(_) => Err(parse_err(format!("non-finite value {tok:?}"))),
                    Err(_) => Err(parse_err(format!("bad number {tok:?}"))),
                })
                .collect::<Result<Vec<f64>>>()?;
            if vector.len() != table.dim {
                return Err(parse_err(format!(
                    "expected {} values, found {}",
                    table.dim,
                    vector.len()
                )));
            }
            if let Some(&first_line) = first_seen.get(object) {
                return Err(Error::DuplicateObject {
                    object: object.to_string(),
                    line: line_no,
                    first_line,
                });
            }
            first_seen.insert(object.to_string(), line_no);
            table.entries.insert(object.to_string(), vector);
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }

    /// Writes the table; floats use the shortest representation that parses
    /// back to the same value.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "#dim={}\tencoder={}", self.dim, self.encoder_name)?;
        for (k, v) in &self.metadata {
            write!(out, "\t{k}={v}")?;
        }
        writeln!(out)?;
        for (object, vector) in &self.entries {
            out.write_all(object.as_bytes())?;
            out.write_all(b"\t")?;
            for (i, v) in vector.iter().enumerate() {
                if i > 0 {
                    out.write_all(b" ")?;
                }
                write!(out, "{v}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Reads an embedding file from disk.
pub fn load_table(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    EmbeddingTable::load(path)
}

fn parse_header(line: &str) -> std::result::Result<EmbeddingTable, String> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| "header must start with '#'".to_string())?;
    let mut dim = None;
    let mut encoder = None;
    let mut metadata = BTreeMap::new();
    for field in body.split('\t') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| format!("header field {field:?} is not key=value"))?;
        match key {
            "dim" => {
                let d: usize = value
                    .parse()
                    .map_err(|_| format!("bad dimension {value:?}"))?;
                if d == 0 {
                    return Err("dimension must be positive".into());
                }
                dim = Some(d);
            }
            "encoder" => encoder = Some(value.to_string()),
            _ => {
                metadata.insert(key.to_string(), value.to_string());
            }
        }
    }
    let mut table = EmbeddingTable::new(
        encoder.ok_or("header lacks encoder=")?,
        dim.ok_or("header lacks dim=")?,
    )
    .map_err(|e| e.to_string())?;
    table.metadata = metadata;
    Ok(table)
}
