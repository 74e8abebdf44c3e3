//! On-disk formats.
//!
//! # Tensor files (`.ftrt`)
//!
//! ```text
//! offset  size      content
//! 0       4         magic "FTRT"
//! 4       4         version, u32 LE (= 1)
//! 8       4         order M, u32 LE
//! 12      8·M       dims, u64 LE each
//! ..      8·∏dims   values, f64 LE, row-major (last index fastest)
//! ```
//!
//! A sample file is a tensor file whose leading dimension is the sample
//! count `N`.
//!
//! # Model files
//!
//! JSON with fields `format` (`"fastr-model"`), `version` (1), `order`,
//! `dims`, `factors`, `config`, `iterations`, `converged` and
//! `rel_change_trace`. Floats are printed in shortest round-trip form, so
//! factors read back bit for bit. Non-finite trace entries are written as
//! the strings `"inf"`, `"-inf"` or `"nan"`.
//!
//! # CSV
//!
//! UTF-8, comma separated, one header row. Vectors (responses,
//! predictions) are a single column.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::Samples;
use crate::error::{Error, Result};
use crate::estimator::{FitConfig, FitReport};
use crate::tensor::{DenseTensor, FactorSet};

pub const TENSOR_MAGIC: &[u8; 4] = b"FTRT";
pub const TENSOR_VERSION: u32 = 1;
pub const MODEL_FORMAT: &str = "fastr-model";
pub const MODEL_VERSION: u32 = 1;

pub fn encode_tensor(dims: &[usize], values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * dims.len() + 8 * values.len());
    out.extend_from_slice(TENSOR_MAGIC);
    out.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses a tensor file into `(dims, values)`.
pub fn decode_tensor(bytes: &[u8]) -> Result<(Vec<usize>, Vec<f64>)> {
    let fmt = |m: &str| Error::Format(m.to_string());
    if bytes.len() < 12 || &bytes[..4] != TENSOR_MAGIC {
        return Err(fmt("missing FTRT magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != TENSOR_VERSION {
        return Err(Error::Format(format!("unsupported FTRT version {version}")));
    }
    let order = u32_at(8) as usize;
    if order == 0 {
        return Err(fmt("tensor order must be >= 1"));
    }
    let header = order
        .checked_mul(8)
        .and_then(|d| d.checked_add(12))
        .ok_or_else(|| fmt("header size overflow"))?;
    if bytes.len() < header {
        return Err(fmt("truncated dims"));
    }
    let mut dims = Vec::with_capacity(order);
    let mut count: usize = 1;
    for m in 0..order {
        let o = 12 + 8 * m;
        let d = u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let d = usize::try_from(d).map_err(|_| fmt("dim too large"))?;
        if d == 0 {
            return Err(fmt("zero-length dim"));
        }
        count = count.checked_mul(d).ok_or_else(|| fmt("element count overflow"))?;
        dims.push(d);
    }
    let body = &bytes[header..];
    if Some(body.len()) != count.checked_mul(8) {
        return Err(Error::Format(format!(
            "expected {count} values, found {} bytes of data",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((dims, values))
}

pub fn write_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    fs::write(path, encode_tensor(t.dims(), t.data()))?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let (dims, values) = decode_tensor(&fs::read(path)?)?;
    DenseTensor::new(dims, values)
}

pub fn write_samples(path: impl AsRef<Path>, s: &Samples) -> Result<()> {
    let mut dims = vec![s.len()];
    dims.extend_from_slice(s.dims());
    fs::write(path, encode_tensor(&dims, s.data()))?;
    Ok(())
}

pub fn read_samples(path: impl AsRef<Path>) -> Result<Samples> {
    let (dims, values) = decode_tensor(&fs::read(path)?)?;
    if dims.len() < 2 {
        return Err(Error::Format(
            "sample file needs a sample-count dim plus at least one tensor dim".into(),
        ));
    }
    Samples::new(dims[1..].to_vec(), dims[0], values)
}

/// Writes `values` as a one-column CSV under `header`.
pub fn write_column(path: impl AsRef<Path>, header: &str, values: &[f64]) -> Result<()> {
    let mut out = String::with_capacity(header.len() + 1 + values.len() * 20);
    out.push_str(header);
    out.push('\n');
    for v in values {
        out.push_str(&v.to_string());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a one-column CSV of numbers. A non-numeric first line is taken as
/// the header; blank lines are skipped.
pub fn read_column(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut values = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let field = line.trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) => {
                return Err(Error::Format(format!(
                    "line {}: non-finite value",
                    lineno + 1
                )))
            }
            Err(_) if lineno == 0 => {}
            Err(_) => {
                return Err(Error::Format(format!(
                    "line {}: cannot parse {field:?} as a number",
                    lineno + 1
                )))
            }
        }
    }
    Ok(values)
}

/// CSV with a header row; each record is written with `Display`.
pub fn write_csv<R, F>(path: impl AsRef<Path>, header: &[&str], rows: R) -> Result<()>
where
    R: IntoIterator<Item = F>,
    F: IntoIterator,
    F::Item: std::fmt::Display,
{
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let fields: Vec<String> = row.into_iter().map(|f| f.to_string()).collect();
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// A fitted model as persisted on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub report: FitReport,
    pub config: FitConfig,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    order: usize,
    dims: Vec<usize>,
    factors: Vec<Vec<f64>>,
    config: FitConfig,
    iterations: usize,
    converged: bool,
    #[serde(serialize_with = "ser_trace", deserialize_with = "de_trace")]
    rel_change_trace: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TraceEntry {
    Num(f64),
    Str(String),
}

fn ser_trace<S: Serializer>(trace: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let entries: Vec<TraceEntry> = trace
        .iter()
        .map(|&v| {
            if v.is_finite() {
                TraceEntry::Num(v)
            } else if v.is_nan() {
                TraceEntry::Str("nan".into())
            } else if v > 0.0 {
                TraceEntry::Str("inf".into())
            } else {
                TraceEntry::Str("-inf".into())
            }
        })
        .collect();
    entries.serialize(s)
}

fn de_trace<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let entries = Vec::<TraceEntry>::deserialize(d)?;
    entries
        .into_iter()
        .map(|e| match e {
            TraceEntry::Num(v) => Ok(v),
            TraceEntry::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!(
                    "bad trace entry {other:?}"
                ))),
            },
        })
        .collect()
}

impl Model {
    pub fn new(report: FitReport, config: FitConfig) -> Self {
        Self { report, config }
    }

    pub fn factors(&self) -> &FactorSet {
        &self.report.factors
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            order: self.report.factors.order(),
            dims: self.report.factors.dims(),
            factors: self.report.factors.factors().to_vec(),
            config: self.config,
            iterations: self.report.iterations,
            converged: self.report.converged,
            rel_change_trace: self.report.rel_change_trace.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Format(format!("not a model file: {:?}", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported model version {}",
                file.version
            )));
        }
        let factors = FactorSet::new(file.factors)?;
        if factors.order() != file.order || factors.dims() != file.dims {
            return Err(Error::Format(
                "model dims disagree with factor lengths".into(),
            ));
        }
        if file.rel_change_trace.len() != file.iterations {
            return Err(Error::Format("trace length differs from iterations".into()));
        }
        Ok(Self {
            report: FitReport {
                factors,
                iterations: file.iterations,
                rel_change_trace: file.rel_change_trace,
                converged: file.converged,
            },
            config: file.config,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
