//! On-disk formats.
//!
//! A tensor file is one UTF-8 JSON header line followed by the raw payload:
//!
//! ```text
//! {"dtype":"f32","shape":[2,3],"order":"row-major","endian":"little"}\n
//! <2*3*4 little-endian bytes>
//! ```
//!
//! The payload length must equal `element size * product(shape)` exactly.
//! Label files are CSV with one non-negative integer per line and an
//! optional `label` header. All writes go through a temporary file in the
//! target directory and an atomic rename.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Element, FeatureMatrix, SoftLabelMatrix};
use crate::zeta::WeightMatrix;

/// Upper bound on the header line, to fail fast on non-tensor input.
const MAX_HEADER: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    dtype: Dtype,
    shape: Vec<usize>,
    order: String,
    endian: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl TensorData {
    pub fn dtype(&self) -> Dtype {
        match self {
            TensorData::F32(_) => Dtype::F32,
            TensorData::F64(_) => Dtype::F64,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values widened to `f64`.
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            TensorData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::F64(v) => v.clone(),
        }
    }
}

/// A dense row-major tensor of any rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: TensorData,
}

pub trait TensorElement: Element {
    fn wrap(v: Vec<Self>) -> TensorData;
    fn unwrap(d: TensorData) -> Option<Vec<Self>>;
}

impl TensorElement for f32 {
    fn wrap(v: Vec<Self>) -> TensorData {
        TensorData::F32(v)
    }

    fn unwrap(d: TensorData) -> Option<Vec<Self>> {
        match d {
            TensorData::F32(v) => Some(v),
            TensorData::F64(_) => None,
        }
    }
}

impl TensorElement for f64 {
    fn wrap(v: Vec<Self>) -> TensorData {
        TensorData::F64(v)
    }

    fn unwrap(d: TensorData) -> Option<Vec<Self>> {
        match d {
            TensorData::F64(v) => Some(v),
            TensorData::F32(_) => None,
        }
    }
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: TensorData) -> Result<Self> {
        let expect = element_count(&shape)?;
        if expect != data.len() {
            return Err(Error::invalid(format!(
                "shape {shape:?} needs {expect} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn dtype(&self) -> Dtype {
        self.data.dtype()
    }

    pub fn into_data(self) -> TensorData {
        self.data
    }

    pub fn from_features<T: TensorElement>(m: &FeatureMatrix<T>) -> Self {
        Self {
            shape: vec![m.n(), m.d()],
            data: T::wrap(m.as_slice().to_vec()),
        }
    }

    pub fn from_soft_labels(m: &SoftLabelMatrix) -> Self {
        Self {
            shape: vec![m.n(), m.k()],
            data: TensorData::F64(m.as_slice().to_vec()),
        }
    }

    pub fn from_weights(w: &WeightMatrix) -> Self {
        Self {
            shape: vec![w.n_out(), w.n_in()],
            data: TensorData::F64(w.as_slice().to_vec()),
        }
    }

    /// `(rows, cols)` of a rank-2 tensor.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape[..] {
            [r, c] => Ok((r, c)),
            _ => Err(Error::invalid(format!(
                "expected a 2-D tensor, got shape {:?}",
                self.shape
            ))),
        }
    }

    /// Interprets a rank-2 tensor of element type `T` as a feature matrix.
    pub fn into_features<T: TensorElement>(self) -> Result<FeatureMatrix<T>> {
        let (n, d) = self.dims2()?;
        let dtype = self.dtype();
        let data = T::unwrap(self.data).ok_or_else(|| {
            Error::invalid(format!("tensor holds {dtype:?}, expected {}", T::DTYPE))
        })?;
        FeatureMatrix::new(n, d, data)
    }

    /// Rank-2 tensor as soft labels; `f32` payloads are widened.
    pub fn to_soft_labels(&self) -> Result<SoftLabelMatrix> {
        let (n, k) = self.dims2()?;
        SoftLabelMatrix::new(n, k, self.data.to_f64())
    }

    pub fn to_weights(&self) -> Result<WeightMatrix> {
        let (r, c) = self.dims2()?;
        WeightMatrix::new(r, c, self.data.to_f64())
    }
}

fn element_count(shape: &[usize]) -> Result<usize> {
    shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::invalid(format!("shape {shape:?} overflows")))
}

/// Serializes a tensor to its exact byte representation.
pub fn encode_tensor(t: &Tensor) -> Vec<u8> {
    let header = Header {
        dtype: t.dtype(),
        shape: t.shape.clone(),
        order: "row-major".into(),
        endian: "little".into(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    out.reserve(t.data.len() * t.dtype().size());
    match &t.data {
        TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    out
}

/// Parses a complete tensor file image.
pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor> {
    let search = &bytes[..bytes.len().min(MAX_HEADER)];
    let nl = search
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format(0, "no newline-terminated header found"))?;
    let header_text = std::str::from_utf8(&bytes[..nl])
        .map_err(|e| Error::format(e.valid_up_to() as u64, "header is not UTF-8"))?;
    let header: Header = serde_json::from_str(header_text).map_err(|e| {
        // serde_json columns are 1-based within the single header line
        Error::format(e.column().saturating_sub(1) as u64, format!("malformed header: {e}"))
    })?;
    if header.order != "row-major" {
        return Err(Error::format(0, format!("unsupported order {:?}", header.order)));
    }
    if header.endian != "little" {
        return Err(Error::format(0, format!("unsupported endianness {:?}", header.endian)));
    }
    let count = element_count(&header.shape).map_err(|e| Error::format(0, e.to_string()))?;
    let payload_start = nl + 1;
    let payload = &bytes[payload_start..];
    let expect = count
        .checked_mul(header.dtype.size())
        .ok_or_else(|| Error::format(0, "payload size overflows"))?;
    if payload.len() != expect {
        let offset = payload_start + payload.len().min(expect);
        return Err(Error::format(
            offset as u64,
            format!(
                "payload length mismatch: expected {expect} bytes, found {}",
                payload.len()
            ),
        ));
    }
    let data = match header.dtype {
        Dtype::F32 => TensorData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        Dtype::F64 => TensorData::F64(
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
    };
    Ok(Tensor {
        shape: header.shape,
        data,
    })
}

pub fn write_tensor(path: &Path, t: &Tensor) -> Result<()> {
    write_atomic(path, &encode_tensor(t))
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    decode_tensor(&fs::read(path)?)
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut s = String::with_capacity(labels.len() * 3 + 6);
    s.push_str("label\n");
    for l in labels {
        s.push_str(&l.to_string());
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}

pub fn parse_labels(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    let mut offset = 0u64;
    for (lineno, line) in text.split_inclusive('\n').enumerate() {
        let field = line.trim_end_matches(['\n', '\r']).trim();
        if !(field.is_empty() || (lineno == 0 && field == "label")) {
            let v = field.parse::<usize>().map_err(|_| {
                Error::format(
                    offset,
                    format!("line {}: {field:?} is not a non-negative integer", lineno + 1),
                )
            })?;
            out.push(v);
        }
        offset += line.len() as u64;
    }
    Ok(out)
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)?;
    parse_labels(&text)
}
