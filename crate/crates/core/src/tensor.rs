//! Dense M-mode tensors and the unit-rank factor representation.
//!
//! Storage is row-major: the last index varies fastest. Modes are 0-based
//! throughout the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real tensor of order `dims.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

pub(crate) fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidShape(dims.to_vec()));
    }
    Ok(dims.iter().product())
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = check_dims(&dims)?;
        if data.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tensor data"));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = check_dims(&dims)?;
        Ok(Self {
            dims,
            data: vec![0.0; len],
        })
    }

    /// Caller guarantees the invariants.
    pub(crate) fn from_parts_unchecked(dims: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Self { dims, data }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Flat offset of a multi-index.
    pub fn offset(&self, idx: &[usize]) -> Option<usize> {
        if idx.len() != self.dims.len() {
            return None;
        }
        let mut off = 0;
        for (&i, &d) in idx.iter().zip(&self.dims) {
            if i >= d {
                return None;
            }
            off = off * d + i;
        }
        Some(off)
    }

    pub fn get(&self, idx: &[usize]) -> Option<f64> {
        self.offset(idx).map(|o| self.data[o])
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            dims: self.dims.clone(),
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    /// Number of entries that are not exactly zero.
    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }
}

/// The component vectors of a unit-rank tensor, one per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct FactorSet {
    factors: Vec<Vec<f64>>,
}

impl FactorSet {
    pub fn new(factors: Vec<Vec<f64>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Empty("factor set"));
        }
        if factors.iter().any(|f| f.is_empty()) {
            let dims = factors.iter().map(Vec::len).collect();
            return Err(Error::InvalidShape(dims));
        }
        if factors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("factor"));
        }
        Ok(Self { factors })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        Ok(Self {
            factors: dims.iter().map(|&d| vec![0.0; d]).collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(Vec::len).collect()
    }

    pub fn factor(&self, mode: usize) -> &[f64] {
        &self.factors[mode]
    }

    pub fn factors(&self) -> &[Vec<f64>] {
        &self.factors
    }

    pub(crate) fn set_factor(&mut self, mode: usize, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.factors[mode].len());
        self.factors[mode] = values;
    }

    pub(crate) fn factors_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.factors
    }

    pub fn into_inner(self) -> Vec<Vec<f64>> {
        self.factors
    }

    pub fn is_zero(&self) -> bool {
        self.factors.iter().any(|f| f.iter().all(|v| *v == 0.0))
    }
}

impl TryFrom<Vec<Vec<f64>>> for FactorSet {
    type Error = Error;

    fn try_from(value: Vec<Vec<f64>>) -> Result<Self> {
        FactorSet::new(value)
    }
}

impl From<FactorSet> for Vec<Vec<f64>> {
    fn from(value: FactorSet) -> Self {
        value.factors
    }
}

/// Sum of elementwise products of two same-shape tensors.
pub fn inner_product(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    if a.dims != b.dims {
        return Err(Error::ShapeMismatch {
            expected: a.dims.clone(),
            found: b.dims.clone(),
        });
    }
    Ok(dot(&a.data, &b.data))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Materializes `w¹ ∘ w² ∘ … ∘ w^M`.
pub fn outer_product(f: &FactorSet) -> DenseTensor {
    let dims = f.dims();
    let mut data = vec![1.0];
    for factor in &f.factors {
        let mut next = Vec::with_capacity(data.len() * factor.len());
        for &a in &data {
            next.extend(factor.iter().map(|&b| a * b));
        }
        data = next;
    }
    DenseTensor::from_parts_unchecked(dims, data)
}

/// Contracts the row-major buffer `data` (shape `dims`) with `v` along `mode`.
///
/// Returns the reduced buffer; for a 1-mode input this is a single value.
pub(crate) fn contract_raw(data: &[f64], dims: &[usize], v: &[f64], mode: usize) -> Vec<f64> {
    let outer: usize = dims[..mode].iter().product();
    let len = dims[mode];
    let inner: usize = dims[mode + 1..].iter().product();
    let mut out = vec![0.0; outer * inner];
    for o in 0..outer {
        let dst = &mut out[o * inner..(o + 1) * inner];
        for (j, &vj) in v.iter().enumerate() {
            let base = (o * len + j) * inner;
            let src = &data[base..base + inner];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s * vj;
            }
        }
    }
    out
}

/// Mode-`mode` tensor-times-vector product, dropping that mode.
///
/// Contracting a 1-mode tensor yields a 1-element tensor.
pub fn mode_contract(t: &DenseTensor, v: &[f64], mode: usize) -> Result<DenseTensor> {
    if mode >= t.order() {
        return Err(Error::ModeOutOfRange {
            mode,
            order: t.order(),
        });
    }
    if v.len() != t.dims[mode] {
        return Err(Error::LengthMismatch {
            expected: t.dims[mode],
            found: v.len(),
        });
    }
    let data = contract_raw(&t.data, &t.dims, v, mode);
    let mut dims = t.dims.clone();
    dims.remove(mode);
    if dims.is_empty() {
        dims.push(1);
    }
    Ok(DenseTensor::from_parts_unchecked(dims, data))
}

pub fn frobenius_norm(t: &DenseTensor) -> f64 {
    norm2(&t.data)
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖a − b‖_F` without allocating the difference.
pub fn frobenius_distance(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    if a.dims != b.dims {
        return Err(Error::ShapeMismatch {
            expected: a.dims.clone(),
            found: b.dims.clone(),
        });
    }
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}
