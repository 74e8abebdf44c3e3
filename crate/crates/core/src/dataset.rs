//! Sample collections and the per-mode projection `pr(𝒳; m)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::tensor::{check_dims, contract_raw, DenseTensor, FactorSet};

/// `N` sample tensors of one shape, stored back to back in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    dims: Vec<usize>,
    n: usize,
    data: Vec<f64>,
}

impl Samples {
    pub fn new(dims: Vec<usize>, n: usize, data: Vec<f64>) -> Result<Self> {
        let per = check_dims(&dims)?;
        if n == 0 {
            return Err(Error::Empty("samples"));
        }
        if data.len() != n * per {
            return Err(Error::LengthMismatch {
                expected: n * per,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("samples"));
        }
        Ok(Self { dims, n, data })
    }

    pub fn from_tensors(tensors: &[DenseTensor]) -> Result<Self> {
        let first = tensors.first().ok_or(Error::Empty("samples"))?;
        let dims = first.dims().to_vec();
        let mut data = Vec::with_capacity(tensors.len() * first.len());
        for t in tensors {
            if t.dims() != dims.as_slice() {
                return Err(Error::ShapeMismatch {
                    expected: dims,
                    found: t.dims().to_vec(),
                });
            }
            data.extend_from_slice(t.data());
        }
        Ok(Self {
            dims,
            n: tensors.len(),
            data,
        })
    }

    /// Per-sample shape `p₁ … p_M`.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sample_len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        let s = self.sample_len();
        &self.data[i * s..(i + 1) * s]
    }

    pub fn tensor(&self, i: usize) -> DenseTensor {
        DenseTensor::from_parts_unchecked(self.dims.clone(), self.sample(i).to_vec())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            dims: self.dims.clone(),
            n: self.n,
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    /// Samples at the given indices, in that order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(Error::Empty("sample selection"));
        }
        let mut data = Vec::with_capacity(idx.len() * self.sample_len());
        for &i in idx {
            if i >= self.n {
                return Err(Error::invalid("index", format!("{i} >= {}", self.n)));
            }
            data.extend_from_slice(self.sample(i));
        }
        Ok(Self {
            dims: self.dims.clone(),
            n: idx.len(),
            data,
        })
    }

    pub(crate) fn check_factors(&self, f: &FactorSet) -> Result<()> {
        let fd = f.dims();
        if fd != self.dims {
            return Err(Error::ShapeMismatch {
                expected: self.dims.clone(),
                found: fd,
            });
        }
        Ok(())
    }
}

/// Samples paired with their scalar responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Samples,
    responses: Vec<f64>,
}

impl Dataset {
    pub fn new(samples: Samples, responses: Vec<f64>) -> Result<Self> {
        if responses.len() != samples.len() {
            return Err(Error::LengthMismatch {
                expected: samples.len(),
                found: responses.len(),
            });
        }
        if responses.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("responses"));
        }
        Ok(Self { samples, responses })
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dims(&self) -> &[usize] {
        self.samples.dims()
    }

    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        Ok(Self {
            samples: self.samples.select(idx)?,
            responses: idx.iter().map(|&i| self.responses[i]).collect(),
        })
    }

    pub fn into_parts(self) -> (Samples, Vec<f64>) {
        (self.samples, self.responses)
    }
}

/// Contracts one sample against every factor except `mode`, in ascending
/// mode order, leaving a vector of length `p_mode`.
pub(crate) fn project_sample(sample: &[f64], dims: &[usize], f: &FactorSet, mode: usize) -> Vec<f64> {
    let mut cur_dims = dims.to_vec();
    let mut cur: Option<Vec<f64>> = None;
    let mut removed = 0;
    for m in (0..dims.len()).filter(|&m| m != mode) {
        // modes below m are gone, so m now sits `removed` slots to the left
        let pos = m - removed;
        let src = cur.as_deref().unwrap_or(sample);
        let next = contract_raw(src, &cur_dims, f.factor(m), pos);
        cur_dims.remove(pos);
        cur = Some(next);
        removed += 1;
    }
    cur.unwrap_or_else(|| sample.to_vec())
}

/// Contracts one sample against all factors, i.e. `⟨w¹∘…∘w^M, 𝒳⟩`.
pub(crate) fn contract_all(sample: &[f64], dims: &[usize], f: &FactorSet) -> f64 {
    let mut cur_dims = dims.to_vec();
    let mut cur: Option<Vec<f64>> = None;
    for m in 0..dims.len() {
        let src = cur.as_deref().unwrap_or(sample);
        let next = contract_raw(src, &cur_dims, f.factor(m), 0);
        cur_dims.remove(0);
        cur = Some(next);
    }
    cur.map_or(0.0, |v| v[0])
}

/// The `N × p_mode` matrix whose row `i` is sample `i` contracted against all
/// factors but the one for `mode`.
///
/// Rows are computed in parallel; each row is independent so the result is
/// the same for any thread count.
pub fn projection(samples: &Samples, f: &FactorSet, mode: usize) -> Result<Matrix> {
    samples.check_factors(f)?;
    if mode >= samples.order() {
        return Err(Error::ModeOutOfRange {
            mode,
            order: samples.order(),
        });
    }
    let p = samples.dims[mode];
    let mut out = Matrix::zeros(samples.len(), p);
    let per = samples.sample_len();
    out.data_mut()
        .par_chunks_mut(p)
        .zip(samples.data.par_chunks(per))
        .for_each(|(row, x)| {
            row.copy_from_slice(&project_sample(x, &samples.dims, f, mode));
        });
    Ok(out)
}
