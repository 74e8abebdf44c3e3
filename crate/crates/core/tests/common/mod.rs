//! Brute-force reference implementations shared by the integration tests.
//! They index through explicit multi-indices and never call the library's
//! kernels.

#![allow(dead_code)]

use fastr::{Dataset, DenseTensor, FactorSet, Matrix, Samples};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Multi-index of flat position `k` under row-major `dims`.
pub fn unravel(mut k: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for m in (0..dims.len()).rev() {
        idx[m] = k % dims[m];
        k /= dims[m];
    }
    idx
}

pub fn ravel(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (i, d)| acc * d + i)
}

pub fn contract_oracle(t: &DenseTensor, v: &[f64], mode: usize) -> (Vec<usize>, Vec<f64>) {
    let dims = t.dims();
    let mut out_dims: Vec<usize> = dims.to_vec();
    out_dims.remove(mode);
    if out_dims.is_empty() {
        out_dims.push(1);
    }
    let mut out = vec![0.0; out_dims.iter().product()];
    for k in 0..t.len() {
        let mut idx = unravel(k, dims);
        let j = idx.remove(mode);
        let o = if idx.is_empty() { 0 } else { ravel(&idx, &out_dims) };
        out[o] += t.data()[k] * v[j];
    }
    (out_dims, out)
}

/// Row `i`: `Σ_{idx: idx[mode]=j} 𝒳ᵢ[idx] ∏_{m≠mode} f_m[idx_m]`.
pub fn projection_oracle(samples: &Samples, f: &FactorSet, mode: usize) -> Vec<Vec<f64>> {
    let dims = samples.dims();
    (0..samples.len())
        .map(|i| {
            let x = samples.sample(i);
            let mut row = vec![0.0; dims[mode]];
            for (k, xv) in x.iter().enumerate() {
                let idx = unravel(k, dims);
                let mut w = *xv;
                for (m, &im) in idx.iter().enumerate() {
                    if m != mode {
                        w *= f.factor(m)[im];
                    }
                }
                row[idx[mode]] += w;
            }
            row
        })
        .collect()
}

/// Gaussian elimination with partial pivoting on `(PᵀP + εI) x = Pᵀy`.
pub fn ridge_oracle(p: &[Vec<f64>], y: &[f64], eps: f64) -> Vec<f64> {
    let cols = p.first().map_or(0, Vec::len);
    let mut a = vec![vec![0.0; cols + 1]; cols];
    for r in 0..cols {
        for c in 0..cols {
            a[r][c] = p.iter().map(|row| row[r] * row[c]).sum::<f64>();
        }
        a[r][r] += eps;
        a[r][cols] = p.iter().zip(y).map(|(row, yi)| row[r] * yi).sum::<f64>();
    }
    for col in 0..cols {
        let piv = (col..cols)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for r in col + 1..cols {
            let f = a[r][col] / a[col][col];
            for c in col..=cols {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut x = vec![0.0; cols];
    for r in (0..cols).rev() {
        let s: f64 = (r + 1..cols).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][cols] - s) / a[r][r];
    }
    x
}

pub fn shrink_oracle(u: &[f64], lambda: f64) -> Vec<f64> {
    u.iter()
        .map(|&v| {
            if v > lambda {
                v - lambda
            } else if v < -lambda {
                v + lambda
            } else {
                0.0
            }
        })
        .collect()
}

pub fn update_oracle(data: &Dataset, f: &FactorSet, mode: usize, lambda: f64, eps: f64) -> Vec<f64> {
    let p = projection_oracle(data.samples(), f, mode);
    shrink_oracle(&ridge_oracle(&p, data.responses(), eps), lambda)
}

pub fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn max_abs_dev(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// A random small problem: order 1–4, dims 1–6, N 1–30, entries in [-1, 1].
pub struct Instance {
    pub data: Dataset,
    pub factors: FactorSet,
    pub tensor: DenseTensor,
    pub vector: Vec<f64>,
    pub mode: usize,
    pub lambda: f64,
    pub epsilon: f64,
}

pub fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = rng.gen_range(1..=4);
    let dims: Vec<usize> = (0..order).map(|_| rng.gen_range(1..=6)).collect();
    let n = rng.gen_range(1..=30);
    let per: usize = dims.iter().product();
    let mut draw = |k: usize| -> Vec<f64> { (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    let samples = Samples::new(dims.clone(), n, draw(n * per)).unwrap();
    let responses = draw(n);
    let factors = FactorSet::new(dims.iter().map(|&d| draw(d)).collect()).unwrap();
    let tensor = DenseTensor::new(dims.clone(), draw(per)).unwrap();
    let mode = (seed as usize) % order;
    let vector = draw(dims[mode]);
    let lambda = draw(1)[0].abs() * 0.5;
    let epsilon = 1e-2 + draw(1)[0].abs();
    Instance {
        data: Dataset::new(samples, responses).unwrap(),
        factors,
        tensor,
        vector,
        mode,
        lambda,
        epsilon,
    }
}
