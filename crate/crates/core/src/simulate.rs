//! Synthetic unit-rank regression problems.
//!
//! Generation order on a single [`NormalRng`] stream seeded by `spec.seed`:
//!
//! 1. for each mode `m`: `p_m` standard normals, then `⌊s·p_m/100⌋` positions
//!    chosen uniformly without replacement and set to zero;
//! 2. `N · ∏p_m` standard normals filling the samples in row-major order;
//! 3. `N` standard normals `εᵢ`, with `yᵢ = ⟨𝒲*, 𝒳ᵢ⟩ + α εᵢ`.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Samples};
use crate::error::{Error, Result};
use crate::rng::NormalRng;
use crate::tensor::{check_dims, dot, outer_product, DenseTensor, FactorSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub dims: Vec<usize>,
    pub n_samples: usize,
    /// Percentage of entries of each factor forced to zero.
    pub sparsity_pct: f64,
    /// Noise scale α.
    pub noise_alpha: f64,
    pub seed: u64,
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        check_dims(&self.dims)?;
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples", "must be >= 1"));
        }
        if !(0.0..=100.0).contains(&self.sparsity_pct) {
            return Err(Error::invalid("sparsity_pct", "must lie in [0, 100]"));
        }
        if !(self.noise_alpha >= 0.0) || !self.noise_alpha.is_finite() {
            return Err(Error::invalid("noise_alpha", "must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub dataset: Dataset,
    pub true_factors: FactorSet,
    pub true_tensor: DenseTensor,
}

/// Number of zeroed entries in a factor of length `p`.
pub fn zero_count(p: usize, sparsity_pct: f64) -> usize {
    ((sparsity_pct * p as f64) / 100.0).floor().min(p as f64) as usize
}

pub fn gen_factors(dims: &[usize], sparsity_pct: f64, rng: &mut NormalRng) -> Result<FactorSet> {
    check_dims(dims)?;
    if !(0.0..=100.0).contains(&sparsity_pct) {
        return Err(Error::invalid("sparsity_pct", "must lie in [0, 100]"));
    }
    let factors = dims
        .iter()
        .map(|&p| {
            let mut w = rng.normal_vec(p);
            let k = zero_count(p, sparsity_pct);
            for i in index::sample(rng.inner(), p, k) {
                w[i] = 0.0;
            }
            w
        })
        .collect();
    FactorSet::new(factors)
}

pub fn gen_dataset(spec: &SimSpec) -> Result<SimOutput> {
    spec.validate()?;
    let mut rng = NormalRng::seed_from_u64(spec.seed);
    let true_factors = gen_factors(&spec.dims, spec.sparsity_pct, &mut rng)?;
    let true_tensor = outer_product(&true_factors);

    let per = true_tensor.len();
    let n = spec.n_samples;
    let samples = Samples::new(spec.dims.clone(), n, rng.normal_vec(n * per))?;
    let noise = rng.normal_vec(n);
    let responses = (0..n)
        .map(|i| dot(true_tensor.data(), samples.sample(i)) + spec.noise_alpha * noise[i])
        .collect();

    Ok(SimOutput {
        dataset: Dataset::new(samples, responses)?,
        true_factors,
        true_tensor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{frobenius_norm, inner_product};

    fn spec(dims: Vec<usize>, n: usize, s: f64, alpha: f64, seed: u64) -> SimSpec {
        SimSpec {
            dims,
            n_samples: n,
            sparsity_pct: s,
            noise_alpha: alpha,
            seed,
        }
    }

    #[test]
    fn sparsity_levels() {
        let mut rng = NormalRng::seed_from_u64(3);
        let f = gen_factors(&[10, 7], 0.0, &mut rng).unwrap();
        assert_eq!(f.factors().iter().flatten().filter(|v| **v == 0.0).count(), 0);

        let f = gen_factors(&[10, 7], 100.0, &mut rng).unwrap();
        assert!(f.factors().iter().flatten().all(|v| *v == 0.0));

        let f = gen_factors(&[10], 20.0, &mut rng).unwrap();
        assert_eq!(f.factor(0).iter().filter(|v| **v == 0.0).count(), 2);
    }

    #[test]
    fn zero_count_floors() {
        assert_eq!(zero_count(10, 20.0), 2);
        assert_eq!(zero_count(7, 20.0), 1);
        assert_eq!(zero_count(4, 20.0), 0);
        assert_eq!(zero_count(5, 100.0), 5);
    }

    #[test]
    fn noiseless_responses_are_exact_inner_products() {
        let out = gen_dataset(&spec(vec![3, 4, 2], 15, 20.0, 0.0, 8)).unwrap();
        assert_eq!(out.true_tensor, outer_product(&out.true_factors));
        let s = out.dataset.samples();
        for i in 0..s.len() {
            let want = inner_product(&out.true_tensor, &s.tensor(i)).unwrap();
            assert_eq!(out.dataset.responses()[i], want);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let sp = spec(vec![4, 4], 9, 20.0, 0.1, 77);
        assert_eq!(gen_dataset(&sp).unwrap(), gen_dataset(&sp).unwrap());
        let other = spec(vec![4, 4], 9, 20.0, 0.1, 78);
        assert_ne!(gen_dataset(&sp).unwrap(), gen_dataset(&other).unwrap());
    }

    #[test]
    fn response_mean_within_envelope() {
        let sp = spec(vec![5, 5, 5], 100, 20.0, 0.1, 21);
        let out = gen_dataset(&sp).unwrap();
        let y = out.dataset.responses();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        // y ~ N(0, ‖𝒲*‖² + α²) given 𝒲*
        let pop_std = (frobenius_norm(&out.true_tensor).powi(2) + 0.01).sqrt();
        assert!(mean.abs() <= 4.0 * pop_std / (y.len() as f64).sqrt());
    }

    #[test]
    fn true_tensor_at_least_as_sparse_as_factors() {
        let out = gen_dataset(&spec(vec![10, 10, 5], 2, 20.0, 0.0, 4)).unwrap();
        let zero_frac = |v: &[f64]| v.iter().filter(|x| **x == 0.0).count() as f64 / v.len() as f64;
        let t = zero_frac(out.true_tensor.data());
        for f in out.true_factors.factors() {
            assert!(t >= zero_frac(f));
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(gen_dataset(&spec(vec![3], 5, 101.0, 0.0, 1)).is_err());
        assert!(gen_dataset(&spec(vec![3], 0, 10.0, 0.0, 1)).is_err());
        assert!(gen_dataset(&spec(vec![3, 0], 5, 10.0, 0.0, 1)).is_err());
        assert!(gen_dataset(&spec(vec![3], 5, 10.0, -1.0, 1)).is_err());
    }
}
