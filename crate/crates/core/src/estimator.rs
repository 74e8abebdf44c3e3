//! Closed-form component updates and the alternating fit loop.
//!
//! Each component `w^m` is re-estimated with the other factors held fixed:
//!
//! ```text
//! P      = pr(𝒳; m)                      (N × p_m projection)
//! w^m  ← S_λ((PᵀP + εI)⁻¹ Pᵀ y)
//! ```
//!
//! Modes are swept in ascending order, each update seeing the latest values
//! of the others. The loop stops once `‖𝒲ᵗ − 𝒲ᵗ⁻¹‖_F / ‖𝒲ᵗ⁻¹‖_F ≤ tol` or
//! after `max_iter` sweeps.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{contract_all, projection, Dataset, Samples};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, normal_equations, Matrix};
use crate::rng::NormalRng;
use crate::tensor::{frobenius_distance, frobenius_norm, norm2, outer_product, FactorSet};

pub const DEFAULT_MAX_ITER: usize = 1000;
pub const DEFAULT_TOL: f64 = 1e-3;

/// Initial factors with sup-norm below this are redrawn.
const INIT_MIN_SUP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Soft-threshold level λ.
    pub lambda: f64,
    /// Ridge perturbation ε added to the diagonal of `PᵀP`.
    pub epsilon: f64,
    pub max_iter: usize,
    /// Relative Frobenius change that ends the loop.
    pub tol: f64,
    /// Seed for the factor initialization.
    pub seed: u64,
    /// Rescale factors to equal ℓ₂ norm after every sweep (product unchanged).
    #[serde(default)]
    pub balance: bool,
}

impl FitConfig {
    pub fn new(lambda: f64, epsilon: f64) -> Self {
        Self {
            lambda,
            epsilon,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid("lambda", "must be finite and >= 0"));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::invalid("epsilon", "must be finite and > 0"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", "must be > 0"));
        }
        Ok(())
    }
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            epsilon: 1.0,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            seed: 0,
            balance: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub factors: FactorSet,
    pub iterations: usize,
    /// Relative Frobenius change after each sweep; may contain `+∞` when the
    /// previous iterate was the zero tensor.
    pub rel_change_trace: Vec<f64>,
    pub converged: bool,
}

impl FitReport {
    pub fn predict(&self, samples: &Samples) -> Result<Vec<f64>> {
        predict(&self.factors, samples)
    }
}

/// Cumulative wall time of each phase of the component updates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub projection: Duration,
    /// Normal equations plus the Cholesky solve.
    pub solve: Duration,
    pub threshold: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.projection + self.solve + self.threshold
    }
}

/// `sign(uᵢ) · max(|uᵢ| − λ, 0)` elementwise.
pub fn soft_threshold(u: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid("lambda", "must be >= 0"));
    }
    Ok(u.iter().map(|&x| shrink(x, lambda)).collect())
}

#[inline]
fn shrink(x: f64, lambda: f64) -> f64 {
    if x.abs() <= lambda {
        0.0
    } else {
        x.signum() * (x.abs() - lambda)
    }
}

/// Solution of `(PᵀP + εI) x = Pᵀy` through a Cholesky factorization.
pub fn ridge_solve(p: &Matrix, y: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if p.rows() != y.len() {
        return Err(Error::LengthMismatch {
            expected: p.rows(),
            found: y.len(),
        });
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid("epsilon", "must be finite and > 0"));
    }
    if p.data().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite input to ridge solve".into()));
    }
    let (gram, rhs) = normal_equations(p, y, epsilon);
    let l = cholesky(&gram)?;
    let x = cholesky_solve(&l, &rhs);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("ridge solution is not finite".into()));
    }
    Ok(x)
}

/// New value of component `mode` given the current factors.
pub fn update_component(
    data: &Dataset,
    f: &FactorSet,
    mode: usize,
    cfg: &FitConfig,
) -> Result<Vec<f64>> {
    let mut timings = PhaseTimings::default();
    update_timed(data, f, mode, cfg, &mut timings)
}

fn update_timed(
    data: &Dataset,
    f: &FactorSet,
    mode: usize,
    cfg: &FitConfig,
    timings: &mut PhaseTimings,
) -> Result<Vec<f64>> {
    let t0 = Instant::now();
    let p = projection(data.samples(), f, mode)?;
    let t1 = Instant::now();
    let ridge = ridge_solve(&p, data.responses(), cfg.epsilon)?;
    let t2 = Instant::now();
    let w = soft_threshold(&ridge, cfg.lambda)?;
    let t3 = Instant::now();
    timings.projection += t1 - t0;
    timings.solve += t2 - t1;
    timings.threshold += t3 - t2;
    Ok(w)
}

/// Initial factors: i.i.d. standard normal entries drawn mode by mode from
/// one stream seeded with `seed`. A factor whose sup-norm is below `1e-12`
/// is redrawn from the same stream.
pub fn init_factors(dims: &[usize], seed: u64) -> Result<FactorSet> {
    let mut rng = NormalRng::seed_from_u64(seed);
    let factors = dims
        .iter()
        .map(|&d| loop {
            let v = rng.normal_vec(d);
            if v.iter().fold(0.0f64, |m, x| m.max(x.abs())) >= INIT_MIN_SUP {
                break v;
            }
        })
        .collect();
    FactorSet::new(factors)
}

/// `‖cur − prev‖_F / ‖prev‖_F`, with `0/0 = 0` and `x/0 = ∞` for `x > 0`.
pub fn relative_change(
    prev: &crate::tensor::DenseTensor,
    cur: &crate::tensor::DenseTensor,
) -> Result<f64> {
    let num = frobenius_distance(cur, prev)?;
    let den = frobenius_norm(prev);
    Ok(if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    })
}

/// Rescales every factor to the geometric mean of their norms. No-op when
/// any factor is zero.
pub fn balance_factors(f: &mut FactorSet) {
    let norms: Vec<f64> = f.factors().iter().map(|v| norm2(v)).collect();
    if norms.contains(&0.0) {
        return;
    }
    let target = norms.iter().map(|n| n.ln()).sum::<f64>() / norms.len() as f64;
    let target = target.exp();
    for (v, n) in f.factors_mut().iter_mut().zip(norms) {
        let s = target / n;
        v.iter_mut().for_each(|x| *x *= s);
    }
}

pub fn fit(data: &Dataset, cfg: &FitConfig) -> Result<FitReport> {
    fit_instrumented(data, cfg, true).map(|(r, _)| r)
}

/// Runs the fit loop and reports per-phase timings. With `stop_early` off
/// the loop always runs `max_iter` sweeps (the trace is still recorded and
/// `converged` reflects whether tol was reached at the last sweep).
pub fn fit_instrumented(
    data: &Dataset,
    cfg: &FitConfig,
    stop_early: bool,
) -> Result<(FitReport, PhaseTimings)> {
    cfg.validate()?;
    let mut factors = init_factors(data.dims(), cfg.seed)?;
    let mut prev = outer_product(&factors);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut timings = PhaseTimings::default();

    for _ in 0..cfg.max_iter {
        for mode in 0..factors.order() {
            let w = update_timed(data, &factors, mode, cfg, &mut timings)?;
            factors.set_factor(mode, w);
        }
        if cfg.balance {
            balance_factors(&mut factors);
        }
        let cur = outer_product(&factors);
        let rel = relative_change(&prev, &cur)?;
        trace.push(rel);
        converged = rel <= cfg.tol;
        if converged && stop_early {
            break;
        }
        prev = cur;
    }

    let report = FitReport {
        factors,
        iterations: trace.len(),
        rel_change_trace: trace,
        converged,
    };
    Ok((report, timings))
}

/// `ŷᵢ = ⟨w¹∘…∘w^M, 𝒳ᵢ⟩`, contracting each sample mode by mode instead of
/// materializing the coefficient tensor.
pub fn predict(f: &FactorSet, samples: &Samples) -> Result<Vec<f64>> {
    samples.check_factors(f)?;
    let dims = samples.dims();
    let per = samples.sample_len();
    Ok(samples
        .data()
        .par_chunks(per)
        .map(|x| contract_all(x, dims, f))
        .collect())
}
