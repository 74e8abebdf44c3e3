//! Sparse unit-rank tensor regression.
//!
//! The coefficient tensor of `yᵢ = ⟨𝒲, 𝒳ᵢ⟩ + noise` is restricted to a single
//! outer product `w¹ ∘ … ∘ w^M`. Each component is fitted in closed form by
//! soft-thresholding a ridge solution on the samples projected onto that
//! mode, and the components are swept alternately until the coefficient
//! tensor stops moving. See [`estimator::fit`].

pub mod cli;
pub mod dataset;
pub mod error;
pub mod estimator;
pub mod eval;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod simulate;
pub mod tensor;

pub use dataset::{projection, Dataset, Samples};
pub use error::{Error, Result};
pub use estimator::{
    fit, predict, ridge_solve, soft_threshold, update_component, FitConfig, FitReport,
};
pub use eval::{auc, coefficient_error, kfold_cv, mse, train_test_split, CvGrid, CvResult};
pub use linalg::Matrix;
pub use simulate::{gen_dataset, SimOutput, SimSpec};
pub use tensor::{
    frobenius_norm, inner_product, mode_contract, outer_product, DenseTensor, FactorSet,
};
