//! Numerical toolkit for composite asymmetric quantum hypothesis testing:
//! optimal finite-n tests, quantum divergences, and recovery-map bounds on
//! conditional mutual information. Entropic quantities are in bits.

// `!(x > 0.0)` is used deliberately so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod composite;
pub mod divergence;
pub mod error;
pub mod operator;
pub mod neyman_pearson;
pub mod optim;
pub mod recovery;
pub mod report;
pub mod states;

pub use divergence::DivergenceValue;
pub use error::{Error, Result};
pub use operator::{Budget, HermitianOperator, SpectralDecomposition, SystemShape};
pub use report::{BoundReport, Check};
pub use states::{DensityOperator, FiniteMixture};
