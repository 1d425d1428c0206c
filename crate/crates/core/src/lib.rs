//! Orthogonally equivariant covariance estimation when the dimension `p`
//! exceeds the sample size `n`.
//!
//! The estimator keeps the eigenvectors of `S = XᵀX` and replaces its
//! eigenvalues with a `κ`-mixture of two critical points of an adjusted
//! log-likelihood ([`shrinkage`]). The mixing weight is chosen from data by
//! bootstrap or cross-validated risk estimates ([`selection`]). The crate
//! also carries the Monte-Carlo risk harness ([`simbench`]), nine loss
//! functions ([`losses`]), a Stiefel-manifold check of the large-`p`
//! eigenvector-integral approximation ([`hciz`]) and a plug-in LDA
//! classifier ([`classify`]).

pub mod classify;
pub mod cli;
pub mod covariance;
pub mod error;
pub mod hciz;
pub mod io;
pub mod losses;
mod par;
pub mod random;
pub mod seed;
pub mod selection;
pub mod shrinkage;
pub mod simbench;
pub mod spectra;

#[cfg(test)]
mod testutil;

pub use covariance::CovarianceEstimate;
pub use error::{Error, Result};
pub use losses::{loss, prial, LossKind, LossReport};
pub use selection::{bootstrap_select, cv_select, oracle_select, Folds, KappaGrid, RiskCurve};
pub use shrinkage::{
    adjusted_loglik, assemble, lambda_kappa, lambda_one, lambda_one_ns, lambda_zero, mle_residual,
    ShrinkageSpectrum,
};
pub use spectra::{center, decompose, DataMatrix, SampleSpectrum, DEFAULT_RANK_TOL};
