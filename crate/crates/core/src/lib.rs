//! Survival-guided nonnegative tensor factorization.
//!
//! Baseline covariates are arranged in a `(sample, feature, period)` tensor
//! whose period axis comes from a grid over follow-up time. Factorizing the
//! IPCW-weighted event tensor yields covariate patterns `H` and temporal
//! patterns `Q`; projecting a tensor weighted by Cox-model event
//! probabilities onto those patterns gives per-sample meta-scores `W` that
//! replace the raw covariates in a second Cox model.
//!
//! Modules, bottom up:
//!
//! - [`surv`]: datasets, preprocessing, Kaplan-Meier, IPCW, time grids,
//!   concordance indices
//! - [`coxnet`]: elastic-net Cox regression and survival predictions
//! - [`factorization`]: Fast-HALS NTF/NMF and fixed-basis projection
//! - [`tensorize`]: event and probability tensors
//! - [`pipeline`]: the two-stage model, rank selection, clustering, benchmark
//! - [`cli`]: file formats and the command-line front end

pub mod cli;
pub mod coxnet;
pub mod error;
pub mod factorization;
pub mod pipeline;
pub mod surv;
pub mod tensorize;

pub use error::{Error, Result};
