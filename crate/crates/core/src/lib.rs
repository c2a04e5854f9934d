//! Amplitude estimation for a known reference signal in counting spectra.
//!
//! A spectrum `m` is modelled as `alpha * F` plus Gaussian counting noise of
//! variance `alpha * F`. The crate provides:
//!
//! * [`model`]: templates, spectra, seeded noise sequences and synthesis;
//! * [`estimators`]: weighted least squares, the noise-augmented likelihood
//!   score and its root, uncertainty propagation and residual checks;
//! * [`study`]: replicate studies and ground-truth comparisons, parallel over
//!   replicates with the `parallel` feature (on by default);
//! * [`io`]: text tables and versioned JSON reports.

pub mod error;
pub mod estimators;
pub mod io;
pub mod model;
mod par;
pub mod rng;
mod stats;
pub mod study;

pub use error::{Error, ErrorClass, Result};
pub use estimators::{
    alpha_uncertainty, loglik_modified, ls_estimate, residual_diagnostics, score_general,
    score_reduced, solve_alpha, Estimate, Init, Method, ResidualReport, SolveOptions,
    UncertaintyVariant, WeightMode,
};
pub use model::{
    gaussian_sequence, make_sinusoid_signal, synthesize_spectrum, NoiseSequence, SignalModel,
    SinusoidParams, Spectrum,
};
pub use par::Execution;
pub use study::{
    aggregate, compare_estimators, matched_recovery_check, run_study, run_study_with, Comparison,
    ReplicateReport, StudyConfig,
};
