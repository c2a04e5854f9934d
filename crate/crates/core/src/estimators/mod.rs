//! Amplitude estimators for a known template `F` in a counting spectrum.
//!
//! Two routes are provided:
//!
//! * [`ls_estimate`]: heteroscedastic weighted least squares,
//!   `alpha = sum(m F / s2) / sum(F^2 / s2)` with `1 / sqrt(sum(F^2 / s2))` as
//!   its uncertainty.
//! * [`solve_alpha`]: the noise-augmented likelihood estimator. An external
//!   standard-normal sequence `bg` enters the likelihood through the residual
//!   `m - alpha F - bg sqrt(alpha F)`, and `alpha` is the root of the reduced
//!   score ([`score_reduced`]) obtained with `s2 = alpha F`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{NoiseSequence, SignalModel, Spectrum};

mod ls;
mod residuals;
mod score;
mod solve;
mod uncertainty;

pub use ls::ls_estimate;
pub use residuals::{residual_diagnostics, ResidualChecks, ResidualReport, CHECK_SIGMAS, SPREAD_BAND};
pub use score::{loglik_modified, score_general, score_reduced, ReducedSums};
pub use solve::{solve_alpha, Init, SolveOptions, DEFAULT_REL_TOL};
pub use uncertainty::alpha_uncertainty;

/// How per-channel variances `s2_i` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum WeightMode {
    /// `s2_i = max(m_i, floor)`.
    Measured { floor: f64 },
    /// `s2_i = alpha F_i`; iterated to self-consistency by [`ls_estimate`].
    Model,
    /// `s2_i = 1`.
    Unit,
}

impl WeightMode {
    pub const DEFAULT_FLOOR: f64 = 1.0;

    pub fn measured() -> Self {
        WeightMode::Measured {
            floor: Self::DEFAULT_FLOOR,
        }
    }
}

impl Default for WeightMode {
    fn default() -> Self {
        Self::measured()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LeastSquares,
    ModifiedLikelihood,
}

/// Which propagation formula [`alpha_uncertainty`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyVariant {
    /// First-order propagation through the implicit root: per-channel
    /// sensitivities squared, then summed.
    #[default]
    Standard,
    /// Same sensitivities, but each family is summed over channels before
    /// squaring: `(sum c_i s_i)^2 + (sum d_i)^2`.
    SquaredSums,
    /// Squared sums with the legacy closed-form coefficients (`1/(2 alpha)`
    /// in the noise sensitivity, `+` on the last slope term). Does not match
    /// the derivative of the root; kept to reproduce published numbers.
    LegacyClosedForm,
}

/// A fitted amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub alpha: f64,
    pub delta_alpha: f64,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<UncertaintyVariant>,
    /// `|score_reduced(alpha)|` at the returned root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_residual: Option<f64>,
    /// Number of distinct positive roots found in the search bracket.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_roots: Option<usize>,
    /// Re-fits performed (model-weighted least squares only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

pub(crate) fn check_lengths(spectrum: &Spectrum, signal: &SignalModel) -> Result<()> {
    if spectrum.len() != signal.len() {
        return Err(Error::LengthMismatch {
            what: "spectrum",
            expected: signal.len(),
            got: spectrum.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_noise(noise: &NoiseSequence, signal: &SignalModel) -> Result<()> {
    if noise.len() != signal.len() {
        return Err(Error::LengthMismatch {
            what: "noise sequence",
            expected: signal.len(),
            got: noise.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("alpha", format!("must be positive and finite, got {alpha}")))
    }
}

/// Per-channel variances for `mode`; `alpha` is used only by [`WeightMode::Model`].
pub(crate) fn variances(
    mode: WeightMode,
    spectrum: &Spectrum,
    signal: &SignalModel,
    alpha: f64,
) -> Result<Vec<f64>> {
    let s2: Vec<f64> = match mode {
        WeightMode::Measured { floor } => {
            if !(floor > 0.0 && floor.is_finite()) {
                return Err(Error::invalid("floor", format!("must be positive, got {floor}")));
            }
            spectrum.counts().iter().map(|&m| m.max(floor)).collect()
        }
        WeightMode::Model => signal.values().iter().map(|&f| alpha * f).collect(),
        WeightMode::Unit => vec![1.0; signal.len()],
    };
    if let Some(channel) = s2.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::NonPositiveVariance {
            channel,
            value: s2[channel],
        });
    }
    Ok(s2)
}
