use serde::{Deserialize, Serialize};

use super::{check_alpha, check_lengths};
use crate::error::Result;
use crate::model::{SignalModel, Spectrum};
use crate::stats;

/// Width, in binomial / normal standard errors, of the residual checks.
pub const CHECK_SIGMAS: f64 = 3.96;
/// Accepted band for the normalized residual standard deviation.
pub const SPREAD_BAND: (f64, f64) = (0.9, 1.1);

/// Residuals `m - alpha F` and their normalization by `sqrt(alpha F)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub alpha: f64,
    pub residuals: Vec<f64>,
    pub normalized: Vec<f64>,
    pub positive_count: usize,
    pub negative_count: usize,
    pub normalized_mean: f64,
    /// Sample standard deviation; absent for a single channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized_std: Option<f64>,
}

/// Outcome of the three residual checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualChecks {
    /// Positive and negative residuals balanced within the binomial band.
    pub sign_balance: bool,
    /// Normalized mean within `CHECK_SIGMAS / sqrt(n)` of zero.
    pub mean: bool,
    /// Normalized spread inside [`SPREAD_BAND`], or an exact fit.
    pub spread: bool,
}

impl ResidualChecks {
    pub fn all_pass(&self) -> bool {
        self.sign_balance && self.mean && self.spread
    }
}

impl ResidualReport {
    /// Sign balance counts non-zero residuals only; an exact fit passes every
    /// check since there is nothing to be unbalanced or dispersed.
    pub fn checks(&self) -> ResidualChecks {
        let nonzero = self.positive_count + self.negative_count;
        let exact = nonzero == 0;
        let sign_balance = exact || {
            let half = nonzero as f64 / 2.0;
            (self.positive_count as f64 - half).abs() <= CHECK_SIGMAS * (nonzero as f64).sqrt() / 2.0
        };
        let n = self.residuals.len() as f64;
        let mean = self.normalized_mean.abs() <= CHECK_SIGMAS / n.sqrt();
        let spread = exact
            || self
                .normalized_std
                .is_some_and(|s| (SPREAD_BAND.0..=SPREAD_BAND.1).contains(&s));
        ResidualChecks {
            sign_balance,
            mean,
            spread,
        }
    }
}

pub fn residual_diagnostics(spectrum: &Spectrum, signal: &SignalModel, alpha: f64) -> Result<ResidualReport> {
    check_alpha(alpha)?;
    check_lengths(spectrum, signal)?;
    let residuals: Vec<f64> = spectrum
        .counts()
        .iter()
        .zip(signal.values())
        .map(|(&m, &f)| m - alpha * f)
        .collect();
    let normalized: Vec<f64> = residuals
        .iter()
        .zip(signal.values())
        .map(|(&r, &f)| r / (alpha * f).sqrt())
        .collect();
    let normalized_mean = stats::mean(&normalized);
    Ok(ResidualReport {
        alpha,
        positive_count: residuals.iter().filter(|&&r| r > 0.0).count(),
        negative_count: residuals.iter().filter(|&&r| r < 0.0).count(),
        normalized_std: stats::sample_std(&normalized, normalized_mean),
        normalized_mean,
        residuals,
        normalized,
    })
}
