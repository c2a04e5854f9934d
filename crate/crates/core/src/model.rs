//! Reference signals, spectra and external noise sequences.
//!
//! A spectrum is modelled as `m_i = alpha * F_i + bg_i * sqrt(alpha * F_i)`: the
//! Gaussian approximation of Poisson counting noise around a known template
//! `F` scaled by the amplitude `alpha`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{rng, stats};

fn check_finite(what: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(channel) => Err(Error::NonFinite {
            what,
            channel,
            value: values[channel],
        }),
        None => Ok(()),
    }
}

/// The known per-channel reference signal `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalModel {
    values: Vec<f64>,
    description: String,
}

impl SignalModel {
    /// Every value must be finite and strictly positive.
    pub fn new(values: Vec<f64>, description: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        check_finite("reference signal", &values)?;
        if let Some(channel) = values.iter().position(|&f| f <= 0.0) {
            return Err(Error::NonPositiveSignal {
                channel,
                value: values[channel],
            });
        }
        Ok(Self {
            values,
            description: description.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

/// Measured (or synthesized) counts per channel. Counts are real-valued and
/// may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    counts: Vec<f64>,
}

impl Spectrum {
    pub fn new(counts: Vec<f64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Empty);
        }
        check_finite("spectrum", &counts)?;
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Same spectrum with every count multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.counts.iter().map(|m| m * factor).collect())
    }
}

/// An external Gaussian sequence `bg`, uncorrelated with the measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSequence {
    values: Vec<f64>,
    seed: Option<u64>,
    standardized: bool,
}

impl NoiseSequence {
    /// Wraps explicit values (no seed provenance).
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::with_provenance(values, None, false)
    }

    /// All-zero sequence of length `n`.
    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
            seed: None,
            standardized: false,
        }
    }

    pub fn with_provenance(values: Vec<f64>, seed: Option<u64>, standardized: bool) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        check_finite("noise sequence", &values)?;
        Ok(Self {
            values,
            seed,
            standardized,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn standardized(&self) -> bool {
        self.standardized
    }
}

/// `F(i) = amplitude * sin(i / scale) + offset` sampled at channels `0..channels`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidParams {
    pub amplitude: f64,
    pub offset: f64,
    /// Channels per radian.
    pub scale: f64,
    pub channels: usize,
}

impl SinusoidParams {
    pub const DEFAULT_AMPLITUDE: f64 = 27.0;
    pub const DEFAULT_OFFSET: f64 = 17.0;
    pub const DEFAULT_SCALE: f64 = 32.3;
    /// With the default shape the template stays positive up to channel 123.
    pub const DEFAULT_CHANNELS: usize = 100;
}

impl Default for SinusoidParams {
    fn default() -> Self {
        Self {
            amplitude: Self::DEFAULT_AMPLITUDE,
            offset: Self::DEFAULT_OFFSET,
            scale: Self::DEFAULT_SCALE,
            channels: Self::DEFAULT_CHANNELS,
        }
    }
}

/// Samples the sinusoidal template. Fails if any sampled channel is not
/// strictly positive, naming the first offending channel.
pub fn make_sinusoid_signal(params: &SinusoidParams) -> Result<SignalModel> {
    let SinusoidParams {
        amplitude,
        offset,
        scale,
        channels,
    } = *params;
    if channels == 0 {
        return Err(Error::invalid("channels", "must be at least 1"));
    }
    if !amplitude.is_finite() {
        return Err(Error::invalid("amplitude", "must be finite"));
    }
    if !offset.is_finite() {
        return Err(Error::invalid("offset", "must be finite"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::invalid("scale", "must be finite and non-zero"));
    }
    let values: Vec<f64> = (0..channels)
        .map(|i| amplitude * (i as f64 / scale).sin() + offset)
        .collect();
    if let Some(i) = values.iter().position(|&f| f <= 0.0) {
        return Err(Error::invalid(
            "channels",
            format!(
                "template {amplitude}*sin(i/{scale}) + {offset} is {:.6} at channel {i}; \
                 use at most {i} channels or raise the offset",
                values[i]
            ),
        ));
    }
    SignalModel::new(
        values,
        format!("{amplitude}*sin(i/{scale}) + {offset}, i = 0..{channels}"),
    )
}

/// `n` standard normal draws keyed by `seed`.
///
/// With `standardize` the draws are shifted and rescaled so that the sample
/// mean is 0 and the sample standard deviation (denominator `n - 1`) is 1.
pub fn gaussian_sequence(seed: u64, n: usize, standardize: bool) -> Result<NoiseSequence> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if standardize && n < 2 {
        return Err(Error::invalid("n", "standardizing needs at least 2 draws"));
    }
    let mut values = rng::standard_normals(seed, n);
    if standardize {
        let mean = stats::mean(&values);
        let sd = stats::sample_std(&values, mean).unwrap_or(0.0);
        if sd == 0.0 {
            return Err(Error::DegenerateDraw);
        }
        for v in &mut values {
            *v = (*v - mean) / sd;
        }
    }
    NoiseSequence::with_provenance(values, Some(seed), standardize)
}

/// `m_i = alpha * F_i + bg_i * sqrt(alpha * F_i)`. Negative counts pass through.
pub fn synthesize_spectrum(signal: &SignalModel, alpha: f64, noise: &NoiseSequence) -> Result<Spectrum> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha", format!("must be positive and finite, got {alpha}")));
    }
    if noise.len() != signal.len() {
        return Err(Error::LengthMismatch {
            what: "noise sequence",
            expected: signal.len(),
            got: noise.len(),
        });
    }
    let counts = signal
        .values()
        .iter()
        .zip(noise.values())
        .map(|(&f, &bg)| {
            let expected = alpha * f;
            expected + bg * expected.sqrt()
        })
        .collect();
    Spectrum::new(counts)
}
