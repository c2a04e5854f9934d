use std::f64::consts::PI;

use super::{check_alpha, check_lengths, check_noise, variances, WeightMode};
use crate::error::Result;
use crate::model::{NoiseSequence, SignalModel, Spectrum};

/// Noise-augmented log-likelihood
/// `-sum((m - alpha F - bg sqrt(alpha F))^2 / s2) + sum(ln(1 / (sqrt(2 pi) s)))`.
///
/// The quadratic term carries no factor 1/2.
pub fn loglik_modified(
    alpha: f64,
    spectrum: &Spectrum,
    signal: &SignalModel,
    noise: &NoiseSequence,
    weights: WeightMode,
) -> Result<f64> {
    check_alpha(alpha)?;
    check_lengths(spectrum, signal)?;
    check_noise(noise, signal)?;
    let s2 = variances(weights, spectrum, signal, alpha)?;
    let norm = (2.0 * PI).sqrt();
    let mut quadratic = 0.0;
    let mut log_norm = 0.0;
    for (((&m, &f), &bg), &v) in spectrum
        .counts()
        .iter()
        .zip(signal.values())
        .zip(noise.values())
        .zip(&s2)
    {
        let expected = alpha * f;
        let r = m - expected - bg * expected.sqrt();
        quadratic += r * r / v;
        log_norm -= (norm * v.sqrt()).ln();
    }
    Ok(-quadratic + log_norm)
}

/// Score with arbitrary per-channel variances:
///
/// `sum(m F/s2) - alpha sum(F^2/s2) - (sqrt(alpha)/2) sum(F^1.5 bg/s2)
///  - (1/(2 sqrt(alpha))) sum(m sqrt(F) bg/s2) + (1/2) sum(F bg^2/s2)`.
pub fn score_general(
    alpha: f64,
    spectrum: &Spectrum,
    signal: &SignalModel,
    noise: &NoiseSequence,
    weights: WeightMode,
) -> Result<f64> {
    check_alpha(alpha)?;
    check_lengths(spectrum, signal)?;
    check_noise(noise, signal)?;
    let s2 = variances(weights, spectrum, signal, alpha)?;
    let mut s_mf = 0.0;
    let mut s_ff = 0.0;
    let mut s_f32_bg = 0.0;
    let mut s_m_sqrtf_bg = 0.0;
    let mut s_f_bg2 = 0.0;
    for (((&m, &f), &bg), &v) in spectrum
        .counts()
        .iter()
        .zip(signal.values())
        .zip(noise.values())
        .zip(&s2)
    {
        let sf = f.sqrt();
        s_mf += m * f / v;
        s_ff += f * f / v;
        s_f32_bg += f * sf * bg / v;
        s_m_sqrtf_bg += m * sf * bg / v;
        s_f_bg2 += f * bg * bg / v;
    }
    let root = alpha.sqrt();
    Ok(s_mf - alpha * s_ff - 0.5 * root * s_f32_bg - 0.5 / root * s_m_sqrtf_bg + 0.5 * s_f_bg2)
}

/// The five channel sums the reduced score depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedSums {
    /// `sum(m)`
    pub m: f64,
    /// `sum(F)`
    pub f: f64,
    /// `sum(sqrt(F) bg)`
    pub sqrt_f_bg: f64,
    /// `sum(m bg / sqrt(F))`
    pub m_bg_over_sqrt_f: f64,
    /// `sum(bg^2)`
    pub bg2: f64,
}

impl ReducedSums {
    pub fn new(spectrum: &Spectrum, signal: &SignalModel, noise: &NoiseSequence) -> Result<Self> {
        check_lengths(spectrum, signal)?;
        check_noise(noise, signal)?;
        let mut sums = ReducedSums {
            m: 0.0,
            f: 0.0,
            sqrt_f_bg: 0.0,
            m_bg_over_sqrt_f: 0.0,
            bg2: 0.0,
        };
        for ((&m, &f), &bg) in spectrum.counts().iter().zip(signal.values()).zip(noise.values()) {
            let sf = f.sqrt();
            sums.m += m;
            sums.f += f;
            sums.sqrt_f_bg += sf * bg;
            sums.m_bg_over_sqrt_f += m * bg / sf;
            sums.bg2 += bg * bg;
        }
        Ok(sums)
    }

    /// Reduced score at `alpha`.
    pub fn score(&self, alpha: f64) -> f64 {
        let root = alpha.sqrt();
        self.m - alpha * self.f - 0.5 * root * self.sqrt_f_bg - 0.5 / root * self.m_bg_over_sqrt_f
            + 0.5 * self.bg2
    }

    /// Coefficients `[c3, c2, c1, c0]` of `u * score(u^2)` as a cubic in `u`.
    pub fn cubic(&self) -> [f64; 4] {
        [
            -self.f,
            -0.5 * self.sqrt_f_bg,
            self.m + 0.5 * self.bg2,
            -0.5 * self.m_bg_over_sqrt_f,
        ]
    }
}

/// Score under `s2_i = alpha F_i`:
///
/// `sum(m) - alpha sum(F) - (sqrt(alpha)/2) sum(sqrt(F) bg)
///  - (1/(2 sqrt(alpha))) sum(m bg/sqrt(F)) + (1/2) sum(bg^2)`.
pub fn score_reduced(
    alpha: f64,
    spectrum: &Spectrum,
    signal: &SignalModel,
    noise: &NoiseSequence,
) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(ReducedSums::new(spectrum, signal, noise)?.score(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::ls_estimate;
    use crate::model::{gaussian_sequence, make_sinusoid_signal, synthesize_spectrum, SinusoidParams};

    fn one(v: f64) -> Vec<f64> {
        vec![v]
    }

    #[test]
    fn loglik_hand_value() {
        let f = SignalModel::new(one(4.0), "").unwrap();
        let m = Spectrum::new(one(6.0)).unwrap();
        let bg = NoiseSequence::from_values(one(0.0)).unwrap();
        let v = loglik_modified(1.0, &m, &f, &bg, WeightMode::Model).unwrap();
        let expected = -1.0 - (2.0 * (2.0 * PI).sqrt()).ln();
        assert!((v - expected).abs() < 1e-14);
        assert!((v + 2.612_09).abs() < 1e-5);
    }

    #[test]
    fn loglik_matched_noise_leaves_only_normalization() {
        let f = make_sinusoid_signal(&SinusoidParams::default()).unwrap();
        let bg = gaussian_sequence(5, f.len(), false).unwrap();
        let m = synthesize_spectrum(&f, 1.7, &bg).unwrap();
        let weights = WeightMode::Model;
        let v = loglik_modified(1.7, &m, &f, &bg, weights).unwrap();
        let s2 = variances(weights, &m, &f, 1.7).unwrap();
        let norm: f64 = s2.iter().map(|v| -((2.0 * PI).sqrt() * v.sqrt()).ln()).sum();
        assert!((v - norm).abs() < 1e-9 * norm.abs());
        // Fixed measured weights: the matched amplitude beats a 1.5x one.
        let w = WeightMode::measured();
        assert!(
            loglik_modified(1.7, &m, &f, &bg, w).unwrap()
                >= loglik_modified(1.7 * 1.5, &m, &f, &bg, w).unwrap()
        );
    }

    #[test]
    fn score_general_hand_value() {
        let f = SignalModel::new(one(4.0), "").unwrap();
        let m = Spectrum::new(one(6.0)).unwrap();
        let bg = NoiseSequence::from_values(one(-1.0)).unwrap();
        assert_eq!(score_general(1.0, &m, &f, &bg, WeightMode::Unit).unwrap(), 20.0);
    }

    #[test]
    fn score_reduced_hand_value() {
        let f = SignalModel::new(one(4.0), "").unwrap();
        let m = Spectrum::new(one(6.0)).unwrap();
        let bg = NoiseSequence::from_values(one(-1.0)).unwrap();
        assert_eq!(score_reduced(1.0, &m, &f, &bg).unwrap(), 5.0);
    }

    #[test]
    fn zero_noise_reductions() {
        let f = SignalModel::new(vec![1.0, 2.0], "").unwrap();
        let m = Spectrum::new(vec![3.0, 3.0]).unwrap();
        let bg = NoiseSequence::zeros(2);
        assert_eq!(score_reduced(2.0, &m, &f, &bg).unwrap(), 0.0);

        let f = SignalModel::new(vec![1.0, 4.0, 9.0], "").unwrap();
        let m = Spectrum::new(vec![2.0, 9.0, 16.0]).unwrap();
        let bg = NoiseSequence::zeros(3);
        let w = WeightMode::measured();
        let ls = ls_estimate(&m, &f, w).unwrap();
        let s = score_general(ls.alpha, &m, &f, &bg, w).unwrap();
        assert!(s.abs() < 1e-13, "{s}");
    }

    #[test]
    fn general_with_model_variances_is_reduced_over_alpha() {
        let f = make_sinusoid_signal(&SinusoidParams::default()).unwrap();
        let data = gaussian_sequence(1, f.len(), false).unwrap();
        let m = synthesize_spectrum(&f, 1.0, &data).unwrap();
        let bg = gaussian_sequence(2, f.len(), false).unwrap();
        for alpha in [0.05, 0.3, 1.0, 2.2, 17.0] {
            let g = score_general(alpha, &m, &f, &bg, WeightMode::Model).unwrap();
            let r = score_reduced(alpha, &m, &f, &bg).unwrap();
            assert!((g - r / alpha).abs() <= 1e-10 * (g.abs() + 1.0), "{alpha}: {g} vs {}", r / alpha);
        }
    }

    #[test]
    fn matched_noise_zeroes_reduced_score() {
        let f = make_sinusoid_signal(&SinusoidParams::default()).unwrap();
        let bg = gaussian_sequence(77, f.len(), false).unwrap();
        for alpha in [0.1, 1.0, 5.0, 100.0] {
            let m = synthesize_spectrum(&f, alpha, &bg).unwrap();
            let s = score_reduced(alpha, &m, &f, &bg).unwrap();
            let scale: f64 = m.counts().iter().map(|v| v.abs()).sum();
            assert!(s.abs() <= 1e-10 * scale, "{alpha}: {s}");
        }
    }

    #[test]
    fn cubic_matches_score() {
        let f = SignalModel::new(vec![4.0], "").unwrap();
        let m = Spectrum::new(vec![6.0]).unwrap();
        let bg = NoiseSequence::from_values(vec![-1.0]).unwrap();
        let sums = ReducedSums::new(&m, &f, &bg).unwrap();
        assert_eq!(sums.cubic(), [-4.0, 1.0, 6.5, 1.5]);
        for u in [0.3, 1.0, 1.5, 2.7] {
            let [a, b, c, d] = sums.cubic();
            let p = ((a * u + b) * u + c) * u + d;
            assert!((p - u * sums.score(u * u)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_alpha() {
        let f = SignalModel::new(one(4.0), "").unwrap();
        let m = Spectrum::new(one(6.0)).unwrap();
        let bg = NoiseSequence::zeros(1);
        assert!(score_reduced(0.0, &m, &f, &bg).is_err());
        assert!(score_general(-1.0, &m, &f, &bg, WeightMode::Unit).is_err());
        assert!(loglik_modified(f64::NAN, &m, &f, &bg, WeightMode::Unit).is_err());
    }
}
