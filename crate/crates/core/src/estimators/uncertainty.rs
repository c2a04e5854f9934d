//! First-order uncertainty of the reduced-score root.
//!
//! With `G(alpha; m, bg)` the general score, the root moves by
//! `d alpha = -(dG/dm_i dm_i + dG/dbg_i dbg_i) / (dG/d alpha)`. Inputs carry
//! `dm_i = s_i` and `dbg_i = 1`; the template is exact.

use super::{check_alpha, check_lengths, check_noise, variances, UncertaintyVariant, WeightMode};
use crate::error::{Error, Result};
use crate::model::{NoiseSequence, SignalModel, Spectrum};

/// Per-channel sensitivities and the slope term for one channel.
struct Terms {
    /// `dG/dm_i`
    c: f64,
    /// `dG/dbg_i` (up to sign)
    d: f64,
    /// contribution to `-dG/d alpha`
    slope: f64,
}

fn standard_terms(alpha: f64, m: f64, f: f64, bg: f64, s2: f64) -> Terms {
    let (ra, rf) = (alpha.sqrt(), f.sqrt());
    Terms {
        c: (f - rf * bg / (2.0 * ra)) / s2,
        d: (ra * f * rf / 2.0 + m * rf / (2.0 * ra) - f * bg) / s2,
        slope: (f * f + f * rf * bg / (4.0 * ra) - bg * m * rf / (4.0 * alpha * ra)) / s2,
    }
}

// Legacy closed form: 1/(2 alpha) in d and a plus sign on the last slope term.
fn legacy_terms(alpha: f64, m: f64, f: f64, bg: f64, s2: f64) -> Terms {
    let (ra, rf) = (alpha.sqrt(), f.sqrt());
    Terms {
        c: (f - rf * bg / (2.0 * ra)) / s2,
        d: (ra * f * rf / 2.0 + m * rf / (2.0 * alpha) - f * bg) / s2,
        slope: (f * f + f * rf * bg / (4.0 * ra) + bg * m * rf / (4.0 * alpha * ra)) / s2,
    }
}

/// Uncertainty of the amplitude returned by [`super::solve_alpha`].
///
/// `weights` fixes `s2_i` (and `dm_i = s_i`); [`WeightMode::Model`] gives
/// `s2_i = alpha F_i`, the variance the reduced score assumes.
///
/// * [`UncertaintyVariant::Standard`]:
///   `sqrt(sum((c_i s_i)^2) + sum(d_i^2)) / |sum(slope_i)|` with the exact
///   derivatives of the score.
/// * [`UncertaintyVariant::SquaredSums`]:
///   `sqrt((sum c_i s_i)^2 + (sum d_i)^2) / |sum(slope_i)|`, same derivatives.
/// * [`UncertaintyVariant::LegacyClosedForm`]: squared sums with the legacy
///   coefficients.
type TermsFn = fn(f64, f64, f64, f64, f64) -> Terms;

pub fn alpha_uncertainty(
    alpha: f64,
    spectrum: &Spectrum,
    signal: &SignalModel,
    noise: &NoiseSequence,
    weights: WeightMode,
    variant: UncertaintyVariant,
) -> Result<f64> {
    check_alpha(alpha)?;
    check_lengths(spectrum, signal)?;
    check_noise(noise, signal)?;
    let s2 = variances(weights, spectrum, signal, alpha)?;
    let (terms_fn, aggregation): (TermsFn, _) = match variant {
        UncertaintyVariant::Standard => (standard_terms, Aggregation::SumOfSquares),
        UncertaintyVariant::SquaredSums => (standard_terms, Aggregation::SquareOfSums),
        UncertaintyVariant::LegacyClosedForm => (legacy_terms, Aggregation::SquareOfSums),
    };
    let terms: Vec<(Terms, f64)> = spectrum
        .counts()
        .iter()
        .zip(signal.values())
        .zip(noise.values())
        .zip(&s2)
        .map(|(((&m, &f), &bg), &v)| (terms_fn(alpha, m, f, bg, v), v.sqrt()))
        .collect();
    let delta = propagate(&terms, aggregation);
    if !delta.is_finite() {
        return Err(Error::ZeroDenominator("uncertainty propagation"));
    }
    Ok(delta)
}

#[derive(Clone, Copy)]
enum Aggregation {
    SumOfSquares,
    SquareOfSums,
}

/// Combines per-channel terms `(terms, s_i)` into the uncertainty. Returns a
/// non-finite value when the slope sum vanishes.
fn propagate(terms: &[(Terms, f64)], aggregation: Aggregation) -> f64 {
    let slope: f64 = terms.iter().map(|(t, _)| t.slope).sum();
    let numerator = match aggregation {
        Aggregation::SumOfSquares => terms
            .iter()
            .map(|(t, sd)| (t.c * sd).powi(2) + t.d.powi(2))
            .sum::<f64>(),
        Aggregation::SquareOfSums => {
            let sc: f64 = terms.iter().map(|(t, sd)| t.c * sd).sum();
            let sd: f64 = terms.iter().map(|(t, _)| t.d).sum();
            sc * sc + sd * sd
        }
    };
    numerator.sqrt() / slope.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{solve_alpha, SolveOptions};

    fn single() -> (Spectrum, SignalModel, NoiseSequence) {
        (
            Spectrum::new(vec![6.0]).unwrap(),
            SignalModel::new(vec![4.0], "").unwrap(),
            NoiseSequence::from_values(vec![-1.0]).unwrap(),
        )
    }

    #[test]
    fn nonnegative_and_finite() {
        let (m, f, bg) = single();
        for variant in [
            UncertaintyVariant::Standard,
            UncertaintyVariant::SquaredSums,
            UncertaintyVariant::LegacyClosedForm,
        ] {
            for alpha in [0.01, 1.0, 2.25, 40.0] {
                let d = alpha_uncertainty(alpha, &m, &f, &bg, WeightMode::Model, variant).unwrap();
                assert!(d.is_finite() && d >= 0.0);
            }
        }
    }

    #[test]
    fn aggregation_rules_coincide_for_one_channel() {
        for alpha in [0.4, 1.0, 2.25] {
            for terms in [
                standard_terms(alpha, 6.0, 4.0, -1.0, alpha * 4.0),
                legacy_terms(alpha, 6.0, 4.0, -1.0, alpha * 4.0),
            ] {
                let one = [(terms, (alpha * 4.0f64).sqrt())];
                assert_eq!(
                    propagate(&one, Aggregation::SumOfSquares),
                    propagate(&one, Aggregation::SquareOfSums)
                );
            }
        }
    }

    #[test]
    fn variants_coincide_without_external_noise_at_unit_alpha() {
        // bg = 0 and alpha = 1 make both coefficient sets identical.
        let f = SignalModel::new(vec![4.0], "").unwrap();
        let m = Spectrum::new(vec![5.0]).unwrap();
        let z = NoiseSequence::zeros(1);
        let a = alpha_uncertainty(1.0, &m, &f, &z, WeightMode::Model, UncertaintyVariant::Standard).unwrap();
        let b = alpha_uncertainty(1.0, &m, &f, &z, WeightMode::Model, UncertaintyVariant::LegacyClosedForm)
            .unwrap();
        assert!((a - b).abs() <= 1e-15 * a);
    }

    #[test]
    fn single_channel_variants() {
        let (m, f, bg) = single();
        let at = |v| alpha_uncertainty(2.25, &m, &f, &bg, WeightMode::Model, v).unwrap();
        assert_eq!(at(UncertaintyVariant::Standard), at(UncertaintyVariant::SquaredSums));
        let legacy = at(UncertaintyVariant::LegacyClosedForm);
        assert!(legacy > 0.0);
        assert!((legacy - at(UncertaintyVariant::Standard)).abs() > 1e-3 * legacy);
    }

    #[test]
    fn two_channel_standard_matches_finite_differences() {
        let f = SignalModel::new(vec![4.0, 4.0], "").unwrap();
        let m = Spectrum::new(vec![6.0, 2.0]).unwrap();
        let bg = NoiseSequence::from_values(vec![1.0, -1.0]).unwrap();
        let opts = SolveOptions::default();
        let e = solve_alpha(&m, &f, &bg, &opts).unwrap();
        // Central differences of the root, independent value 0.54974741...
        let h = 1e-6;
        let mut total = 0.0;
        for i in 0..2 {
            let bump = |dm: f64, db: f64| {
                let mut counts = m.counts().to_vec();
                let mut noise = bg.values().to_vec();
                counts[i] += dm;
                noise[i] += db;
                solve_alpha(
                    &Spectrum::new(counts).unwrap(),
                    &f,
                    &NoiseSequence::from_values(noise).unwrap(),
                    &opts,
                )
                .unwrap()
                .alpha
            };
            let dm = (bump(h, 0.0) - bump(-h, 0.0)) / (2.0 * h);
            let db = (bump(0.0, h) - bump(0.0, -h)) / (2.0 * h);
            total += dm * dm * e.alpha * f.values()[i] + db * db;
        }
        let fd = total.sqrt();
        assert!((fd - 0.549_747_4).abs() < 1e-6, "{fd}");
        assert!((e.delta_alpha - fd).abs() <= 1e-6 * fd, "{} vs {fd}", e.delta_alpha);
    }
}
