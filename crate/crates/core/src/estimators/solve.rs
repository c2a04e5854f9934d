//! Root search for the reduced score.
//!
//! With `u = sqrt(alpha)`, `u * score(u^2)` is the cubic
//! `-S_F u^3 - (S_sqrtF_bg / 2) u^2 + (S_m + S_bg2 / 2) u - S_m_bg_sqrtF / 2`,
//! and for `u > 0` it has the sign of the score. The search interval
//! `[u_seed / 10, 10 u_seed]` (alpha within a factor 100 of the seed) is split
//! at the cubic's stationary points into monotone pieces; each piece holds at
//! most one root, which is isolated by bisection.

use serde::{Deserialize, Serialize};

use super::{
    alpha_uncertainty, check_lengths, check_noise, ls_estimate, Estimate, Method, ReducedSums,
    UncertaintyVariant, WeightMode,
};
use crate::error::{Error, Result};
use crate::model::{NoiseSequence, SignalModel, Spectrum};

pub const DEFAULT_REL_TOL: f64 = 1e-12;

/// Ratio between the seed and either end of the alpha search interval.
const BRACKET_SPAN: f64 = 100.0;

/// Starting amplitude for the root search.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Measured-weight least squares (floor 1).
    #[default]
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub init: Init,
    pub rel_tol: f64,
    /// Variances used when propagating the uncertainty of the root.
    pub uncertainty_weights: WeightMode,
    pub variant: UncertaintyVariant,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            init: Init::Auto,
            rel_tol: DEFAULT_REL_TOL,
            uncertainty_weights: WeightMode::Model,
            variant: UncertaintyVariant::Standard,
        }
    }
}

fn eval_cubic([a, b, c, d]: [f64; 4], u: f64) -> f64 {
    ((a * u + b) * u + c) * u + d
}

/// Real roots of `a x^2 + b x + c` (a != 0), ascending.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = if q == 0.0 {
        vec![0.0]
    } else {
        vec![q / a, c / q]
    };
    roots.sort_by(f64::total_cmp);
    roots
}

/// Bisection on `[lo, hi]` with `p(lo)` and `p(hi)` of opposite signs. Stops
/// once the bracket is narrower than `tol * mid` or cannot shrink further.
fn bisect(p: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut p_lo = p(lo);
    for _ in 0..1100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= tol * mid {
            break;
        }
        let p_mid = p(mid);
        if p_mid == 0.0 {
            return mid;
        }
        if (p_mid > 0.0) == (p_lo > 0.0) {
            lo = mid;
            p_lo = p_mid;
        } else {
            hi = mid;
        }
    }
    let (a, b) = (p(lo).abs(), p(hi).abs());
    if a <= b {
        lo
    } else {
        hi
    }
}

/// Every root of the cubic in `[u_lo, u_hi]`, ascending, each reported once.
pub(crate) fn cubic_roots_in(coef: [f64; 4], u_lo: f64, u_hi: f64, tol: f64) -> Vec<f64> {
    let p = |u| eval_cubic(coef, u);
    let [a, b, c, _] = coef;
    let stationary = if a != 0.0 {
        quadratic_roots(3.0 * a, 2.0 * b, c)
    } else if b != 0.0 {
        vec![-c / (2.0 * b)]
    } else {
        Vec::new()
    };
    let mut knots = vec![u_lo];
    knots.extend(stationary.into_iter().filter(|&s| s > u_lo && s < u_hi));
    knots.push(u_hi);

    let mut roots: Vec<f64> = Vec::new();
    let mut push = |r: f64| {
        if roots.last() != Some(&r) {
            roots.push(r);
        }
    };
    for w in knots.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (p_lo, p_hi) = (p(lo), p(hi));
        if p_lo == 0.0 {
            push(lo);
        } else if p_hi != 0.0 && (p_lo > 0.0) != (p_hi > 0.0) {
            push(bisect(p, lo, hi, tol));
        }
        if p_hi == 0.0 {
            push(hi);
        }
    }
    roots
}

/// Amplitude that zeroes the reduced score for the external sequence `noise`.
///
/// All positive roots with alpha within a factor 100 of the seed are located;
/// the one nearest the seed is returned and the count is reported in
/// [`Estimate::positive_roots`]. The uncertainty is propagated with
/// [`alpha_uncertainty`] using `options.uncertainty_weights` and
/// `options.variant`.
pub fn solve_alpha(
    spectrum: &Spectrum,
    signal: &SignalModel,
    noise: &NoiseSequence,
    options: &SolveOptions,
) -> Result<Estimate> {
    check_lengths(spectrum, signal)?;
    check_noise(noise, signal)?;
    if !(options.rel_tol > 0.0 && options.rel_tol.is_finite()) {
        return Err(Error::invalid("rel_tol", format!("must be positive, got {}", options.rel_tol)));
    }
    let seed = match options.init {
        Init::Auto => ls_estimate(spectrum, signal, WeightMode::measured())?.alpha,
        Init::Value(v) => v,
    };
    if !(seed > 0.0 && seed.is_finite()) {
        return Err(Error::NonPositiveEstimate(seed));
    }

    let sums = ReducedSums::new(spectrum, signal, noise)?;
    let u_seed = seed.sqrt();
    let span = BRACKET_SPAN.sqrt();
    let (u_lo, u_hi) = (u_seed / span, u_seed * span);
    // alpha = u^2, so a relative width of tol/4 in u is tol/2 in alpha.
    let roots = cubic_roots_in(sums.cubic(), u_lo, u_hi, 0.25 * options.rel_tol);
    let u = roots
        .iter()
        .copied()
        .min_by(|x, y| (x * x - seed).abs().total_cmp(&(y * y - seed).abs()))
        .ok_or(Error::NoRoot {
            lo: u_lo * u_lo,
            hi: u_hi * u_hi,
        })?;
    let alpha = u * u;

    let residual = sums.score(alpha).abs();
    let bound = options.rel_tol * (sums.m.abs() + 1.0);
    if residual > bound {
        return Err(Error::ScoreResidual { residual, bound });
    }
    let delta_alpha = alpha_uncertainty(
        alpha,
        spectrum,
        signal,
        noise,
        options.uncertainty_weights,
        options.variant,
    )?;
    Ok(Estimate {
        alpha,
        delta_alpha,
        method: Method::ModifiedLikelihood,
        variant: Some(options.variant),
        score_residual: Some(residual),
        positive_roots: Some(roots.len()),
        iterations: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gaussian_sequence, make_sinusoid_signal, synthesize_spectrum, SinusoidParams};

    #[test]
    fn hand_factored_cubic() {
        // -4u^3 + u^2 + 6.5u + 1.5 = -(u - 1.5)(4u^2 + 5u + 1); roots 1.5, -0.25, -1.
        let f = SignalModel::new(vec![4.0], "").unwrap();
        let m = Spectrum::new(vec![6.0]).unwrap();
        let bg = NoiseSequence::from_values(vec![-1.0]).unwrap();
        let e = solve_alpha(&m, &f, &bg, &SolveOptions::default()).unwrap();
        assert!((e.alpha - 2.25).abs() < 1e-9, "{}", e.alpha);
        assert_eq!(e.positive_roots, Some(1));
        assert_eq!(e.method, Method::ModifiedLikelihood);
    }

    #[test]
    fn zero_noise_gives_count_ratio() {
        let f = make_sinusoid_signal(&SinusoidParams::default()).unwrap();
        let data = gaussian_sequence(4, f.len(), false).unwrap();
        let m = synthesize_spectrum(&f, 3.0, &data).unwrap();
        let e = solve_alpha(&m, &f, &NoiseSequence::zeros(f.len()), &SolveOptions::default()).unwrap();
        let ratio = m.counts().iter().sum::<f64>() / f.values().iter().sum::<f64>();
        assert!((e.alpha - ratio).abs() <= 1e-12 * ratio);
    }

    #[test]
    fn matched_noise_recovers_generating_alpha() {
        let f = make_sinusoid_signal(&SinusoidParams::default()).unwrap();
        for (seed, alpha) in [(1, 0.1), (2, 1.0), (3, 5.0), (4, 100.0), (5, 0.003)] {
            let bg = gaussian_sequence(seed, f.len(), false).unwrap();
            let m = synthesize_spectrum(&f, alpha, &bg).unwrap();
            let e = solve_alpha(&m, &f, &bg, &SolveOptions::default()).unwrap();
            assert!((e.alpha - alpha).abs() <= 1e-10 * alpha, "{alpha}: {}", e.alpha);
            assert!(e.score_residual.unwrap() <= DEFAULT_REL_TOL * (m.counts().iter().sum::<f64>() + 1.0));
        }
    }

    #[test]
    fn explicit_init_moves_the_bracket() {
        let f = SignalModel::new(vec![4.0], "").unwrap();
        let m = Spectrum::new(vec![6.0]).unwrap();
        let bg = NoiseSequence::from_values(vec![-1.0]).unwrap();
        let near = SolveOptions {
            init: Init::Value(2.0),
            ..Default::default()
        };
        assert!((solve_alpha(&m, &f, &bg, &near).unwrap().alpha - 2.25).abs() < 1e-9);
        let far = SolveOptions {
            init: Init::Value(1e4),
            ..Default::default()
        };
        assert!(matches!(solve_alpha(&m, &f, &bg, &far), Err(Error::NoRoot { .. })));
        let bad = SolveOptions {
            init: Init::Value(-1.0),
            ..Default::default()
        };
        assert!(matches!(solve_alpha(&m, &f, &bg, &bad), Err(Error::NonPositiveEstimate(_))));
    }

    #[test]
    fn nonpositive_ls_seed_is_rejected() {
        let f = SignalModel::new(vec![4.0, 4.0], "").unwrap();
        let m = Spectrum::new(vec![-3.0, -1.0]).unwrap();
        let bg = NoiseSequence::zeros(2);
        assert!(matches!(
            solve_alpha(&m, &f, &bg, &SolveOptions::default()),
            Err(Error::NonPositiveEstimate(_))
        ));
    }

    #[test]
    fn three_roots_are_all_found() {
        // (u - 1)(u - 2)(u - 3) scaled by -1: -u^3 + 6u^2 - 11u + 6.
        let roots = cubic_roots_in([-1.0, 6.0, -11.0, 6.0], 0.5, 5.0, 1e-14);
        assert_eq!(roots.len(), 3);
        for (r, want) in roots.iter().zip([1.0, 2.0, 3.0]) {
            assert!((r - want).abs() < 1e-12);
        }
    }

    #[test]
    fn root_on_knot_is_counted_once() {
        // Double root at u = 1 coincides with a stationary point.
        let roots = cubic_roots_in([-1.0, 1.0, 1.0, -1.0], 0.5, 0.9999, 1e-14);
        assert!(roots.is_empty());
        let roots = cubic_roots_in([1.0, 0.0, -1.0, 0.0], 1.0, 2.0, 1e-14);
        assert_eq!(roots, vec![1.0]);
    }

    #[test]
    fn invalid_tolerance() {
        let f = SignalModel::new(vec![4.0], "").unwrap();
        let m = Spectrum::new(vec![6.0]).unwrap();
        let opts = SolveOptions {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(solve_alpha(&m, &f, &NoiseSequence::zeros(1), &opts).is_err());
    }
}
