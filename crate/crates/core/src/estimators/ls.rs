use super::{check_lengths, variances, Estimate, Method, WeightMode};
use crate::error::{Error, Result};
use crate::model::{SignalModel, Spectrum};

const MODEL_MAX_ITER: usize = 100;
const MODEL_REL_TOL: f64 = 1e-10;

fn weighted_fit(spectrum: &Spectrum, signal: &SignalModel, s2: &[f64]) -> Result<(f64, f64)> {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&m, &f), &v) in spectrum.counts().iter().zip(signal.values()).zip(s2) {
        num += m * f / v;
        den += f * f / v;
    }
    if den == 0.0 {
        return Err(Error::ZeroDenominator("weighted least squares"));
    }
    Ok((num / den, 1.0 / den.sqrt()))
}

/// Weighted least-squares amplitude and its uncertainty.
///
/// With [`WeightMode::Model`] the fit is seeded with measured weights
/// (floor of one) and re-fitted with `s2 = alpha * F` until the relative
/// change drops below 1e-10, for at most 100 re-fits.
pub fn ls_estimate(spectrum: &Spectrum, signal: &SignalModel, weights: WeightMode) -> Result<Estimate> {
    check_lengths(spectrum, signal)?;
    let estimate = |alpha, delta_alpha, iterations| Estimate {
        alpha,
        delta_alpha,
        method: Method::LeastSquares,
        variant: None,
        score_residual: None,
        positive_roots: None,
        iterations,
    };

    if weights != WeightMode::Model {
        let s2 = variances(weights, spectrum, signal, f64::NAN)?;
        let (alpha, delta) = weighted_fit(spectrum, signal, &s2)?;
        return Ok(estimate(alpha, delta, None));
    }

    let s2 = variances(WeightMode::measured(), spectrum, signal, f64::NAN)?;
    let (mut alpha, _) = weighted_fit(spectrum, signal, &s2)?;
    for iteration in 1..=MODEL_MAX_ITER {
        if alpha <= 0.0 {
            return Err(Error::NonPositiveEstimate(alpha));
        }
        let s2 = variances(WeightMode::Model, spectrum, signal, alpha)?;
        let (next, _) = weighted_fit(spectrum, signal, &s2)?;
        let converged = (next - alpha).abs() <= MODEL_REL_TOL * next.abs();
        alpha = next;
        if converged {
            if alpha <= 0.0 {
                return Err(Error::NonPositiveEstimate(alpha));
            }
            // Uncertainty at the converged amplitude.
            let s2 = variances(WeightMode::Model, spectrum, signal, alpha)?;
            let (_, delta) = weighted_fit(spectrum, signal, &s2)?;
            return Ok(estimate(alpha, delta, Some(iteration)));
        }
    }
    Err(Error::NotConverged {
        what: "model-weighted least squares",
        iterations: MODEL_MAX_ITER,
    })
}
