//! Replicate studies: one synthesized spectrum re-estimated with many fresh
//! external noise sequences, and a ground-truth comparison across spectra.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    ls_estimate, solve_alpha, Estimate, SolveOptions, UncertaintyVariant, WeightMode,
};
use crate::model::{
    gaussian_sequence, make_sinusoid_signal, synthesize_spectrum, NoiseSequence, SignalModel,
    SinusoidParams, Spectrum,
};
use crate::par::{map_indices, Execution};
use crate::rng::split_seed;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub signal: SinusoidParams,
    pub alpha_true: f64,
    /// Seeds the noise that builds the synthesized spectrum.
    pub data_seed: u64,
    /// Base seed; replicate `k` draws from `split_seed(study_seed, k)`.
    pub study_seed: u64,
    pub replicates: usize,
    pub standardize: bool,
    /// Weights of the least-squares baseline.
    pub weights: WeightMode,
    pub uncertainty_variant: UncertaintyVariant,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            signal: SinusoidParams::default(),
            alpha_true: 1.0,
            data_seed: 1,
            study_seed: 2,
            replicates: 10,
            standardize: false,
            weights: WeightMode::default(),
            uncertainty_variant: UncertaintyVariant::default(),
        }
    }
}

impl StudyConfig {
    /// Seed of replicate `k` (1-based).
    pub fn replicate_seed(&self, k: usize) -> u64 {
        split_seed(self.study_seed, k as u64)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_true > 0.0 && self.alpha_true.is_finite()) {
            return Err(Error::invalid("alpha_true", format!("must be positive, got {}", self.alpha_true)));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("replicates", "must be at least 1"));
        }
        if let Some(k) = (1..=self.replicates).find(|&k| self.replicate_seed(k) == self.data_seed) {
            return Err(Error::invalid(
                "data_seed",
                format!("collides with the noise stream of replicate {k}; pick another seed"),
            ));
        }
        Ok(())
    }
}

/// The template, data noise and synthesized spectrum a study works on.
#[derive(Debug, Clone)]
pub struct StudyInputs {
    pub signal: SignalModel,
    pub data_noise: NoiseSequence,
    pub spectrum: Spectrum,
}

pub fn study_inputs(config: &StudyConfig) -> Result<StudyInputs> {
    let signal = make_sinusoid_signal(&config.signal)?;
    let data_noise = gaussian_sequence(config.data_seed, signal.len(), config.standardize)?;
    let spectrum = synthesize_spectrum(&signal, config.alpha_true, &data_noise)?;
    Ok(StudyInputs {
        signal,
        data_noise,
        spectrum,
    })
}

/// Noise sequence of replicate `k` (1-based).
pub fn replicate_noise(config: &StudyConfig, k: usize) -> Result<NoiseSequence> {
    gaussian_sequence(
        config.replicate_seed(k),
        config.signal.channels,
        config.standardize,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateReport {
    pub config: StudyConfig,
    pub ls_baseline: Estimate,
    pub replicate_alphas: Vec<f64>,
    pub per_replicate_uncertainties: Vec<f64>,
    pub positive_roots: Vec<usize>,
    pub seeds_used: Vec<u64>,
    pub mean: f64,
    /// Absent for a single replicate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_std: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub sample_std: Option<f64>,
}

/// Mean and sample standard deviation (denominator `len - 1`).
pub fn aggregate(values: &[f64]) -> Result<Aggregate> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    let mean = stats::mean(values);
    Ok(Aggregate {
        mean,
        sample_std: stats::sample_std(values, mean),
    })
}

fn solve_options(config: &StudyConfig) -> SolveOptions {
    SolveOptions {
        variant: config.uncertainty_variant,
        ..SolveOptions::default()
    }
}

pub fn run_study(config: &StudyConfig) -> Result<ReplicateReport> {
    run_study_with(config, Execution::default())
}

/// Runs the replicate protocol. The report is identical for every
/// `execution`; a failing replicate aborts the study with its index.
pub fn run_study_with(config: &StudyConfig, execution: Execution) -> Result<ReplicateReport> {
    config.validate()?;
    let inputs = study_inputs(config)?;
    let ls_baseline = ls_estimate(&inputs.spectrum, &inputs.signal, config.weights)?;
    let options = solve_options(config);

    let outcomes = map_indices(1..config.replicates + 1, execution, |k| {
        replicate_noise(config, k)
            .and_then(|noise| solve_alpha(&inputs.spectrum, &inputs.signal, &noise, &options))
            .map_err(|e| Error::Replicate {
                index: k,
                source: Box::new(e),
            })
    });
    let estimates = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let replicate_alphas: Vec<f64> = estimates.iter().map(|e| e.alpha).collect();
    let Aggregate { mean, sample_std } = aggregate(&replicate_alphas)?;
    Ok(ReplicateReport {
        config: config.clone(),
        ls_baseline,
        per_replicate_uncertainties: estimates.iter().map(|e| e.delta_alpha).collect(),
        positive_roots: estimates.iter().map(|e| e.positive_roots.unwrap_or(0)).collect(),
        seeds_used: (1..=config.replicates).map(|k| config.replicate_seed(k)).collect(),
        replicate_alphas,
        mean,
        sample_std,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedRecovery {
    pub alpha_hat: f64,
    pub rel_error: f64,
}

/// Synthesizes a spectrum from `seed` and solves with that same noise.
pub fn matched_recovery_check(params: &SinusoidParams, alpha_true: f64, seed: u64) -> Result<MatchedRecovery> {
    let signal = make_sinusoid_signal(params)?;
    let noise = gaussian_sequence(seed, signal.len(), false)?;
    let spectrum = synthesize_spectrum(&signal, alpha_true, &noise)?;
    let alpha_hat = solve_alpha(&spectrum, &signal, &noise, &SolveOptions::default())?.alpha;
    Ok(MatchedRecovery {
        alpha_hat,
        rel_error: (alpha_hat - alpha_true).abs() / alpha_true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub trial: usize,
    pub data_seed: u64,
    pub study_seed: u64,
    pub ls_alpha: f64,
    pub ls_delta_alpha: f64,
    pub ls_abs_error: f64,
    pub study_mean: f64,
    pub study_sample_std: Option<f64>,
    pub study_abs_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl Quantiles {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let mut v: Vec<f64> = values.collect();
        v.sort_by(f64::total_cmp);
        Self {
            min: v[0],
            q25: stats::quantile_sorted(&v, 0.25),
            median: stats::quantile_sorted(&v, 0.5),
            q75: stats::quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub ls_abs_error: Quantiles,
    pub study_abs_error: Quantiles,
    pub study_sample_std: Option<Quantiles>,
    /// Spread of the least-squares estimate across independent spectra.
    pub ls_empirical_std: Option<f64>,
    pub ls_median_delta_alpha: f64,
    /// Median LS error over median study-mean error; above 1 favours the
    /// replicate protocol. Absent when the study-mean median error is zero.
    pub improvement_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub config: StudyConfig,
    pub trials: usize,
    pub rows: Vec<ComparisonRow>,
    pub summary: ComparisonSummary,
}

const TRIAL_STUDY_DOMAIN: u64 = 0x5bd1_e995_7f4a_7c15;

/// Repeats the replicate protocol over `trials` independent spectra and
/// measures both estimators against the known amplitude.
pub fn compare_estimators(config: &StudyConfig, trials: usize, execution: Execution) -> Result<Comparison> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    config.validate()?;
    let outcomes = map_indices(1..trials + 1, execution, |t| {
        let trial_config = StudyConfig {
            data_seed: split_seed(config.data_seed, t as u64),
            study_seed: split_seed(config.study_seed ^ TRIAL_STUDY_DOMAIN, t as u64),
            ..config.clone()
        };
        let report = run_study_with(&trial_config, Execution::Serial)?;
        Ok(ComparisonRow {
            trial: t,
            data_seed: trial_config.data_seed,
            study_seed: trial_config.study_seed,
            ls_alpha: report.ls_baseline.alpha,
            ls_delta_alpha: report.ls_baseline.delta_alpha,
            ls_abs_error: (report.ls_baseline.alpha - config.alpha_true).abs(),
            study_mean: report.mean,
            study_sample_std: report.sample_std,
            study_abs_error: (report.mean - config.alpha_true).abs(),
        })
    });
    let rows = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let ls_abs_error = Quantiles::of(rows.iter().map(|r| r.ls_abs_error));
    let study_abs_error = Quantiles::of(rows.iter().map(|r| r.study_abs_error));
    let stds: Vec<f64> = rows.iter().filter_map(|r| r.study_sample_std).collect();
    let ls_alphas: Vec<f64> = rows.iter().map(|r| r.ls_alpha).collect();
    let summary = ComparisonSummary {
        study_sample_std: (!stds.is_empty()).then(|| Quantiles::of(stds.into_iter())),
        ls_empirical_std: aggregate(&ls_alphas)?.sample_std,
        ls_median_delta_alpha: Quantiles::of(rows.iter().map(|r| r.ls_delta_alpha)).median,
        improvement_ratio: (study_abs_error.median > 0.0)
            .then(|| ls_abs_error.median / study_abs_error.median),
        ls_abs_error,
        study_abs_error,
    };
    Ok(Comparison {
        config: config.clone(),
        trials,
        rows,
        summary,
    })
}
