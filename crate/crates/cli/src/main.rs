//! `modlik`: simulate spectra, fit amplitudes, run replicate studies and
//! check residuals.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use modlik::io::{
    read_noise, read_spectrum, write_noise, write_spectrum, write_table, Column, DiagnosisReport,
    FitReport, NoiseSource, ReportBody, ReportDocument,
};
use modlik::study::{replicate_noise, study_inputs};
use modlik::{
    compare_estimators, gaussian_sequence, ls_estimate, make_sinusoid_signal, residual_diagnostics,
    run_study_with, score_reduced, solve_alpha, synthesize_spectrum, ErrorClass, Execution, Init,
    Method, SinusoidParams, SolveOptions, StudyConfig, UncertaintyVariant, WeightMode,
};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "modlik", version, about = "Amplitude estimation for counting spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a spectrum from the sinusoidal template and seeded noise.
    Simulate(SimulateArgs),
    /// Fit the amplitude of a spectrum file.
    Fit(FitArgs),
    /// Re-estimate one synthesized spectrum with many fresh noise sequences.
    Study(StudyArgs),
    /// Repeat the study over independent spectra and compare with least squares.
    Compare(CompareArgs),
    /// Residual checks for a spectrum at a given amplitude.
    Diagnose(DiagnoseArgs),
}

#[derive(Args, Clone)]
struct SignalArgs {
    #[arg(long, default_value_t = SinusoidParams::DEFAULT_AMPLITUDE)]
    amplitude: f64,
    #[arg(long, default_value_t = SinusoidParams::DEFAULT_OFFSET)]
    offset: f64,
    /// Channels per radian.
    #[arg(long, default_value_t = SinusoidParams::DEFAULT_SCALE)]
    scale: f64,
    #[arg(long, default_value_t = SinusoidParams::DEFAULT_CHANNELS)]
    channels: usize,
}

impl SignalArgs {
    fn params(&self) -> SinusoidParams {
        SinusoidParams {
            amplitude: self.amplitude,
            offset: self.offset,
            scale: self.scale,
            channels: self.channels,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightArg {
    Measured,
    Model,
    Unit,
}

#[derive(Args, Clone)]
struct WeightArgs {
    /// Per-channel variances.
    #[arg(long, value_enum)]
    weights: Option<WeightArg>,
    /// Lower bound on measured variances.
    #[arg(long, default_value_t = WeightMode::DEFAULT_FLOOR)]
    floor: f64,
}

impl WeightArgs {
    fn mode_or(&self, default: WeightArg) -> WeightMode {
        match self.weights.unwrap_or(default) {
            WeightArg::Measured => WeightMode::Measured { floor: self.floor },
            WeightArg::Model => WeightMode::Model,
            WeightArg::Unit => WeightMode::Unit,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum UncertaintyArg {
    /// Per-channel sensitivities, squared then summed.
    Standard,
    /// Channel sums squared.
    #[value(name = "paper-literal", alias = "squared-sums")]
    SquaredSums,
    /// Channel sums squared, legacy closed-form coefficients.
    LegacyClosedForm,
}

impl From<UncertaintyArg> for UncertaintyVariant {
    fn from(v: UncertaintyArg) -> Self {
        match v {
            UncertaintyArg::Standard => UncertaintyVariant::Standard,
            UncertaintyArg::SquaredSums => UncertaintyVariant::SquaredSums,
            UncertaintyArg::LegacyClosedForm => UncertaintyVariant::LegacyClosedForm,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    signal: SignalArgs,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Rescale the noise to sample mean 0 and sample std 1.
    #[arg(long)]
    standardize: bool,
    /// Spectrum file to write.
    #[arg(long)]
    output: PathBuf,
    /// Noise file to write.
    #[arg(long)]
    noise_output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ls,
    Modlik,
}

#[derive(Args)]
struct FitArgs {
    spectrum: PathBuf,
    #[arg(long, value_enum, default_value = "modlik")]
    method: MethodArg,
    /// External noise sequence from a noise file.
    #[arg(long, conflicts_with = "noise_seed")]
    noise_file: Option<PathBuf>,
    /// External noise sequence drawn from this seed.
    #[arg(long)]
    noise_seed: Option<u64>,
    /// Standardize a seeded noise sequence.
    #[arg(long)]
    standardize: bool,
    /// Least-squares weights (ls, default measured) or uncertainty weights
    /// (modlik, default model).
    #[command(flatten)]
    weights: WeightArgs,
    #[arg(long, value_enum, default_value = "standard")]
    uncertainty: UncertaintyArg,
    /// Starting amplitude; least squares when omitted.
    #[arg(long)]
    init: Option<f64>,
    #[arg(long, default_value_t = modlik::estimators::DEFAULT_REL_TOL)]
    rel_tol: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct StudyConfigArgs {
    #[command(flatten)]
    signal: SignalArgs,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Seed of the noise that builds the spectrum.
    #[arg(long, default_value_t = 1)]
    data_seed: u64,
    /// Base seed of the replicate noise sequences.
    #[arg(long, default_value_t = 2)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    #[arg(long)]
    standardize: bool,
    /// Least-squares baseline weights (default measured).
    #[command(flatten)]
    weights: WeightArgs,
    #[arg(long, value_enum, default_value = "standard")]
    uncertainty: UncertaintyArg,
    /// Run on one thread.
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

impl StudyConfigArgs {
    fn config(&self) -> StudyConfig {
        StudyConfig {
            signal: self.signal.params(),
            alpha_true: self.alpha,
            data_seed: self.data_seed,
            study_seed: self.seed,
            replicates: self.replicates,
            standardize: self.standardize,
            weights: self.weights.mode_or(WeightArg::Measured),
            uncertainty_variant: self.uncertainty.into(),
        }
    }

    fn execution(&self) -> Execution {
        if self.serial {
            Execution::Serial
        } else {
            Execution::Parallel
        }
    }
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    common: StudyConfigArgs,
    /// Directory for plot-ready tables.
    #[arg(long)]
    emit_plot_data: Option<PathBuf>,
    /// Per-replicate table file.
    #[arg(long)]
    replicate_table: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: StudyConfigArgs,
    #[arg(long, default_value_t = 100)]
    trials: usize,
}

#[derive(Args)]
struct DiagnoseArgs {
    spectrum: PathBuf,
    /// Amplitude to test; measured-weight least squares when omitted.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn emit(doc: &ReportDocument, output: Option<&Path>) -> Result<()> {
    let text = doc.to_json()?;
    match output {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let signal = make_sinusoid_signal(&args.signal.params())?;
    let noise = gaussian_sequence(args.seed, signal.len(), args.standardize)?;
    let spectrum = synthesize_spectrum(&signal, args.alpha, &noise)?;
    let mut w = create(&args.output)?;
    write_spectrum(&mut w, &signal, &spectrum)?;
    w.flush()?;
    let mut w = create(&args.noise_output)?;
    write_noise(&mut w, &noise)?;
    w.flush()?;
    Ok(())
}

fn fit(args: FitArgs) -> Result<()> {
    let (signal, spectrum) = read_spectrum(open(&args.spectrum)?)
        .with_context(|| format!("in {}", args.spectrum.display()))?;
    let spectrum_path = args.spectrum.display().to_string();
    let report = match args.method {
        MethodArg::Ls => {
            if args.noise_file.is_some() || args.noise_seed.is_some() {
                bail!(modlik::Error::InvalidParameter {
                    name: "method",
                    reason: "least squares takes no external noise".into(),
                });
            }
            let weights = args.weights.mode_or(WeightArg::Measured);
            FitReport {
                spectrum_path,
                channels: signal.len(),
                method: Method::LeastSquares,
                weights,
                noise: None,
                uncertainty_variant: None,
                rel_tol: None,
                ls_seed: None,
                estimate: ls_estimate(&spectrum, &signal, weights)?,
            }
        }
        MethodArg::Modlik => {
            let (noise, source) = match (&args.noise_file, args.noise_seed) {
                (Some(path), _) => {
                    let noise =
                        read_noise(open(path)?).with_context(|| format!("in {}", path.display()))?;
                    let source = NoiseSource::File {
                        path: path.display().to_string(),
                        seed: noise.seed(),
                        standardized: noise.standardized(),
                    };
                    (noise, source)
                }
                (None, Some(seed)) => (
                    gaussian_sequence(seed, signal.len(), args.standardize)?,
                    NoiseSource::Seed {
                        seed,
                        standardized: args.standardize,
                    },
                ),
                (None, None) => bail!(modlik::Error::InvalidParameter {
                    name: "noise",
                    reason: "modlik needs --noise-file or --noise-seed".into(),
                }),
            };
            let weights = args.weights.mode_or(WeightArg::Model);
            let options = SolveOptions {
                init: args.init.map_or(Init::Auto, Init::Value),
                rel_tol: args.rel_tol,
                uncertainty_weights: weights,
                variant: args.uncertainty.into(),
            };
            let ls_seed = match args.init {
                None => Some(ls_estimate(&spectrum, &signal, WeightMode::measured())?),
                Some(_) => None,
            };
            FitReport {
                spectrum_path,
                channels: signal.len(),
                method: Method::ModifiedLikelihood,
                weights,
                noise: Some(source),
                uncertainty_variant: Some(options.variant),
                rel_tol: Some(options.rel_tol),
                ls_seed,
                estimate: solve_alpha(&spectrum, &signal, &noise, &options)?,
            }
        }
    };
    emit(&ReportDocument::new(ReportBody::Fit(report)), args.output.as_deref())
}

/// Relative half-width of the emitted score curve around the root.
const CURVE_HALF_WIDTH: f64 = 0.05;
const CURVE_POINTS: usize = 401;

fn write_plot_data(dir: &Path, config: &StudyConfig, report: &modlik::ReplicateReport) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let inputs = study_inputs(config)?;
    let n = inputs.signal.len();
    let channels = Column::Index((0..n as u64).collect());

    let mut w = create(&dir.join("signal_spectrum.csv"))?;
    write_spectrum(&mut w, &inputs.signal, &inputs.spectrum)?;
    w.flush()?;

    let first = replicate_noise(config, 1)?;
    let mut w = create(&dir.join("noise_sequences.csv"))?;
    write_table(
        &mut w,
        &[
            ("data_seed", config.data_seed.to_string()),
            ("replicate_1_seed", config.replicate_seed(1).to_string()),
        ],
        &[
            ("channel", channels),
            ("bg_data", Column::Real(inputs.data_noise.values().to_vec())),
            ("bg_replicate_1", Column::Real(first.values().to_vec())),
        ],
    )?;
    w.flush()?;

    let root = report.replicate_alphas[0];
    let lo = root * (1.0 - CURVE_HALF_WIDTH);
    let hi = root * (1.0 + CURVE_HALF_WIDTH);
    let alphas: Vec<f64> = (0..CURVE_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (CURVE_POINTS - 1) as f64)
        .collect();
    let scores = alphas
        .iter()
        .map(|&a| score_reduced(a, &inputs.spectrum, &inputs.signal, &first))
        .collect::<modlik::Result<Vec<f64>>>()?;
    let mut w = create(&dir.join("score_curve.csv"))?;
    write_table(
        &mut w,
        &[("replicate", "1".into()), ("root_alpha", modlik::io::format_real(root))],
        &[("alpha", Column::Real(alphas)), ("score", Column::Real(scores))],
    )?;
    w.flush()?;

    let k = report.replicate_alphas.len();
    let mut w = create(&dir.join("replicates.csv"))?;
    write_table(
        &mut w,
        &[],
        &[
            ("replicate", Column::Index((1..=k as u64).collect())),
            ("alpha", Column::Real(report.replicate_alphas.clone())),
            ("delta_alpha", Column::Real(report.per_replicate_uncertainties.clone())),
            ("ls_alpha", Column::Real(vec![report.ls_baseline.alpha; k])),
            ("alpha_true", Column::Real(vec![config.alpha_true; k])),
        ],
    )?;
    w.flush()?;
    Ok(())
}

fn study(args: StudyArgs) -> Result<()> {
    let config = args.common.config();
    let report = run_study_with(&config, args.common.execution())?;
    if let Some(path) = &args.replicate_table {
        let mut w = create(path)?;
        write_table(
            &mut w,
            &[],
            &[
                ("replicate", Column::Index((1..=report.replicate_alphas.len() as u64).collect())),
                ("seed", Column::Index(report.seeds_used.clone())),
                ("alpha", Column::Real(report.replicate_alphas.clone())),
                ("delta_alpha", Column::Real(report.per_replicate_uncertainties.clone())),
                (
                    "positive_roots",
                    Column::Index(report.positive_roots.iter().map(|&r| r as u64).collect()),
                ),
            ],
        )?;
        w.flush()?;
    }
    if let Some(dir) = &args.emit_plot_data {
        write_plot_data(dir, &config, &report)?;
    }
    emit(
        &ReportDocument::new(ReportBody::Study(report)),
        args.common.output.as_deref(),
    )
}

fn compare(args: CompareArgs) -> Result<()> {
    let config = args.common.config();
    let comparison = compare_estimators(&config, args.trials, args.common.execution())?;
    emit(
        &ReportDocument::new(ReportBody::Comparison(comparison)),
        args.common.output.as_deref(),
    )
}

fn diagnose(args: DiagnoseArgs) -> Result<()> {
    let (signal, spectrum) = read_spectrum(open(&args.spectrum)?)
        .with_context(|| format!("in {}", args.spectrum.display()))?;
    let (alpha, alpha_source) = match args.alpha {
        Some(a) => (a, "given"),
        None => (
            ls_estimate(&spectrum, &signal, WeightMode::measured())?.alpha,
            "least_squares",
        ),
    };
    let residuals = residual_diagnostics(&spectrum, &signal, alpha)?;
    let checks = residuals.checks();
    let report = DiagnosisReport {
        spectrum_path: args.spectrum.display().to_string(),
        alpha_source: alpha_source.into(),
        warn: !checks.all_pass(),
        checks,
        residuals,
    };
    emit(&ReportDocument::new(ReportBody::Diagnosis(report)), args.output.as_deref())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<modlik::Error>() {
            return match e.class() {
                ErrorClass::Usage => EXIT_USAGE,
                ErrorClass::Io => EXIT_IO,
                ErrorClass::Numerical => EXIT_NUMERICAL,
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return EXIT_IO;
        }
    }
    EXIT_USAGE
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Fit(args) => fit(args),
        Command::Study(args) => study(args),
        Command::Compare(args) => compare(args),
        Command::Diagnose(args) => diagnose(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
