//! `idcurve` command line.
//!
//! Exit codes: 0 on success, 1 for invalid input or arguments, 2 for
//! filesystem errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    build_curve, compare_paradigms, shot_sweep, sft_trajectory, AucSummary, IdCurve, SftCheckpoint,
    DEFAULT_NEAR_PEAK,
};
use crate::error::{Error, Result};
use crate::estimators::{stability, Estimator, DEFAULT_DISCARD_FRACTION, DEFAULT_MLE_K};
use crate::par;
use crate::synthetic::{generate, ManifoldKind, ManifoldSpec};
use crate::tensor_io::{read_cloud, read_manifest, write_cloud};

pub const THREADS_ENV: &str = "IDCURVE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "idcurve", version, about = "Intrinsic dimension curves for representation point clouds")]
pub struct Cli {
    /// Worker threads; 0 uses every core. Falls back to IDCURVE_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic manifold of known dimension into an IDT1 file.
    Synth(SynthArgs),
    /// Estimate the intrinsic dimension of one IDT1 cloud.
    Estimate(EstimateArgs),
    /// Estimate every layer listed in a run manifest.
    Curve(CurveArgs),
    /// Normalized AUC of a curve (a curve report or a JSON array of IDs).
    Auc(AucArgs),
    /// AUC over fine-tuning checkpoints, train vs validation.
    SftTrajectory(SftArgs),
    /// AUC and accuracy peaks over a k-shot sweep.
    ShotSweep(SweepArgs),
    /// Pairwise AUC differences and distributions across paradigms.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorChoice {
    Twonn,
    Mle,
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    #[arg(long, value_enum, default_value_t = EstimatorChoice::Twonn)]
    pub estimator: EstimatorChoice,
    /// Fraction of the largest neighbor ratios TwoNN leaves out of the fit.
    #[arg(long, default_value_t = DEFAULT_DISCARD_FRACTION)]
    pub discard_fraction: f64,
    /// Neighborhood size for the MLE estimator.
    #[arg(long, default_value_t = DEFAULT_MLE_K)]
    pub mle_k: usize,
}

impl EstimatorArgs {
    pub fn estimator(&self) -> Estimator {
        match self.estimator {
            EstimatorChoice::Twonn => Estimator::TwoNn {
                discard_fraction: self.discard_fraction,
            },
            EstimatorChoice::Mle => Estimator::mle(self.mle_k),
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub intrinsic_dim: usize,
    #[arg(long)]
    pub ambient_dim: usize,
    #[arg(long, default_value_t = 5000)]
    pub n_points: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Also report the spread over this many random subsamples.
    #[arg(long)]
    pub resamples: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub subsample_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, short)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AucArgs {
    #[arg(long, short)]
    pub curve: PathBuf,
    /// Write the full summary as JSON here.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SftArgs {
    /// Curve report of the training cloud, one per checkpoint, in step order.
    #[arg(long, required = true)]
    pub train: Vec<PathBuf>,
    /// Curve report of the validation cloud, paired by position with --train.
    #[arg(long, required = true)]
    pub val: Vec<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Curve reports of ICL runs, in increasing k.
    #[arg(long, required = true)]
    pub curve: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_NEAR_PEAK)]
    pub near_peak: f64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Curve reports or AUC summaries, any mix of paradigms.
    #[arg(long, required = true)]
    pub curve: Vec<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct EstimateReport {
    input: String,
    n_points: usize,
    dim: usize,
    estimate: crate::estimators::IdEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    stability: Option<crate::estimators::StabilityReport>,
}

/// Accepted inputs wherever a curve is expected.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CurveInput {
    Values(Vec<f64>),
    Curve(IdCurve),
    Summary(AucSummary),
}

fn load_json_input(path: &Path) -> Result<CurveInput> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|_| {
        Error::Format(format!(
            "{}: expected a curve report, an AUC summary or a JSON array of ID values",
            path.display()
        ))
    })
}

fn load_curve(path: &Path) -> Result<IdCurve> {
    match load_json_input(path)? {
        CurveInput::Curve(c) => {
            c.validate()?;
            Ok(c)
        }
        _ => Err(Error::Format(format!("{}: expected a curve report", path.display()))),
    }
}

fn load_summary(path: &Path) -> Result<AucSummary> {
    match load_json_input(path)? {
        CurveInput::Values(v) => AucSummary::from_values(&v),
        CurveInput::Curve(c) => {
            c.validate()?;
            c.summary()
        }
        CurveInput::Summary(s) => Ok(s),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `json` to `output`; without a path it becomes the text for stdout.
fn emit(output: Option<&Path>, json: String) -> Result<String> {
    match output {
        Some(p) => write_file(p, &json).map(|()| String::new()),
        None => Ok(json),
    }
}

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v.trim().parse().map_err(|_| {
            Error::InvalidArgument(format!("{THREADS_ENV}={v:?} is not a thread count"))
        }),
        _ => Ok(0),
    }
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let threads = resolve_threads(cli.threads)?;
    let text = par::with_threads(threads, || dispatch(&cli.command))?;
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

/// Runs one subcommand and returns what it prints.
fn dispatch(command: &Command) -> Result<String> {
    match command {
        Command::Synth(a) => {
            let spec = ManifoldSpec {
                kind: a.kind.parse::<ManifoldKind>()?,
                intrinsic_dim: a.intrinsic_dim,
                ambient_dim: a.ambient_dim,
                n_points: a.n_points,
                noise_sigma: a.noise,
                seed: a.seed,
            };
            write_cloud(&generate(&spec)?, &a.output)?;
            Ok(String::new())
        }
        Command::Estimate(a) => {
            let cloud = read_cloud(&a.input)?;
            let estimator = a.estimator.estimator();
            let estimate = estimator.estimate(&cloud)?;
            let stability = a
                .resamples
                .map(|r| stability(&cloud, &estimator, r, a.subsample_fraction, a.seed))
                .transpose()?;
            let report = EstimateReport {
                input: a.input.display().to_string(),
                n_points: cloud.n_points(),
                dim: cloud.dim(),
                estimate,
                stability,
            };
            emit(a.output.as_deref(), to_json(&report))
        }
        Command::Curve(a) => {
            let manifest = read_manifest(&a.manifest)?;
            let curve = build_curve(&manifest, &a.estimator.estimator())?;
            emit(a.output.as_deref(), to_json(&curve))
        }
        Command::Auc(a) => {
            let summary = load_summary(&a.curve)?;
            if let Some(p) = &a.output {
                write_file(p, &to_json(&summary))?;
            }
            Ok(format!("{}\n", summary.normalized_auc))
        }
        Command::SftTrajectory(a) => {
            if a.train.len() != a.val.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} --train curves but {} --val curves",
                    a.train.len(),
                    a.val.len()
                )));
            }
            let checkpoints = a
                .train
                .iter()
                .zip(&a.val)
                .map(|(t, v)| SftCheckpoint::from_curves(&load_curve(t)?, &load_curve(v)?))
                .collect::<Result<Vec<_>>>()?;
            let report = sft_trajectory(&checkpoints)?;
            if let Some(p) = &a.csv {
                #[derive(Serialize)]
                struct Row {
                    step: u64,
                    train_auc: f64,
                    val_auc: f64,
                    val_accuracy: Option<f64>,
                }
                let rows = (0..report.steps.len()).map(|i| Row {
                    step: report.steps[i],
                    train_auc: report.train_auc[i],
                    val_auc: report.val_auc[i],
                    val_accuracy: report.val_accuracy[i],
                });
                write_file(p, &csv_string(rows)?)?;
            }
            emit(a.output.as_deref(), to_json(&report))
        }
        Command::ShotSweep(a) => {
            let summaries = a
                .curve
                .iter()
                .map(|p| load_summary(p))
                .collect::<Result<Vec<_>>>()?;
            let report = shot_sweep(&summaries, None, a.near_peak)?;
            if let Some(p) = &a.csv {
                #[derive(Serialize)]
                struct Row {
                    k: u64,
                    normalized_auc: f64,
                    accuracy: f64,
                }
                let rows = (0..report.ks.len()).map(|i| Row {
                    k: report.ks[i],
                    normalized_auc: report.auc[i],
                    accuracy: report.accuracy[i],
                });
                write_file(p, &csv_string(rows)?)?;
            }
            emit(a.output.as_deref(), to_json(&report))
        }
        Command::Compare(a) => {
            let summaries = a
                .curve
                .iter()
                .map(|p| load_summary(p))
                .collect::<Result<Vec<_>>>()?;
            let report = compare_paradigms(&summaries)?;
            if let Some(p) = &a.csv {
                write_file(p, &report.to_csv()?)?;
            }
            emit(a.output.as_deref(), to_json(&report))
        }
    }
}

/// Parses `argv` (program name first) and runs it, returning the exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "idcurve: {e}");
            if e.is_io() {
                2
            } else {
                1
            }
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(std::iter::once("idcurve").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn defaults() {
        let cli = Cli::try_parse_from(["idcurve", "estimate", "--input", "x.idt"]).unwrap();
        let Command::Estimate(a) = cli.command else { panic!() };
        assert_eq!(a.estimator.estimator(), Estimator::twonn());
        assert_eq!(a.estimator.mle_k, 50);
        assert_eq!(a.seed, 0);
        assert_eq!(cli.threads, None);
    }

    #[test]
    fn unknown_flag_is_validation_error() {
        let (code, _, err) = run_capture(&["estimate", "--input", "x.idt", "--bogus"]);
        assert_eq!(code, 1);
        assert!(err.contains("--bogus"));
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("shot-sweep"));
    }

    #[test]
    fn missing_input_is_io_error() {
        let (code, _, err) = run_capture(&["estimate", "--input", "/definitely/missing.idt"]);
        assert_eq!(code, 2);
        assert!(err.starts_with("idcurve: "));
    }

    #[test]
    fn bad_kind_is_validation_error() {
        let (code, _, _) = run_capture(&[
            "synth", "--kind", "torus", "--intrinsic-dim", "2", "--ambient-dim", "5", "-o", "/tmp/x",
        ]);
        assert_eq!(code, 1);
    }
}
