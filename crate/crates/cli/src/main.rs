//! `trigfit`: generate random symbolic functions, fit them with augmented
//! feature sets, decompose audio into per-frame sinusoids, and resynthesize.
//!
//! Exit codes: 0 success, 2 argument error, 3 numerical failure, 4 I/O or
//! format error.

mod cmd;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use trigfit_core::featurize::{poly_spec, product_spec, trig_spec, FeatureSpec};
use trigfit_core::sinefit::TrainingMode;

#[derive(Parser)]
#[command(name = "trigfit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random expression and write its canonical text form
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Fit feature specs to an expression's dataset and write error tables
    Fit(FitArgs),
    /// Decompose a WAV file into per-frame sinusoid parameters
    Decompose(DecomposeArgs),
    /// Resynthesize a WAV file from decomposition output
    Synth(SynthArgs),
    /// Sum of absolute deviations between two CSV columns
    Eval(EvalArgs),
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Integer-coefficient terms over sin, cos, and sin*cos
    Trig(GenerateTrigArgs),
    /// Coefficient-free products over x powers and transcendentals
    Mixed(GenerateMixedArgs),
}

#[derive(Args)]
struct GenerateTrigArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Number of terms
    #[arg(long)]
    terms: Option<usize>,
    /// Output file for the expression text
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file mirroring these flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateMixedArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Upper bound on the term count
    #[arg(long = "max-terms")]
    max_terms: Option<usize>,
    /// Highest power of x in the factor pool
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Expression file in canonical text form
    #[arg(long)]
    expr: Option<PathBuf>,
    /// Lower end of the sampling range
    #[arg(long)]
    lo: Option<f64>,
    /// Upper end of the sampling range
    #[arg(long)]
    hi: Option<f64>,
    /// Grid step
    #[arg(long)]
    step: Option<f64>,
    /// Feature spec: linear | poly:D | trig | product:D:M (repeatable)
    #[arg(long = "spec", value_parser = parse_spec_token)]
    specs: Vec<FeatureSpec>,
    /// Split seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "test-fraction")]
    test_fraction: Option<f64>,
    #[arg(long)]
    ridge: Option<f64>,
    /// Ridge retried after a rank-deficient plain fit
    #[arg(long = "ridge-fallback")]
    ridge_fallback: Option<f64>,
    /// Fail on rank deficiency instead of retrying with a ridge
    #[arg(long = "no-ridge-fallback")]
    no_ridge_fallback: bool,
    /// Guard radius around tan poles and the log-domain floor
    #[arg(long)]
    guard: Option<f64>,
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Input WAV file (16-bit PCM, mono or stereo)
    #[arg(long)]
    wav: Option<PathBuf>,
    /// Number of frames to analyze
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long = "frame-len")]
    frame_len: Option<usize>,
    /// Sinusoids fitted per frame
    #[arg(long)]
    waves: Option<usize>,
    /// Training sweeps per wave
    #[arg(long)]
    passes: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    /// Gradient mode: independent | dependent
    #[arg(long, value_parser = parse_mode)]
    mode: Option<TrainingMode>,
    /// Divisor applied to sample indices to form the raw time axis
    #[arg(long = "rate-divisor")]
    rate_divisor: Option<f64>,
    /// Use the WAV header rate as the time divisor instead
    #[arg(long = "use-header-rate")]
    use_header_rate: bool,
    /// Standardize each frame's time axis separately
    #[arg(long = "per-frame-norm")]
    per_frame_norm: bool,
    /// Worker threads (defaults to machine parallelism)
    #[arg(long, env = "TRIGFIT_THREADS")]
    threads: Option<usize>,
    /// Also export the segmented frames as CSV
    #[arg(long = "frames-csv")]
    frames_csv: Option<PathBuf>,
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Decomposition JSON produced by `decompose`
    #[arg(long)]
    fits: Option<PathBuf>,
    /// Output WAV path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ignore fitted amplitudes (unit amplitude per wave)
    #[arg(long = "no-amplitude")]
    no_amplitude: bool,
    /// Divide the superposition by the wave count
    #[arg(long)]
    divide: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// CSV holding predictions
    pred: Option<PathBuf>,
    /// CSV holding reference values
    truth: Option<PathBuf>,
    /// Prediction column: header name or zero-based index (default: last)
    #[arg(long = "pred-col")]
    pred_col: Option<String>,
    /// Reference column: header name or zero-based index (default: last)
    #[arg(long = "true-col")]
    true_col: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// `linear`, `trig`, `poly:D`, or `product:D:M`.
fn parse_spec_token(token: &str) -> Result<FeatureSpec, String> {
    let parts: Vec<&str> = token.split(':').collect();
    let bad = |msg: &str| Err(format!("`{token}`: {msg}"));
    match parts.as_slice() {
        ["linear"] => Ok(poly_spec(1).expect("degree 1").with_name("linear")),
        ["trig"] => Ok(trig_spec()),
        ["poly", d] => match d.parse::<u32>() {
            Ok(d) if d >= 1 => Ok(poly_spec(d).expect("validated degree")),
            _ => bad("poly degree must be a positive integer"),
        },
        ["product", d, m] => match (d.parse::<u32>(), m.parse::<u32>()) {
            (Ok(d), Ok(m)) if d >= 1 && m >= 1 => {
                Ok(product_spec(d, m).expect("validated arguments"))
            }
            _ => bad("product takes positive integers, e.g. product:2:6"),
        },
        _ => bad("expected linear | poly:D | trig | product:D:M"),
    }
}

fn parse_mode(token: &str) -> Result<TrainingMode, String> {
    match token {
        "independent" => Ok(TrainingMode::Independent),
        "dependent" => Ok(TrainingMode::Dependent),
        _ => Err(format!("`{token}`: expected independent | dependent")),
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { kind } => cmd::generate::run(kind),
        Command::Fit(args) => cmd::fit::run(args),
        Command::Decompose(args) => cmd::decompose::run(args),
        Command::Synth(args) => cmd::synth::run(args),
        Command::Eval(args) => cmd::eval::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code);
    }
}
