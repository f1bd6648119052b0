use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scalar_probe::harness::DEFAULT_TAU;
use scalar_probe::metrics::MseVariant;
use scalar_probe::probe::ProbeKind;
use scalar_probe::scalar::{Attribute, BucketScheme, DEFAULT_MIN_TOTAL};

mod commands;

/// Probe frozen text embeddings for the scale of physical quantities.
#[derive(Debug, Parser)]
#[command(name = "scalar-probe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rewrite every numeral in a text as `<significand>[EXP]<exponent>`.
    Canonicalize {
        /// Input text, or `-` for stdin.
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Output text, or `-` for stdout.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Write rewrite counters as JSON here.
        #[arg(long, value_name = "PATH")]
        stats: Option<PathBuf>,
    },
    /// Bucket scalar observations into per-object distributions.
    Distributions {
        #[command(flatten)]
        data: DataArgs,
        /// JSON output, or `-` for stdout.
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Fit one probe on every embedded object and save it as JSON.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        fit: FitArgs,
        /// Accepted for parity with `evaluate`; fitting uses no randomness.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Cross-validate a probe against the aggregate baseline.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = MseArg::Density)]
        mse: MseArg,
        /// Report file, or `-` for stdout. A CSV report written to a file gets
        /// its configuration alongside in `<out>.config.json`.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Defaults to the extension of `--out`, then CSV.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Zero-shot evaluations of a trained probe.
    #[command(subcommand)]
    Transfer(Transfer),
}

#[derive(Debug, Subcommand)]
enum Transfer {
    /// Bigger/smaller/similar judgements over object pairs.
    Relative {
        /// TSV of `object_a  object_b  attribute  label`.
        #[arg(long, value_name = "PATH")]
        pairs: PathBuf,
        #[command(flatten)]
        probe: ProbeArgs,
        /// Log10 dead zone for point predictions.
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        /// Bucket distance still judged similar for distribution probes.
        #[arg(long, default_value_t = 0)]
        bucket_window: u32,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Score price distributions of held-out products.
    Price {
        /// JSON array of `{object, prices}` or `{object, probs}`.
        #[arg(long, value_name = "PATH")]
        products: PathBuf,
        #[command(flatten)]
        probe: ProbeArgs,
        #[arg(long, value_enum, default_value_t = MseArg::Density)]
        mse: MseArg,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct DataArgs {
    /// TSV of `object  attribute  value  count`.
    #[arg(long, value_name = "PATH")]
    data: PathBuf,
    #[arg(long, value_enum)]
    attribute: AttributeArg,
    /// Bucket base: 10 for decimal buckets, 4 for power-of-four.
    #[arg(long, default_value_t = 10, value_parser = parse_base)]
    base: u32,
    /// Objects need strictly more observations than this to be kept.
    #[arg(long, default_value_t = DEFAULT_MIN_TOTAL)]
    min_total: u64,
}

impl DataArgs {
    fn scheme(&self) -> BucketScheme {
        if self.base == 4 {
            BucketScheme::power_of_four()
        } else {
            BucketScheme::decimal()
        }
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Embedding table written by the extractor.
    #[arg(long, value_name = "PATH")]
    embeddings: PathBuf,
    #[arg(long, value_enum)]
    probe: ProbeArg,
    /// Penalty strength; 1 for rgr and 0.01 for mcc when omitted.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 150)]
    pca_k: usize,
    /// Skip z-scoring of the features.
    #[arg(long)]
    no_standardize: bool,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    /// Probe JSON written by `train`.
    #[arg(long, value_name = "PATH")]
    probe: PathBuf,
    #[arg(long, value_name = "PATH")]
    embeddings: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProbeArg {
    Rgr,
    Mcc,
}

impl From<ProbeArg> for ProbeKind {
    fn from(p: ProbeArg) -> Self {
        match p {
            ProbeArg::Rgr => ProbeKind::Rgr,
            ProbeArg::Mcc => ProbeKind::Mcc,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AttributeArg {
    Mass,
    Length,
    Price,
}

impl From<AttributeArg> for Attribute {
    fn from(a: AttributeArg) -> Self {
        match a {
            AttributeArg::Mass => Attribute::Mass,
            AttributeArg::Length => Attribute::Length,
            AttributeArg::Price => Attribute::Price,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MseArg {
    Density,
    Cdf,
}

impl From<MseArg> for MseVariant {
    fn from(m: MseArg) -> Self {
        match m {
            MseArg::Density => MseVariant::Density,
            MseArg::Cdf => MseVariant::Cdf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn parse_base(s: &str) -> Result<u32, String> {
    match s {
        "10" => Ok(10),
        "4" => Ok(4),
        _ => Err(format!("base must be 10 or 4, got {s:?}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let validation = err
                .downcast_ref::<scalar_probe::Error>()
                .is_some_and(|e| e.is_validation());
            ExitCode::from(if validation { 2 } else { 1 })
        }
    }
}
