use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use scalar_probe::canonical::canonicalize_stream;
use scalar_probe::embedding::{load_table, EmbeddingTable};
use scalar_probe::harness::{
    build_targets, eval_price_transfer, eval_relative, load_pairs, load_products, run_cv,
    train_probe, CvConfig, ProbePredictor, RelativeOptions, ReportFormat,
};
use scalar_probe::metrics::sampling_upper_bound;
use scalar_probe::probe::TrainedProbe;
use scalar_probe::scalar::{
    filter_min_count, Attribute, BucketScheme, Modality, ModalityParams, ScalarDataset,
};
use serde::Serialize;

use crate::{Command, DataArgs, FitArgs, FormatArg, ProbeArgs, Transfer};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Canonicalize { input, out, stats } => canonicalize(&input, &out, stats.as_deref()),
        Command::Distributions { data, out } => distributions(&data, &out),
        Command::Train {
            data,
            fit,
            seed: _,
            out,
        } => train(&data, &fit, &out),
        Command::Evaluate {
            data,
            fit,
            folds,
            seed,
            mse,
            out,
            format,
        } => {
            let mut cfg = cv_config(&data, &fit);
            cfg.n_folds = folds;
            cfg.seed = seed;
            cfg.mse_variant = mse.into();
            let format = match format {
                Some(FormatArg::Json) => ReportFormat::Json,
                Some(FormatArg::Csv) => ReportFormat::Csv,
                None if out
                    .extension()
                    .is_some_and(|e| e.eq_ignore_ascii_case("json")) =>
                {
                    ReportFormat::Json
                }
                None => ReportFormat::Csv,
            };
            evaluate(&data, &fit.embeddings, &cfg, &out, format)
        }
        Command::Transfer(Transfer::Relative {
            pairs,
            probe,
            tau,
            bucket_window,
            out,
        }) => {
            let (probe, table) = load_probe(&probe)?;
            let pairs =
                load_pairs(&pairs).with_context(|| format!("reading pairs {}", pairs.display()))?;
            let opts = RelativeOptions { tau, bucket_window };
            let result = eval_relative(&probe, &table, &pairs, &opts)?;
            eprintln!(
                "scored {} pairs; {} lacked an embedding, {} were for another attribute",
                result.scored, result.missing_embedding, result.other_attribute
            );
            write_json(&out, &result)
        }
        Command::Transfer(Transfer::Price {
            products,
            probe,
            mse,
            out,
        }) => {
            let (probe, table) = load_probe(&probe)?;
            let products = load_products(&products, &probe.scheme)
                .with_context(|| format!("reading products {}", products.display()))?;
            let predictor = ProbePredictor {
                probe: &probe,
                table: &table,
            };
            let result = eval_price_transfer(&predictor, &products, mse.into())?;
            eprintln!(
                "scored {} products; {} lacked an embedding",
                result.scored, result.missing
            );
            write_json(&out, &result)
        }
    }
}

fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if is_stdio(path) {
        return Ok(Box::new(io::stdin().lock()));
    }
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(Box::new(BufReader::new(file)))
}

fn create_output(path: &Path) -> Result<Box<dyn Write>> {
    if is_stdio(path) {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(Box::new(BufWriter::new(file)))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create_output(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(scalar_probe::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn canonicalize(input: &Path, out: &Path, stats_path: Option<&Path>) -> Result<()> {
    let reader = open_input(input)?;
    let writer = create_output(out)?;
    let stats = canonicalize_stream(reader, writer)?;
    if let Some(path) = stats_path {
        write_json(path, &stats)?;
    }
    Ok(())
}

fn load_dataset(args: &DataArgs) -> Result<ScalarDataset> {
    let (ds, stats) = ScalarDataset::from_path(&args.data)
        .with_context(|| format!("reading scalar data {}", args.data.display()))?;
    eprintln!("read {} rows, skipped {}", stats.rows, stats.skipped);
    Ok(filter_min_count(&ds, args.min_total))
}

#[derive(Serialize)]
struct ObjectSummary<'a> {
    object: &'a str,
    total_count: u64,
    log_median: f64,
    n_peaks: usize,
    modality: Modality,
    probs: &'a [f64],
}

#[derive(Serialize)]
struct DistributionSummary<'a> {
    attribute: Attribute,
    scheme: BucketScheme,
    min_total: u64,
    sampling_upper_bound: Option<f64>,
    objects: Vec<ObjectSummary<'a>>,
}

fn distributions(args: &DataArgs, out: &Path) -> Result<()> {
    let ds = load_dataset(args)?;
    let attribute = args.attribute.into();
    let targets = build_targets(&ds, attribute, &args.scheme(), &ModalityParams::default())?;
    let dists: Vec<_> = targets.iter().map(|t| t.distribution.clone()).collect();
    let summary = DistributionSummary {
        attribute,
        scheme: args.scheme(),
        min_total: args.min_total,
        sampling_upper_bound: sampling_upper_bound(&dists).ok(),
        objects: targets
            .iter()
            .map(|t| ObjectSummary {
                object: &t.object,
                total_count: t.distribution.total_count,
                log_median: t.log_median,
                n_peaks: t.modality.n_peaks,
                modality: t.modality.label,
                probs: &t.distribution.probs,
            })
            .collect(),
    };
    write_json(out, &summary)
}

fn cv_config(data: &DataArgs, fit: &FitArgs) -> CvConfig {
    let mut cfg = CvConfig::new(data.attribute.into(), fit.probe.into());
    cfg.scheme = data.scheme();
    cfg.lambda = fit.lambda;
    cfg.train.pca_k = fit.pca_k;
    cfg.train.standardize = !fit.no_standardize;
    cfg
}

fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    load_table(path).with_context(|| format!("reading embeddings {}", path.display()))
}

fn train(data: &DataArgs, fit: &FitArgs, out: &Path) -> Result<()> {
    let ds = load_dataset(data)?;
    let table = load_embeddings(&fit.embeddings)?;
    let cfg = cv_config(data, fit);
    let (probe, dropped) = train_probe(&ds, &table, &cfg)?;
    if dropped > 0 {
        eprintln!("{dropped} objects had no embedding and were left out");
    }
    write_json(out, &probe)
}

fn evaluate(
    data: &DataArgs,
    embeddings: &Path,
    cfg: &CvConfig,
    out: &Path,
    format: ReportFormat,
) -> Result<()> {
    let ds = load_dataset(data)?;
    let table = load_embeddings(embeddings)?;
    let report = run_cv(&ds, &table, cfg)?;
    eprintln!(
        "evaluated {} objects over {} folds ({} without an embedding)",
        report.config.n_objects, report.config.n_folds, report.config.dropped_objects
    );
    let mut writer = create_output(out)?;
    report.write(&mut writer, format)?;
    writer.flush()?;
    if format == ReportFormat::Csv && !is_stdio(out) {
        write_json(&sidecar_path(out), &report.config)?;
    }
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = OsString::from(out.as_os_str());
    name.push(".config.json");
    PathBuf::from(name)
}

fn load_probe(args: &ProbeArgs) -> Result<(TrainedProbe, EmbeddingTable)> {
    let reader = open_input(&args.probe)?;
    let probe: TrainedProbe = serde_json::from_reader(reader)
        .map_err(scalar_probe::Error::from)
        .with_context(|| format!("reading probe {}", args.probe.display()))?;
    let table = load_embeddings(&args.embeddings)?;
    Ok((probe, table))
}
