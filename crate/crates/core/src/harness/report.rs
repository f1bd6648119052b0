use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MetricTriple, MseVariant};
use crate::probe::{ProbeKind, TrainConfig};
use crate::scalar::{Attribute, BucketScheme, ModalityParams};

pub const CSV_HEADER: [&str; 9] = [
    "attribute",
    "encoder",
    "probe",
    "subset",
    "n",
    "accuracy",
    "mse",
    "emd",
    "emd_unnormalized",
];

/// Label used for aggregate-baseline rows in place of a probe name.
pub const BASELINE: &str = "baseline";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    All,
    Unimodal,
    Multimodal,
}

impl Subset {
    pub const ALL: [Subset; 3] = [Subset::All, Subset::Unimodal, Subset::Multimodal];

    pub fn as_str(self) -> &'static str {
        match self {
            Subset::All => "all",
            Subset::Unimodal => "unimodal",
            Subset::Multimodal => "multimodal",
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub attribute: Attribute,
    pub encoder: String,
    /// `rgr`, `mcc` or `baseline`.
    pub probe: String,
    pub subset: Subset,
    pub n: usize,
    /// Absent when the subset is empty.
    pub metrics: Option<MetricTriple>,
}

impl ReportRow {
    fn sort_key(&self) -> (Attribute, &str, &str, Subset) {
        (self.attribute, &self.encoder, &self.probe, self.subset)
    }
}

/// Settings that shaped a report, repeated next to its numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub probe: ProbeKind,
    pub lambda: f64,
    pub scheme: BucketScheme,
    pub seed: u64,
    pub n_folds: usize,
    pub train: TrainConfig,
    pub mse_variant: MseVariant,
    /// Reported `emd` is the raw distance divided by this.
    pub emd_divisor: usize,
    pub modality: ModalityParams,
    pub n_objects: usize,
    /// Objects with a distribution but no embedding.
    pub dropped_objects: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ConfigEcho,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidArgument(format!(
                "unknown report format {other:?}"
            ))),
        }
    }
}

impl EvalReport {
    pub fn new(config: ConfigEcho, mut rows: Vec<ReportRow>) -> Self {
        rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        EvalReport { config, rows }
    }

    pub fn row(&self, probe: &str, subset: Subset) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.probe == probe && r.subset == subset)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for r in &self.rows {
            let mut fields = vec![
                r.attribute.to_string(),
                r.encoder.clone(),
                r.probe.clone(),
                r.subset.to_string(),
                r.n.to_string(),
            ];
            match &r.metrics {
                Some(m) => fields
                    .extend([m.accuracy, m.mse, m.emd, m.emd_unnormalized].map(|v| v.to_string())),
                None => fields.extend(std::iter::repeat_n(String::new(), 4)),
            }
            w.write_record(&fields).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn write<W: Write>(&self, out: W, format: ReportFormat) -> Result<()> {
        match format {
            ReportFormat::Csv => self.write_csv(out),
            ReportFormat::Json => self.write_json(out),
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("csv: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn echo() -> ConfigEcho {
        ConfigEcho {
            probe: ProbeKind::Mcc,
            lambda: 0.01,
            scheme: BucketScheme::decimal(),
            seed: 3,
            n_folds: 10,
            train: TrainConfig::default(),
            mse_variant: MseVariant::Density,
            emd_divisor: 12,
            modality: ModalityParams::default(),
            n_objects: 0,
            dropped_objects: 0,
        }
    }

    fn row(probe: &str, subset: Subset) -> ReportRow {
        ReportRow {
            attribute: Attribute::Mass,
            encoder: "toy,enc".into(),
            probe: probe.into(),
            subset,
            n: 4,
            metrics: Some(MetricTriple {
                accuracy: 0.75,
                mse: 0.01,
                emd: 0.1,
                emd_unnormalized: 1.2,
            }),
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut buf = Vec::new();
        EvalReport::new(echo(), vec![]).write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "attribute,encoder,probe,subset,n,accuracy,mse,emd,emd_unnormalized\n"
        );
    }

    #[test]
    fn one_row_two_lines() {
        let mut buf = Vec::new();
        EvalReport::new(echo(), vec![row("mcc", Subset::All)])
            .write_csv(&mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "mass,\"toy,enc\",mcc,all,4,0.75,0.01,0.1,1.2");
    }

    #[test]
    fn rows_sorted_and_json_roundtrip() {
        let mut empty = row("rgr", Subset::Multimodal);
        empty.metrics = None;
        empty.n = 0;
        let report = EvalReport::new(
            echo(),
            vec![
                empty,
                row("mcc", Subset::Unimodal),
                row("baseline", Subset::All),
                row("mcc", Subset::All),
            ],
        );
        let order: Vec<(&str, Subset)> = report
            .rows
            .iter()
            .map(|r| (r.probe.as_str(), r.subset))
            .collect();
        assert_eq!(
            order,
            vec![
                ("baseline", Subset::All),
                ("mcc", Subset::All),
                ("mcc", Subset::Unimodal),
                ("rgr", Subset::Multimodal)
            ]
        );
        let mut buf = Vec::new();
        report.write_json(&mut buf).unwrap();
        let back: EvalReport = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, report);
    }
}
