use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    bucketize, detect_modality, Attribute, BucketScheme, EmpiricalDistribution, ModalityParams,
};
use crate::error::{Error, Result};

/// Objects need strictly more observations than this to be kept.
pub const DEFAULT_MIN_TOTAL: u64 = 100;

/// One `(object, attribute, value, count)` observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarRecord {
    pub object: String,
    pub attribute: Attribute,
    pub value: f64,
    pub count: u64,
}

impl ScalarRecord {
    pub fn new(object: impl Into<String>, attribute: Attribute, value: f64, count: u64) -> Self {
        ScalarRecord {
            object: object.into(),
            attribute,
            value,
            count,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.value.is_finite() && self.value > 0.0 && self.count >= 1
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub rows: usize,
    /// Rows dropped for a non-positive value or zero count.
    pub skipped: usize,
}

/// Records grouped by attribute and object, in sorted order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScalarDataset {
    groups: BTreeMap<(Attribute, String), Vec<ScalarRecord>>,
}

impl ScalarDataset {
    pub fn from_records(records: impl IntoIterator<Item = ScalarRecord>) -> Self {
        let mut groups: BTreeMap<(Attribute, String), Vec<ScalarRecord>> = BTreeMap::new();
        for r in records {
            groups
                .entry((r.attribute, r.object.clone()))
                .or_default()
                .push(r);
        }
        ScalarDataset { groups }
    }

    /// Parses `object<TAB>attribute<TAB>value<TAB>count` lines.
    pub fn read_tsv<R: BufRead>(reader: R) -> Result<(Self, IngestStats)> {
        let mut stats = IngestStats::default();
        let mut records = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.trim().is_empty() {
                continue;
            }
            let record = parse_record_line(line).map_err(|message| Error::Parse {
                line: line_no,
                message,
            })?;
            stats.rows += 1;
            if record.is_valid() {
                records.push(record);
            } else {
                stats.skipped += 1;
            }
        }
        Ok((Self::from_records(records), stats))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<(Self, IngestStats)> {
        Self::read_tsv(BufReader::new(File::open(path)?))
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Number of (attribute, object) groups.
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn records(&self, attribute: Attribute, object: &str) -> Option<&[ScalarRecord]> {
        self.groups
            .get(&(attribute, object.to_string()))
            .map(Vec::as_slice)
    }

    /// `(object, records)` pairs for one attribute, sorted by object.
    pub fn objects(&self, attribute: Attribute) -> impl Iterator<Item = (&str, &[ScalarRecord])> {
        self.groups
            .iter()
            .filter(move |((a, _), _)| *a == attribute)
            .map(|((_, o), rs)| (o.as_str(), rs.as_slice()))
    }

    pub fn total_count(&self, attribute: Attribute, object: &str) -> u64 {
        self.records(attribute, object)
            .map_or(0, |rs| rs.iter().map(|r| r.count).sum())
    }
}

fn parse_record_line(line: &str) -> std::result::Result<ScalarRecord, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 4 {
        return Err(format!(
            "expected 4 tab-separated fields, found {}",
            fields.len()
        ));
    }
    let object = fields[0].trim();
    if object.is_empty() {
        return Err("empty object name".into());
    }
    let attribute: Attribute = fields[1].parse().map_err(|e: Error| e.to_string())?;
    let value: f64 = fields[2]
        .trim()
        .parse()
        .map_err(|_| format!("bad value {:?}", fields[2]))?;
    let count: u64 = fields[3]
        .trim()
        .parse()
        .map_err(|_| format!("bad count {:?}", fields[3]))?;
    Ok(ScalarRecord::new(object, attribute, value, count))
}

/// Keeps objects whose total observation count strictly exceeds `min_total`.
pub fn filter_min_count(dataset: &ScalarDataset, min_total: u64) -> ScalarDataset {
    let groups = dataset
        .groups
        .iter()
        .filter(|(_, rs)| rs.iter().map(|r| r.count).sum::<u64>() > min_total)
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    ScalarDataset { groups }
}

/// Normalized bucket counts for the records of one object and attribute.
///
/// Returns the distribution and the number of records skipped for having a
/// non-positive value or zero count.
pub fn build_distribution(
    records: &[ScalarRecord],
    scheme: &BucketScheme,
) -> Result<(EmpiricalDistribution, usize)> {
    let first = records.first().ok_or(Error::Empty("record list"))?;
    if records
        .iter()
        .any(|r| r.object != first.object || r.attribute != first.attribute)
    {
        return Err(Error::InvalidArgument(
            "records span more than one object/attribute".into(),
        ));
    }
    let mut counts = vec![0u64; scheme.count];
    let mut skipped = 0;
    for r in records {
        if !r.is_valid() {
            skipped += 1;
            continue;
        }
        let label = bucketize(r.value, scheme)?;
        counts[scheme.index_of(label).expect("bucketize clamps")] += r.count;
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Empty("no valid records"));
    }
    let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok((EmpiricalDistribution::new(*scheme, probs, total)?, skipped))
}

/// Base-10 log of the count-weighted median value. An even total count
/// averages the two middle values.
pub fn log_median(records: &[ScalarRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Empty("record list"));
    }
    if let Some(bad) = records
        .iter()
        .find(|r| !(r.value.is_finite() && r.value > 0.0))
    {
        return Err(Error::NonPositive(bad.value));
    }
    let mut sorted: Vec<(f64, u64)> = records.iter().map(|r| (r.value, r.count)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: u64 = sorted.iter().map(|(_, c)| c).sum();
    if total == 0 {
        return Err(Error::Empty("records with positive counts"));
    }
    let at_rank = |rank: u64| {
        let mut seen = 0;
        for &(v, c) in &sorted {
            seen += c;
            if seen >= rank {
                return v;
            }
        }
        unreachable!("rank within total")
    };
    let median = if total % 2 == 1 {
        at_rank(total.div_ceil(2))
    } else {
        (at_rank(total / 2) + at_rank(total / 2 + 1)) / 2.0
    };
    Ok(median.log10())
}

/// Serialized per-object distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectDistribution {
    pub object: String,
    pub attribute: Attribute,
    #[serde(flatten)]
    pub distribution: EmpiricalDistribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_peaks: Option<usize>,
}

/// Distributions for every object of `attribute`, with modality attached.
pub fn build_object_distributions(
    dataset: &ScalarDataset,
    attribute: Attribute,
    scheme: &BucketScheme,
    modality: &ModalityParams,
) -> Result<Vec<ObjectDistribution>> {
    dataset
        .objects(attribute)
        .map(|(object, records)| {
            let (distribution, _) = build_distribution(records, scheme)?;
            let n_peaks = detect_modality(&distribution, modality).n_peaks;
            Ok(ObjectDistribution {
                object: object.to_string(),
                attribute,
                distribution,
                n_peaks: Some(n_peaks),
            })
        })
        .collect()
}
