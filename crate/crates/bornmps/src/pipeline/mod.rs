//! Event-table workflow: ingestion, encoding, chronological splits, scoring,
//! threshold sweeps, detection metrics, per-row explanations, and the
//! synthetic generator used for verifiable end-to-end runs.

pub mod ingest;
pub mod oracle;
pub mod synth;

use thiserror::Error;

use crate::explain;
use crate::mps::{Configuration, ModelError, MpsModel, PROB_FLOOR};

pub use ingest::{emit, ingest, ingest_reader, write_table, RawTable};
pub use oracle::{brute_force_oracle, ExactSummary};
pub use synth::{AnomalyModel, CopyPair, RareValueMode, SynthFeature, SynthSpec};

/// Token that index 0 decodes to; also used when emitting values a
/// vocabulary has never seen.
pub const UNSEEN_TOKEN: &str = "<unseen>";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("table parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("label column {name:?} not found in header")]
    MissingLabelColumn { name: String },
    #[error("label column requires a header row")]
    LabelWithoutHeader,
    #[error("unrecognized label {value:?} at line {line}")]
    BadLabel { value: String, line: usize },
    #[error("training rows are empty")]
    EmptyTable,
    #[error("row {row} has {actual} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        actual: usize,
    },
    #[error("split fraction {fraction} leaves an empty side ({rows} rows)")]
    DegenerateSplit { fraction: f64, rows: usize },
    #[error("dataset has {actual} features but the model expects {expected}")]
    FeatureCountMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("feature {feature} distribution sums to {sum}, expected 1")]
    BadDistribution { feature: usize, sum: f64 },
    #[error("synthetic spec invalid: {0}")]
    BadSynthSpec(String),
    #[error("configuration space exceeds the enumeration limit of {limit} states")]
    StateSpaceTooLarge { limit: usize },
}

/// Per-feature value dictionary learned from training rows.
///
/// Index 0 of every feature is reserved for values never seen in training;
/// observed values are indexed from 1 in first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FeatureVocabulary {
    features: Vec<FeatureVocab>,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FeatureVocab {
    pub name: String,
    pub values: Vec<String>,
}

impl FeatureVocabulary {
    /// Learns the vocabulary of every column from training rows. Feature
    /// names come from `header` when present, otherwise `f0`, `f1`, ...
    pub fn fit(header: Option<&[String]>, rows: &[Vec<String>]) -> Result<Self, PipelineError> {
        if rows.is_empty() {
            return Err(PipelineError::EmptyTable);
        }
        let width = rows[0].len();
        let mut features: Vec<FeatureVocab> = (0..width)
            .map(|i| FeatureVocab {
                name: header
                    .map(|h| h[i].clone())
                    .unwrap_or_else(|| format!("f{i}")),
                values: Vec::new(),
            })
            .collect();
        let mut lookups: Vec<std::collections::HashMap<String, usize>> =
            vec![std::collections::HashMap::new(); width];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(PipelineError::RaggedRow {
                    row: r,
                    expected: width,
                    actual: row.len(),
                });
            }
            for (i, value) in row.iter().enumerate() {
                if !lookups[i].contains_key(value) {
                    features[i].values.push(value.clone());
                    lookups[i].insert(value.clone(), features[i].values.len());
                }
            }
        }
        Ok(Self { features })
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature(&self, i: usize) -> &FeatureVocab {
        &self.features[i]
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    /// Physical dimension of each feature: distinct training values plus the
    /// reserved unseen slot.
    pub fn physical_dims(&self) -> Vec<usize> {
        self.features.iter().map(|f| f.values.len() + 1).collect()
    }

    /// Index of a raw value; 0 when it was never seen in training.
    pub fn encode_value(&self, feature: usize, raw: &str) -> usize {
        self.features[feature]
            .values
            .iter()
            .position(|v| v == raw)
            .map(|p| p + 1)
            .unwrap_or(0)
    }

    /// Raw string for an index; index 0 decodes to [`UNSEEN_TOKEN`].
    pub fn decode_value(&self, feature: usize, index: usize) -> &str {
        if index == 0 {
            UNSEEN_TOKEN
        } else {
            &self.features[feature].values[index - 1]
        }
    }
}

/// Integer-encoded rows in original file order with optional labels
/// (`true` marks an attack).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedDataset {
    pub rows: Vec<Configuration>,
    /// Original file position of each row; the chronological proxy.
    pub order: Vec<usize>,
    pub labels: Option<Vec<bool>>,
}

impl EncodedDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Encodes raw rows against a vocabulary; unseen values map to index 0.
pub fn encode(
    rows: &[Vec<String>],
    vocab: &FeatureVocabulary,
    labels: Option<Vec<bool>>,
) -> Result<EncodedDataset, PipelineError> {
    let width = vocab.num_features();
    // per-feature hash lookups; the linear scan in encode_value is fine for
    // spot queries but not for whole tables
    let lookups: Vec<std::collections::HashMap<&str, usize>> = vocab
        .features
        .iter()
        .map(|f| {
            f.values
                .iter()
                .enumerate()
                .map(|(i, v)| (v.as_str(), i + 1))
                .collect()
        })
        .collect();
    let mut encoded = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(PipelineError::RaggedRow {
                row: r,
                expected: width,
                actual: row.len(),
            });
        }
        let values = row
            .iter()
            .enumerate()
            .map(|(i, v)| lookups[i].get(v.as_str()).copied().unwrap_or(0))
            .collect();
        encoded.push(Configuration(values));
    }
    Ok(EncodedDataset {
        order: (0..encoded.len()).collect(),
        rows: encoded,
        labels,
    })
}

/// Decodes an encoded row back to raw strings (unseen values become the
/// sentinel token).
pub fn decode_row(row: &Configuration, vocab: &FeatureVocabulary) -> Vec<String> {
    row.values()
        .iter()
        .enumerate()
        .map(|(i, &v)| vocab.decode_value(i, v).to_string())
        .collect()
}

/// Splits rows by file position: the first `floor(fraction * count)` rows
/// train, the rest evaluate. No shuffling.
pub fn split_chronological(
    ds: &EncodedDataset,
    fraction: f64,
) -> Result<(EncodedDataset, EncodedDataset), PipelineError> {
    let n = ds.len();
    let cut = (fraction * n as f64).floor() as usize;
    if !(0.0..1.0).contains(&fraction) || cut == 0 || cut >= n {
        return Err(PipelineError::DegenerateSplit { fraction, rows: n });
    }
    let take = |range: std::ops::Range<usize>| EncodedDataset {
        rows: ds.rows[range.clone()].to_vec(),
        order: ds.order[range.clone()].to_vec(),
        labels: ds.labels.as_ref().map(|l| l[range].to_vec()),
    };
    Ok((take(0..cut), take(cut..n)))
}

/// Per-row negative log-likelihood in file order, with the probability floor
/// applied so unseen configurations stay finite.
pub fn score(m: &MpsModel, ds: &EncodedDataset) -> Result<Vec<f64>, PipelineError> {
    if let Some(row) = ds.rows.first() {
        if row.len() != m.num_sites() {
            return Err(PipelineError::FeatureCountMismatch {
                expected: m.num_sites(),
                actual: row.len(),
            });
        }
    }
    for row in &ds.rows {
        for (k, (&v, &d)) in row.values().iter().zip(m.physical_dims()).enumerate() {
            if v >= d {
                return Err(ModelError::ValueOutOfRange {
                    feature: k,
                    value: v,
                    dim: d,
                }
                .into());
            }
        }
    }
    let z = m.partition_function();
    Ok(crate::parallel::map_items(&ds.rows, |row| {
        let amp = m.amplitude(row).expect("row validated");
        -(amp * amp / z).max(PROB_FLOOR).ln()
    }))
}

/// One threshold's worth of sweep output.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub threshold: f64,
    pub anomalies_detected: usize,
    pub attacks_among_anomalies: usize,
}

/// Anomaly and attack counts across candidate thresholds, sorted by
/// ascending threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweepResult {
    pub points: Vec<SweepPoint>,
}

/// Counts rows scoring strictly above each threshold. Rows tied with the
/// threshold count as benign.
pub fn threshold_sweep(
    scores: &[f64],
    labels: Option<&[bool]>,
    thresholds: &[f64],
) -> ThresholdSweepResult {
    if let Some(labels) = labels {
        assert_eq!(scores.len(), labels.len(), "scores and labels misaligned");
    }
    let mut sorted = thresholds.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite thresholds"));
    let points = sorted
        .into_iter()
        .map(|threshold| {
            let mut anomalies = 0;
            let mut attacks = 0;
            for (i, &s) in scores.iter().enumerate() {
                if s > threshold {
                    anomalies += 1;
                    if labels.map(|l| l[i]).unwrap_or(false) {
                        attacks += 1;
                    }
                }
            }
            SweepPoint {
                threshold,
                anomalies_detected: anomalies,
                attacks_among_anomalies: attacks,
            }
        })
        .collect();
    ThresholdSweepResult { points }
}

/// Detection quality at a fixed threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionMetrics {
    /// Attacks flagged over total attacks.
    pub detection_rate: f64,
    /// Benign rows flagged over total benign rows.
    pub false_positive_rate: f64,
    /// Attacks flagged over all flagged rows; 0 when nothing is flagged.
    pub precision: f64,
}

pub fn metrics_at(scores: &[f64], labels: &[bool], threshold: f64) -> DetectionMetrics {
    assert_eq!(scores.len(), labels.len(), "scores and labels misaligned");
    let mut flagged_attacks = 0usize;
    let mut flagged_benign = 0usize;
    let mut total_attacks = 0usize;
    for (&s, &attack) in scores.iter().zip(labels) {
        if attack {
            total_attacks += 1;
        }
        if s > threshold {
            if attack {
                flagged_attacks += 1;
            } else {
                flagged_benign += 1;
            }
        }
    }
    let total_benign = scores.len() - total_attacks;
    let flagged = flagged_attacks + flagged_benign;
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    DetectionMetrics {
        detection_rate: ratio(flagged_attacks, total_attacks),
        false_positive_rate: ratio(flagged_benign, total_benign),
        precision: ratio(flagged_attacks, flagged),
    }
}

/// Threshold suggestions from a score sample; the tool reports both and
/// never commits to either.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSuggestion {
    /// Mean plus three population standard deviations.
    pub mean_plus_3sd: f64,
    /// Median plus three normal-consistent median absolute deviations
    /// (MAD scaled by 1.4826).
    pub median_plus_3mad: f64,
}

pub fn suggest_thresholds(scores: &[f64]) -> ThresholdSuggestion {
    assert!(!scores.is_empty(), "no scores to summarize");
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    let median = median_of(scores);
    let deviations: Vec<f64> = scores.iter().map(|s| (s - median).abs()).collect();
    let mad = median_of(&deviations);
    ThresholdSuggestion {
        mean_plus_3sd: mean + 3.0 * var.sqrt(),
        median_plus_3mad: median + 3.0 * 1.4826 * mad,
    }
}

fn median_of(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Why one row scored the way it did.
#[derive(Debug, Clone, PartialEq)]
pub struct RowExplanation {
    /// Exact joint score `-ln P(v)`; the quantity thresholds act on.
    pub joint_nll: f64,
    /// Per feature: (feature index, observed value index, marginal
    /// probability of that value).
    pub feature_probs: Vec<(usize, usize, f64)>,
    /// Product of the per-feature marginal probabilities.
    pub marginal_product: f64,
    /// `-ln` of the product above.
    pub marginal_nll: f64,
    /// Feature indices sorted by ascending marginal probability; the head of
    /// the list is the strongest single-feature reason for the score.
    pub ranking: Vec<usize>,
}

/// Breaks a row's score into per-feature marginal probabilities.
pub fn explain_row(m: &MpsModel, row: &Configuration) -> Result<RowExplanation, PipelineError> {
    let joint_nll = -m.probability(row)?.max(PROB_FLOOR).ln();
    let mut feature_probs = Vec::with_capacity(row.len());
    let mut product = 1.0;
    for (i, &v) in row.values().iter().enumerate() {
        let marginal = explain::marginal(m, i);
        let p = marginal[v];
        product *= p;
        feature_probs.push((i, v, p));
    }
    let mut ranking: Vec<usize> = (0..row.len()).collect();
    ranking.sort_by(|&a, &b| {
        feature_probs[a]
            .2
            .partial_cmp(&feature_probs[b].2)
            .expect("finite probabilities")
            .then(a.cmp(&b))
    });
    Ok(RowExplanation {
        joint_nll,
        feature_probs,
        marginal_product: product,
        marginal_nll: -product.max(PROB_FLOOR).ln(),
        ranking,
    })
}
