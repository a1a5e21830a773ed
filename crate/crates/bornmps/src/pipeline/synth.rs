//! Synthetic labeled event streams with known structure.
//!
//! The generator plants two kinds of ground truth that a trained model can be
//! checked against: perfectly copied feature pairs (whose entropy and mutual
//! information have closed forms) and a configurable anomaly distribution
//! that breaks the copies and up-weights rare values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::pipeline::{PipelineError, RawTable};

/// One independent categorical feature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthFeature {
    pub name: String,
    pub values: Vec<String>,
    pub probs: Vec<f64>,
}

/// `target` always carries the same value index as `source` in benign rows.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct CopyPair {
    pub source: usize,
    pub target: usize,
}

/// How anomalous rows redistribute the feature values listed in
/// `rare_features`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum RareValueMode {
    /// Uniform over the feature's alphabet: maximally spread, so the anomaly
    /// cluster itself carries no learnable structure.
    #[default]
    Uniform,
    /// Weights proportional to `1 - p`: concentrates on the rarest values.
    Complement,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnomalyModel {
    /// Anomalous rows set each copy target to a value different from its
    /// source, drawn uniformly from the remaining alphabet.
    pub break_copies: bool,
    /// Features redrawn from the rare-value distribution in anomalous rows.
    #[serde(default)]
    pub rare_features: Vec<usize>,
    #[serde(default)]
    pub rare_mode: RareValueMode,
}

impl Default for AnomalyModel {
    fn default() -> Self {
        Self {
            break_copies: true,
            rare_features: Vec::new(),
            rare_mode: RareValueMode::Uniform,
        }
    }
}

/// Full description of a synthetic stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub features: Vec<SynthFeature>,
    #[serde(default)]
    pub copies: Vec<CopyPair>,
    #[serde(default)]
    pub anomaly_rate: f64,
    #[serde(default)]
    pub anomaly: AnomalyModel,
}

impl SynthSpec {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let spec: SynthSpec = serde_json::from_str(text)
            .map_err(|e| PipelineError::BadSynthSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// The default planted-pair stream: features 0 and 1 are a uniformly
    /// distributed copied pair, features 2..7 are independent and heavily
    /// skewed (0.95 / 0.05). Anomalies break the copy and redraw every
    /// independent feature uniformly.
    pub fn benchmark(anomaly_rate: f64) -> Self {
        let pair_values = vec!["a".to_string(), "b".to_string()];
        let ind_values = vec!["x".to_string(), "y".to_string()];
        let mut features = vec![
            SynthFeature {
                name: "pair_src".into(),
                values: pair_values.clone(),
                probs: vec![0.5, 0.5],
            },
            SynthFeature {
                name: "pair_copy".into(),
                values: pair_values,
                probs: vec![0.5, 0.5],
            },
        ];
        for i in 2..8 {
            features.push(SynthFeature {
                name: format!("ind{i}"),
                values: ind_values.clone(),
                probs: vec![0.95, 0.05],
            });
        }
        SynthSpec {
            features,
            copies: vec![CopyPair {
                source: 0,
                target: 1,
            }],
            anomaly_rate,
            anomaly: AnomalyModel {
                break_copies: true,
                rare_features: (2..8).collect(),
                rare_mode: RareValueMode::Uniform,
            },
        }
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    fn copy_targets(&self) -> Vec<usize> {
        self.copies.iter().map(|c| c.target).collect()
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.features.is_empty() {
            return Err(PipelineError::BadSynthSpec("no features".into()));
        }
        for (i, f) in self.features.iter().enumerate() {
            if f.values.is_empty() || f.values.len() != f.probs.len() {
                return Err(PipelineError::BadSynthSpec(format!(
                    "feature {i}: values and probs must be non-empty and equal length"
                )));
            }
            for (a, v) in f.values.iter().enumerate() {
                if f.values[..a].contains(v) {
                    return Err(PipelineError::BadSynthSpec(format!(
                        "feature {i}: duplicate value {v:?}"
                    )));
                }
            }
            let sum: f64 = f.probs.iter().sum();
            if f.probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(PipelineError::BadDistribution { feature: i, sum });
            }
        }
        let n = self.features.len();
        let targets = self.copy_targets();
        for (idx, copy) in self.copies.iter().enumerate() {
            if copy.source >= n || copy.target >= n {
                return Err(PipelineError::BadSynthSpec(format!(
                    "copy {idx}: feature index out of range"
                )));
            }
            if copy.source == copy.target {
                return Err(PipelineError::BadSynthSpec(format!(
                    "copy {idx}: source equals target"
                )));
            }
            if targets.contains(&copy.source) {
                return Err(PipelineError::BadSynthSpec(format!(
                    "copy {idx}: source {} is itself a copy target",
                    copy.source
                )));
            }
            if targets.iter().filter(|&&t| t == copy.target).count() > 1 {
                return Err(PipelineError::BadSynthSpec(format!(
                    "copy {idx}: duplicate target {}",
                    copy.target
                )));
            }
            let src_card = self.features[copy.source].values.len();
            let dst_card = self.features[copy.target].values.len();
            if src_card != dst_card {
                return Err(PipelineError::BadSynthSpec(format!(
                    "copy {idx}: cardinality mismatch ({src_card} vs {dst_card})"
                )));
            }
            if self.anomaly.break_copies && src_card < 2 {
                return Err(PipelineError::BadSynthSpec(format!(
                    "copy {idx}: cannot break a copy over a single-value alphabet"
                )));
            }
        }
        for &f in &self.anomaly.rare_features {
            if f >= n {
                return Err(PipelineError::BadSynthSpec(format!(
                    "rare feature {f} out of range"
                )));
            }
            if targets.contains(&f) {
                return Err(PipelineError::BadSynthSpec(format!(
                    "rare feature {f} is a copy target"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.anomaly_rate) {
            return Err(PipelineError::BadSynthSpec(format!(
                "anomaly_rate {} outside [0, 1]",
                self.anomaly_rate
            )));
        }
        Ok(())
    }

    /// Draws a labeled table; `true` labels mark anomalous rows.
    /// Deterministic in `seed`.
    pub fn generate(
        &self,
        count: usize,
        seed: u64,
    ) -> Result<(RawTable, Vec<bool>), PipelineError> {
        self.validate()?;
        let n = self.features.len();
        let targets = self.copy_targets();
        let rare_dists: Vec<Option<Vec<f64>>> = (0..n)
            .map(|i| {
                if self.anomaly.rare_features.contains(&i) {
                    Some(self.rare_distribution(i))
                } else {
                    None
                }
            })
            .collect();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(count);
        let mut labels = Vec::with_capacity(count);
        for _ in 0..count {
            let anomaly = rng.gen::<f64>() < self.anomaly_rate;
            let mut values = vec![0usize; n];
            for i in 0..n {
                if targets.contains(&i) {
                    continue;
                }
                let dist = match (&rare_dists[i], anomaly) {
                    (Some(rare), true) => rare,
                    _ => &self.features[i].probs,
                };
                values[i] = draw_categorical(&mut rng, dist);
            }
            for copy in &self.copies {
                let src = values[copy.source];
                values[copy.target] = if anomaly && self.anomaly.break_copies {
                    let card = self.features[copy.target].values.len();
                    let off = rng.gen_range(0..card - 1);
                    if off >= src {
                        off + 1
                    } else {
                        off
                    }
                } else {
                    src
                };
            }
            rows.push(
                values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| self.features[i].values[v].clone())
                    .collect(),
            );
            labels.push(anomaly);
        }
        let header = Some(self.features.iter().map(|f| f.name.clone()).collect());
        Ok((RawTable { header, rows }, labels))
    }

    fn rare_distribution(&self, feature: usize) -> Vec<f64> {
        let probs = &self.features[feature].probs;
        let d = probs.len();
        match self.anomaly.rare_mode {
            RareValueMode::Uniform => vec![1.0 / d as f64; d],
            RareValueMode::Complement => {
                if d == 1 {
                    return vec![1.0];
                }
                let weights: Vec<f64> = probs.iter().map(|p| 1.0 - p).collect();
                let total: f64 = weights.iter().sum();
                weights.iter().map(|w| w / total).collect()
            }
        }
    }

    /// Exact Shannon entropy (nats) of the benign distribution: copy targets
    /// contribute nothing given their source.
    pub fn exact_entropy(&self) -> f64 {
        let targets = self.copy_targets();
        self.features
            .iter()
            .enumerate()
            .filter(|(i, _)| !targets.contains(i))
            .map(|(_, f)| shannon(&f.probs))
            .sum()
    }

    /// Exact classical mutual information (nats) between two features of the
    /// benign distribution: the source's entropy for copied pairs, zero
    /// otherwise.
    pub fn exact_classical_mi(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let root = |k: usize| {
            self.copies
                .iter()
                .find(|c| c.target == k)
                .map(|c| c.source)
                .unwrap_or(k)
        };
        let (ri, rj) = (root(i), root(j));
        if ri == rj {
            shannon(&self.features[ri].probs)
        } else {
            0.0
        }
    }

    pub fn exact_classical_mi_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.num_features();
        let mut mi = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                mi[i][j] = self.exact_classical_mi(i, j);
            }
        }
        mi
    }
}

fn shannon(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

fn draw_categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if r < acc {
            return i;
        }
    }
    probs.len() - 1
}
