//! Generation-space-size proxy metrics computed from K sampled responses.
//!
//! All functions here are pure: they take a [`SampleSet`] (or an
//! [`EmbeddingMatrix`]) and return a number. The only external dependency is
//! the entailment oracle used by semantic entropy.

mod eigenscore;
mod lexical;
mod logprob;
mod semantic;

pub use eigenscore::{
    eigenscore_average, eigenscore_matrix, eigenscore_original, eigenscore_output,
    loo_eigenscore, loo_eigenscore_set, mean_embedding_distance, mean_embedding_distance_set,
    EmbeddingSource,
};
pub use lexical::{lexical_similarity, rouge_l_f1, tokenize};
pub use logprob::{energy, normalized_entropy, perplexity};
pub use semantic::{
    cluster_by_entailment, semantic_entropy, EntailmentLabel, EntailmentOracle,
    EntailmentVerdict, ExactMatchOracle, OracleError,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{metric}: required data unavailable ({detail})")]
    DataUnavailable { metric: MetricName, detail: String },
    #[error("matrix is singular or not positive definite (smallest eigenvalue {smallest_eigenvalue:e}); increase alpha")]
    Singular { smallest_eigenvalue: f64 },
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("entailment oracle failed on pair ({premise}, {hypothesis}): {source}")]
    Oracle {
        premise: usize,
        hypothesis: usize,
        #[source]
        source: OracleError,
    },
}

/// K×d real matrix, one row per sampled response.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    k: usize,
    d: usize,
    values: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        let k = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(k * d);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(MetricError::InvalidInput(format!(
                    "row {i} has width {}, expected {d}",
                    row.len()
                )));
            }
            values.extend(row);
        }
        Self::from_flat(k, d, values)
    }

    pub fn from_f32_rows<'a, I>(rows: I) -> Result<Self, MetricError>
    where
        I: IntoIterator<Item = &'a [f32]>,
    {
        Self::new(
            rows.into_iter()
                .map(|r| r.iter().map(|&v| f64::from(v)).collect())
                .collect(),
        )
    }

    pub fn from_flat(k: usize, d: usize, values: Vec<f64>) -> Result<Self, MetricError> {
        if values.len() != k * d {
            return Err(MetricError::InvalidInput(format!(
                "expected {k}×{d} values, got {}",
                values.len()
            )));
        }
        if k > 0 && d == 0 {
            return Err(MetricError::InvalidInput("embedding width must be at least 1".into()));
        }
        let m = Self { k, d, values };
        m.check_finite()?;
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.k
    }

    pub fn dims(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.d.max(1)).take(self.k)
    }

    /// Copy without row `i`.
    pub fn without_row(&self, i: usize) -> Self {
        let values = self
            .iter_rows()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, r)| r.iter().copied())
            .collect();
        Self { k: self.k - 1, d: self.d, values }
    }

    pub(crate) fn check_finite(&self) -> Result<(), MetricError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(p) => Err(MetricError::InvalidInput(format!(
                "non-finite entry at row {}, column {}",
                p / self.d.max(1),
                p % self.d.max(1)
            ))),
            None => Ok(()),
        }
    }
}

/// Collapsed hidden-state statistics for one layer of one response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStats {
    pub layer_index: u32,
    /// Mean hidden vector over generated tokens 1..T−1.
    pub mean_vec: Vec<f32>,
    /// Hidden vector of the final generated (non-pad) token.
    pub last_vec: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSample {
    pub text: String,
    pub token_count: u32,
    pub token_logprobs: Vec<f64>,
    /// Log-sum-exp of the full-vocabulary logits at each generated step;
    /// empty when the provider does not expose logits.
    #[serde(default)]
    pub token_logsumexp: Vec<f64>,
    /// Layer 0 is the embedding output; layer ℓ ≥ 1 is transformer block ℓ.
    #[serde(default)]
    pub layers: Vec<LayerStats>,
    #[serde(default)]
    pub external_embedding: Option<Vec<f32>>,
}

impl ResponseSample {
    /// Bare sample with only text and token log-probabilities.
    pub fn from_logprobs(text: impl Into<String>, token_logprobs: Vec<f64>) -> Self {
        Self {
            text: text.into(),
            token_count: token_logprobs.len() as u32,
            token_logprobs,
            token_logsumexp: Vec::new(),
            layers: Vec::new(),
            external_embedding: None,
        }
    }

    pub fn sequence_logprob(&self) -> f64 {
        self.token_logprobs.iter().sum()
    }

    pub fn mean_logprob(&self) -> f64 {
        if self.token_logprobs.is_empty() {
            return 0.0;
        }
        self.sequence_logprob() / self.token_logprobs.len() as f64
    }
}

/// The K sampled responses of one model for one prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub prompt_id: String,
    pub model_id: String,
    pub samples: Vec<ResponseSample>,
}

impl SampleSet {
    pub fn new(
        prompt_id: impl Into<String>,
        model_id: impl Into<String>,
        samples: Vec<ResponseSample>,
    ) -> Self {
        Self { prompt_id: prompt_id.into(), model_id: model_id.into(), samples }
    }

    pub fn k(&self) -> usize {
        self.samples.len()
    }

    /// Number of hidden-state entries per sample (0 when none were recorded).
    pub fn layer_count(&self) -> usize {
        self.samples.first().map_or(0, |s| s.layers.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Larger metric value means a larger generation space.
    HigherMeansLarger,
    LowerMeansLarger,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Self::HigherMeansLarger => Self::LowerMeansLarger,
            Self::LowerMeansLarger => Self::HigherMeansLarger,
        }
    }

    /// `Some(true)` if `a` indicates the larger generation space, `None` on a tie.
    pub fn prefers(self, a: f64, b: f64) -> Option<bool> {
        if a == b {
            return None;
        }
        Some(match self {
            Self::HigherMeansLarger => a > b,
            Self::LowerMeansLarger => a < b,
        })
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "higher" | "up" | "higher_means_larger" => Ok(Self::HigherMeansLarger),
            "lower" | "down" | "lower_means_larger" => Ok(Self::LowerMeansLarger),
            other => Err(format!("unknown direction `{other}` (expected higher|lower)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Perplexity,
    Energy,
    NormalizedEntropy,
    LexicalSimilarity,
    EigenscoreOriginal,
    EigenscoreOutput,
    EigenscoreAverage,
    SemanticEntropy,
}

impl MetricName {
    pub const ALL: [MetricName; 8] = [
        Self::Perplexity,
        Self::Energy,
        Self::NormalizedEntropy,
        Self::LexicalSimilarity,
        Self::EigenscoreOriginal,
        Self::EigenscoreOutput,
        Self::EigenscoreAverage,
        Self::SemanticEntropy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Perplexity => "perplexity",
            Self::Energy => "energy",
            Self::NormalizedEntropy => "normalized_entropy",
            Self::LexicalSimilarity => "lexical_similarity",
            Self::EigenscoreOriginal => "eigenscore_original",
            Self::EigenscoreOutput => "eigenscore_output",
            Self::EigenscoreAverage => "eigenscore_average",
            Self::SemanticEntropy => "semantic_entropy",
        }
    }

    /// Orientation used when none is configured explicitly.
    pub fn default_direction(self) -> Direction {
        match self {
            Self::LexicalSimilarity => Direction::LowerMeansLarger,
            _ => Direction::HigherMeansLarger,
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

/// Inclusive range of hidden-state entries averaged by `eigenscore_average`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerWindow {
    /// `[floor(start_fraction·L), L − end_offset]` where `L` is the depth
    /// (number of entries minus the embedding layer).
    Fractional { start_fraction: f64, end_offset: usize },
    Absolute { start: usize, end: usize },
}

impl Default for LayerWindow {
    fn default() -> Self {
        Self::Fractional { start_fraction: 0.65, end_offset: 2 }
    }
}

impl LayerWindow {
    /// Resolves to concrete layer indices given the number of recorded
    /// entries (embedding layer included).
    pub fn resolve(&self, layer_entries: usize) -> Result<std::ops::RangeInclusive<usize>, MetricError> {
        let empty = || {
            MetricError::Configuration(format!(
                "layer window {self:?} is empty for a model with {layer_entries} hidden-state entries"
            ))
        };
        if layer_entries == 0 {
            return Err(empty());
        }
        let depth = layer_entries - 1;
        let (start, end) = match *self {
            Self::Fractional { start_fraction, end_offset } => {
                if !(0.0..=1.0).contains(&start_fraction) {
                    return Err(MetricError::Configuration(format!(
                        "start fraction {start_fraction} outside [0, 1]"
                    )));
                }
                let start = (start_fraction * depth as f64).floor() as usize;
                let end = depth.checked_sub(end_offset).ok_or_else(empty)?;
                (start, end)
            }
            Self::Absolute { start, end } => (start, end.min(depth)),
        };
        if start > end || start > depth {
            return Err(empty());
        }
        Ok(start..=end)
    }
}

impl FromStr for LayerWindow {
    type Err = String;

    /// Accepts `a:b` for absolute indices, or `frac:offset` with a
    /// fractional start such as `0.65:2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("layer window `{s}` must look like `start:end` or `0.65:2`"))?;
        if a.contains('.') {
            let start_fraction: f64 = a.parse().map_err(|e| format!("bad fraction `{a}`: {e}"))?;
            let end_offset: usize = b.parse().map_err(|e| format!("bad offset `{b}`: {e}"))?;
            Ok(Self::Fractional { start_fraction, end_offset })
        } else {
            let start = a.parse().map_err(|e| format!("bad start `{a}`: {e}"))?;
            let end = b.parse().map_err(|e| format!("bad end `{b}`: {e}"))?;
            Ok(Self::Absolute { start, end })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceProbMode {
    /// Sequence weight `exp(mean token logprob)`.
    #[default]
    LengthNormalized,
    /// Sequence weight `exp(sum of token logprobs)`.
    Raw,
}

impl FromStr for SequenceProbMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "length_normalized" => Ok(Self::LengthNormalized),
            "raw" => Ok(Self::Raw),
            other => Err(format!("unknown sequence probability mode `{other}` (length_normalized|raw)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub alpha: f64,
    pub layer_window: LayerWindow,
    /// Per-metric direction overrides; unset metrics use their default.
    #[serde(default)]
    pub directions: Vec<(MetricName, Direction)>,
    #[serde(default)]
    pub sequence_prob_mode: SequenceProbMode,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            layer_window: LayerWindow::default(),
            directions: Vec::new(),
            sequence_prob_mode: SequenceProbMode::default(),
        }
    }
}

impl MetricConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self { alpha, ..Self::default() }
    }

    pub fn direction(&self, metric: MetricName) -> Direction {
        self.directions
            .iter()
            .rev()
            .find(|(m, _)| *m == metric)
            .map_or_else(|| metric.default_direction(), |(_, d)| *d)
    }

    pub(crate) fn check_alpha(&self) -> Result<(), MetricError> {
        if self.alpha > 0.0 && self.alpha.is_finite() {
            Ok(())
        } else {
            Err(MetricError::Configuration(format!("alpha must be > 0, got {}", self.alpha)))
        }
    }
}

/// One scalar `f_m(p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub prompt_id: String,
    pub model_id: String,
    pub metric_name: MetricName,
    pub value: f64,
    pub direction: Direction,
}

/// Computes `metric` for `set`. The oracle is only consulted for semantic
/// entropy; passing `None` there is a configuration error.
pub fn score(
    set: &SampleSet,
    metric: MetricName,
    cfg: &MetricConfig,
    oracle: Option<&dyn EntailmentOracle>,
) -> Result<MetricScore, MetricError> {
    let value = match metric {
        MetricName::Perplexity => perplexity(set)?,
        MetricName::Energy => energy(set)?,
        MetricName::NormalizedEntropy => normalized_entropy(set)?,
        MetricName::LexicalSimilarity => lexical_similarity(set)?,
        MetricName::EigenscoreOriginal => eigenscore_original(set, cfg)?,
        MetricName::EigenscoreOutput => eigenscore_output(set, cfg)?,
        MetricName::EigenscoreAverage => eigenscore_average(set, cfg)?,
        MetricName::SemanticEntropy => {
            let oracle = oracle.ok_or_else(|| {
                MetricError::Configuration("semantic entropy needs an entailment oracle".into())
            })?;
            semantic_entropy(set, oracle, cfg.sequence_prob_mode)?
        }
    };
    if !value.is_finite() {
        return Err(MetricError::Numeric(format!("{metric} produced non-finite value {value}")));
    }
    Ok(MetricScore {
        prompt_id: set.prompt_id.clone(),
        model_id: set.model_id.clone(),
        metric_name: metric,
        value,
        direction: cfg.direction(metric),
    })
}
