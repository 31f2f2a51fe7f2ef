use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Min-max scales `values` into [0, 1]. A constant input carries no
/// ordering information and maps to 0.5 everywhere.
pub fn minmax_normalize(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if values.is_empty() {
        return Vec::new();
    }
    if hi == lo {
        log::info!("min-max normalisation of a constant set; mapping all {} values to 0.5", values.len());
        return vec![0.5; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooEntry {
    pub index: usize,
    pub looe: f64,
    pub normalized: f64,
}

/// Per-response leave-one-out contributions and their normalised rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooResult {
    pub prompt_id: String,
    pub entries: Vec<LooEntry>,
}

pub fn loo_result(prompt_id: &str, looe: &[f64]) -> LooResult {
    let normalized = minmax_normalize(looe);
    LooResult {
        prompt_id: prompt_id.to_owned(),
        entries: looe
            .iter()
            .zip(normalized)
            .enumerate()
            .map(|(index, (&looe, normalized))| LooEntry { index, looe, normalized })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiversityMetric {
    #[default]
    LooEigenscore,
    MeanEmbeddingDistance,
    NegativeLogLikelihood,
}

impl DiversityMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::LooEigenscore => "loo_eigenscore",
            Self::MeanEmbeddingDistance => "mean_embedding_distance",
            Self::NegativeLogLikelihood => "negative_log_likelihood",
        }
    }
}

impl fmt::Display for DiversityMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DiversityMetric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "loo_eigenscore" => Ok(Self::LooEigenscore),
            "mean_embedding_distance" => Ok(Self::MeanEmbeddingDistance),
            "negative_log_likelihood" => Ok(Self::NegativeLogLikelihood),
            _ => Err(format!("unknown diversity metric `{s}`")),
        }
    }
}

/// How the quality and low-quality pools are formed from rewards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolRule {
    /// Reward within `p·(max − min)` of the extreme.
    #[default]
    Range,
    /// The top / bottom `ceil(p·K)` responses by reward.
    Quantile,
}

impl FromStr for PoolRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "range" => Ok(Self::Range),
            "quantile" => Ok(Self::Quantile),
            _ => Err(format!("unknown pool rule `{s}` (expected range or quantile)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairBuildConfig {
    pub quality_fraction: f64,
    pub diversity_metric: DiversityMetric,
    #[serde(default)]
    pub pool_rule: PoolRule,
}

impl Default for PairBuildConfig {
    fn default() -> Self {
        Self { quality_fraction: 0.5, diversity_metric: DiversityMetric::default(), pool_rule: PoolRule::Range }
    }
}

impl PairBuildConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let p = self.quality_fraction;
        if !(p > 0.0 && p <= 1.0) {
            return Err(EvalError::InvalidInput(format!("quality_fraction must lie in (0, 1], got {p}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub reward: f64,
    /// Larger means more diverse.
    pub diversity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    /// The same response won both pools.
    SameResponse,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DivpoSelection {
    Pair { chosen: usize, rejected: usize },
    Skipped { reason: SkipReason },
}

fn pools(candidates: &[Candidate], cfg: &PairBuildConfig) -> (Vec<usize>, Vec<usize>) {
    let p = cfg.quality_fraction;
    match cfg.pool_rule {
        PoolRule::Range => {
            let (lo, hi) = candidates
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.reward), hi.max(c.reward)));
            let span = hi - lo;
            let (top_floor, low_ceiling) = (hi - p * span, lo + p * span);
            let quality = (0..candidates.len()).filter(|&i| candidates[i].reward >= top_floor).collect();
            let low = (0..candidates.len()).filter(|&i| candidates[i].reward <= low_ceiling).collect();
            (quality, low)
        }
        PoolRule::Quantile => {
            let take = ((p * candidates.len() as f64).ceil() as usize).clamp(1, candidates.len());
            let mut order: Vec<usize> = (0..candidates.len()).collect();
            order.sort_by(|&a, &b| candidates[a].reward.total_cmp(&candidates[b].reward).then(a.cmp(&b)));
            let low = order[..take].to_vec();
            let quality = order[order.len() - take..].to_vec();
            (quality, low)
        }
    }
}

/// Picks the most diverse response among high-reward ones and the least
/// diverse among low-reward ones. Ties resolve to the lowest index.
pub fn divpo_select(candidates: &[Candidate], cfg: &PairBuildConfig) -> Result<DivpoSelection, EvalError> {
    cfg.validate()?;
    if candidates.len() < 2 {
        return Err(EvalError::InvalidInput(format!("need at least 2 responses, got {}", candidates.len())));
    }
    if candidates.iter().any(|c| !c.reward.is_finite()) {
        return Err(EvalError::InvalidInput("rewards must be finite".into()));
    }
    if candidates.iter().any(|c| c.diversity.is_nan()) {
        return Err(EvalError::InvalidInput("diversity scores must not be NaN".into()));
    }
    let (quality, low) = pools(candidates, cfg);
    let div = |i: &usize| candidates[*i].diversity;
    // max_by returns the last maximum, so compare with reversed index to keep the first
    let chosen = *quality
        .iter()
        .max_by(|a, b| div(a).total_cmp(&div(b)).then(b.cmp(a)))
        .expect("extremes always qualify");
    let rejected = *low
        .iter()
        .min_by(|a, b| div(a).total_cmp(&div(b)).then(a.cmp(b)))
        .expect("extremes always qualify");
    if chosen == rejected {
        return Ok(DivpoSelection::Skipped { reason: SkipReason::SameResponse });
    }
    Ok(DivpoSelection::Pair { chosen, rejected })
}
