use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lexical::tokenize;
use super::{MetricError, SampleSet, SequenceProbMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntailmentLabel {
    Entail,
    Neutral,
    Contradict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntailmentVerdict {
    pub label: EntailmentLabel,
    pub confidence: f64,
}

impl EntailmentVerdict {
    pub fn new(label: EntailmentLabel, confidence: f64) -> Self {
        Self { label, confidence }
    }

    pub fn entails(&self) -> bool {
        self.label == EntailmentLabel::Entail
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("{0}")]
    Other(String),
}

/// Answers whether `premise` entails `hypothesis`.
///
/// Implementations must be callable from several threads at once.
pub trait EntailmentOracle: Send + Sync {
    fn entail(&self, premise: &str, hypothesis: &str) -> Result<EntailmentVerdict, OracleError>;
}

impl<T: EntailmentOracle + ?Sized> EntailmentOracle for &T {
    fn entail(&self, premise: &str, hypothesis: &str) -> Result<EntailmentVerdict, OracleError> {
        (**self).entail(premise, hypothesis)
    }
}

/// Offline baseline: two texts entail each other iff their token sequences
/// are identical after lowercasing and stripping punctuation.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMatchOracle;

impl EntailmentOracle for ExactMatchOracle {
    fn entail(&self, premise: &str, hypothesis: &str) -> Result<EntailmentVerdict, OracleError> {
        let label = if tokenize(premise) == tokenize(hypothesis) {
            EntailmentLabel::Entail
        } else {
            EntailmentLabel::Neutral
        };
        Ok(EntailmentVerdict::new(label, 1.0))
    }
}

/// Greedy clustering: each text joins the first cluster whose representative
/// (its first member) it entails in both directions, else opens a new one.
/// Returns clusters as lists of input indices.
pub fn cluster_by_entailment<S: AsRef<str>>(
    texts: &[S],
    oracle: &dyn EntailmentOracle,
) -> Result<Vec<Vec<usize>>, MetricError> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let ask = |p: usize, h: usize| {
        oracle
            .entail(texts[p].as_ref(), texts[h].as_ref())
            .map(|v| v.entails())
            .map_err(|source| MetricError::Oracle { premise: p, hypothesis: h, source })
    };
    'texts: for i in 0..texts.len() {
        for cluster in &mut clusters {
            let rep = cluster[0];
            if ask(rep, i)? && ask(i, rep)? {
                cluster.push(i);
                continue 'texts;
            }
        }
        clusters.push(vec![i]);
    }
    Ok(clusters)
}

/// Entropy over entailment clusters, with cluster mass given by the
/// (normalised) sequence probabilities of its members.
pub fn semantic_entropy(
    set: &SampleSet,
    oracle: &dyn EntailmentOracle,
    mode: SequenceProbMode,
) -> Result<f64, MetricError> {
    if set.samples.is_empty() {
        return Err(MetricError::InvalidInput(format!("prompt {}: no samples", set.prompt_id)));
    }
    let log_weights: Vec<f64> = set
        .samples
        .iter()
        .map(|s| match mode {
            SequenceProbMode::LengthNormalized => s.mean_logprob(),
            SequenceProbMode::Raw => s.sequence_logprob(),
        })
        .collect();
    // weights are rescaled by the largest one, which cancels on normalisation
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(MetricError::Numeric(format!(
            "prompt {}: every sequence weight underflowed; switch between raw and length-normalised mode",
            set.prompt_id
        )));
    }
    let weights: Vec<f64> = log_weights.iter().map(|l| (l - max).exp()).collect();
    let texts: Vec<&str> = set.samples.iter().map(|s| s.text.as_str()).collect();
    let clusters = cluster_by_entailment(&texts, oracle)?;
    let masses: Vec<f64> =
        clusters.iter().map(|c| c.iter().map(|&i| weights[i]).sum()).collect();
    let total: f64 = masses.iter().sum();
    let entropy = -masses
        .iter()
        .map(|m| m / total)
        .filter(|p| *p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>();
    Ok(entropy.max(0.0))
}
