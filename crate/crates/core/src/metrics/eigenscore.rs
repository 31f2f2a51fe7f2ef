use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{EmbeddingMatrix, MetricConfig, MetricError, MetricName, SampleSet};
use crate::linalg::{center_rows, gram, logdet_psd};

/// `(1/K)·ln det((JZ)(JZ)ᵀ + α·I_K)`, computed in the K×K Gram form.
pub fn eigenscore_matrix(z: &EmbeddingMatrix, alpha: f64) -> Result<f64, MetricError> {
    if z.rows() < 2 {
        return Err(MetricError::InvalidInput(format!(
            "eigenscore needs at least 2 samples, got {}",
            z.rows()
        )));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(MetricError::Configuration(format!("alpha must be > 0, got {alpha}")));
    }
    let centered = center_rows(z)?;
    let mut g = gram(&centered);
    g.add_diagonal(alpha);
    Ok(logdet_psd(&g)? / z.rows() as f64)
}

fn require_layers(set: &SampleSet, metric: MetricName) -> Result<usize, MetricError> {
    let n = set.layer_count();
    if n == 0 {
        return Err(MetricError::DataUnavailable {
            metric,
            detail: "samples carry no hidden-state statistics".into(),
        });
    }
    if let Some(i) = set.samples.iter().position(|s| s.layers.len() != n) {
        return Err(MetricError::DataUnavailable {
            metric,
            detail: format!("sample {i} has {} layers, expected {n}", set.samples[i].layers.len()),
        });
    }
    Ok(n)
}

fn check_k(set: &SampleSet) -> Result<(), MetricError> {
    if set.k() < 2 {
        return Err(MetricError::InvalidInput(format!(
            "prompt {}: covariance needs K ≥ 2, got {}",
            set.prompt_id,
            set.k()
        )));
    }
    Ok(())
}

fn last_layer_matrix(set: &SampleSet) -> Result<EmbeddingMatrix, MetricError> {
    let n = require_layers(set, MetricName::EigenscoreOriginal)?;
    EmbeddingMatrix::from_f32_rows(set.samples.iter().map(|s| s.layers[n - 1].last_vec.as_slice()))
}

fn layer_mean_matrix(set: &SampleSet, layer: usize) -> Result<EmbeddingMatrix, MetricError> {
    EmbeddingMatrix::from_f32_rows(set.samples.iter().map(|s| s.layers[layer].mean_vec.as_slice()))
}

fn output_matrix(set: &SampleSet) -> Result<EmbeddingMatrix, MetricError> {
    let rows = set
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.external_embedding.as_deref().ok_or_else(|| MetricError::DataUnavailable {
                metric: MetricName::EigenscoreOutput,
                detail: format!("sample {i} has no external embedding"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    EmbeddingMatrix::from_f32_rows(rows)
}

/// EigenScore on the last token's hidden state of the final layer.
pub fn eigenscore_original(set: &SampleSet, cfg: &MetricConfig) -> Result<f64, MetricError> {
    check_k(set)?;
    cfg.check_alpha()?;
    eigenscore_matrix(&last_layer_matrix(set)?, cfg.alpha)
}

/// Layer-window average of token-mean EigenScores.
pub fn eigenscore_average(set: &SampleSet, cfg: &MetricConfig) -> Result<f64, MetricError> {
    check_k(set)?;
    cfg.check_alpha()?;
    let n = require_layers(set, MetricName::EigenscoreAverage)?;
    let window = cfg.layer_window.resolve(n)?;
    let count = window.clone().count();
    let mut total = 0.0;
    for layer in window {
        total += eigenscore_matrix(&layer_mean_matrix(set, layer)?, cfg.alpha)?;
    }
    Ok(total / count as f64)
}

/// EigenScore over external sentence-embedding vectors.
pub fn eigenscore_output(set: &SampleSet, cfg: &MetricConfig) -> Result<f64, MetricError> {
    check_k(set)?;
    cfg.check_alpha()?;
    eigenscore_matrix(&output_matrix(set)?, cfg.alpha)
}

/// Leave-one-out EigenScore: `E_global − E(Z without row i)` for every row.
pub fn loo_eigenscore(z: &EmbeddingMatrix, alpha: f64) -> Result<Vec<f64>, MetricError> {
    if z.rows() < 3 {
        return Err(MetricError::InvalidInput(format!(
            "leave-one-out needs K ≥ 3, got {}",
            z.rows()
        )));
    }
    let global = eigenscore_matrix(z, alpha)?;
    (0..z.rows())
        .map(|i| Ok(global - eigenscore_matrix(&z.without_row(i), alpha)?))
        .collect()
}

/// Which embeddings feed per-response diversity scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingSource {
    /// External sentence-embedding vectors.
    #[default]
    Output,
    /// Last token of the final layer.
    Original,
    /// Token means, averaged over the configured layer window.
    Average,
}

impl FromStr for EmbeddingSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "output" => Ok(Self::Output),
            "original" => Ok(Self::Original),
            "average" => Ok(Self::Average),
            other => Err(format!("unknown embedding source `{other}` (output|original|average)")),
        }
    }
}

/// LOOE for each response of a sample set. For [`EmbeddingSource::Average`]
/// the per-layer LOOE vectors are averaged over the layer window.
pub fn loo_eigenscore_set(
    set: &SampleSet,
    source: EmbeddingSource,
    cfg: &MetricConfig,
) -> Result<Vec<f64>, MetricError> {
    cfg.check_alpha()?;
    match source {
        EmbeddingSource::Output => loo_eigenscore(&output_matrix(set)?, cfg.alpha),
        EmbeddingSource::Original => loo_eigenscore(&last_layer_matrix(set)?, cfg.alpha),
        EmbeddingSource::Average => {
            let n = require_layers(set, MetricName::EigenscoreAverage)?;
            let window = cfg.layer_window.resolve(n)?;
            let count = window.clone().count() as f64;
            let mut acc = vec![0.0; set.k()];
            for layer in window {
                let loo = loo_eigenscore(&layer_mean_matrix(set, layer)?, cfg.alpha)?;
                acc.iter_mut().zip(loo).for_each(|(a, v)| *a += v);
            }
            Ok(acc.into_iter().map(|v| v / count).collect())
        }
    }
}

/// Per-response distance to the mean embedding; for
/// [`EmbeddingSource::Average`] the distances are averaged over the window.
pub fn mean_embedding_distance_set(
    set: &SampleSet,
    source: EmbeddingSource,
    cfg: &MetricConfig,
) -> Result<Vec<f64>, MetricError> {
    match source {
        EmbeddingSource::Output => mean_embedding_distance(&output_matrix(set)?),
        EmbeddingSource::Original => mean_embedding_distance(&last_layer_matrix(set)?),
        EmbeddingSource::Average => {
            let n = require_layers(set, MetricName::EigenscoreAverage)?;
            let window = cfg.layer_window.resolve(n)?;
            let count = window.clone().count() as f64;
            let mut acc = vec![0.0; set.k()];
            for layer in window {
                let dist = mean_embedding_distance(&layer_mean_matrix(set, layer)?)?;
                acc.iter_mut().zip(dist).for_each(|(a, v)| *a += v);
            }
            Ok(acc.into_iter().map(|v| v / count).collect())
        }
    }
}

/// Euclidean distance of each row to the row mean.
pub fn mean_embedding_distance(z: &EmbeddingMatrix) -> Result<Vec<f64>, MetricError> {
    if z.rows() < 2 {
        return Err(MetricError::InvalidInput(format!(
            "mean distance needs K ≥ 2, got {}",
            z.rows()
        )));
    }
    let centered = center_rows(z)?;
    Ok(centered.iter_rows().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect())
}
