use std::fmt;

use gss_core::metrics::MetricName;
use serde::{Deserialize, Serialize};

use crate::archive::ArchiveRecord;

/// Which optional fields must be present, derived from the metrics that
/// will run on the record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Requirements {
    pub logsumexp: bool,
    pub layers: bool,
    pub external_embedding: bool,
}

impl Requirements {
    pub fn for_metrics(metrics: &[MetricName]) -> Self {
        let mut r = Self::default();
        for m in metrics {
            match m {
                MetricName::Energy => r.logsumexp = true,
                MetricName::EigenscoreOriginal | MetricName::EigenscoreAverage => r.layers = true,
                MetricName::EigenscoreOutput => r.external_embedding = true,
                _ => {}
            }
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Offending sample, or `None` for record-level problems.
    pub sample: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sample {
            Some(i) => write!(f, "sample {i}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, sample: Option<usize>, field: &str, message: String) {
        self.0.push(Violation { sample, field: field.to_owned(), message });
    }
}

/// Checks every static precondition of the metric functions so that
/// scoring a valid record cannot fail on shape. Optional fields are only
/// required when `req` asks for them, but are always shape-checked when
/// present.
pub fn validate_record(rec: &ArchiveRecord, req: &Requirements) -> Result<(), Vec<Violation>> {
    let mut v = Collector(Vec::new());
    if let Err(e) = rec.params.validate() {
        v.push(None, "params", e);
    }
    if rec.model_id != rec.params.model_id {
        v.push(None, "model_id", format!("{:?} differs from params.model_id {:?}", rec.model_id, rec.params.model_id));
    }
    if rec.samples.len() != rec.params.k as usize {
        v.push(None, "samples", format!("expected k = {} samples, found {}", rec.params.k, rec.samples.len()));
    }
    if rec.samples.is_empty() {
        return Err(v.0);
    }

    let first = &rec.samples[0];
    let layer_count = first.layers.len();
    let layer_dim = first.layers.first().map(|l| l.mean_vec.len());
    let embed_dim = first.external_embedding.as_ref().map(Vec::len);

    for (i, s) in rec.samples.iter().enumerate() {
        let at = Some(i);
        let n = s.token_count as usize;
        if s.token_logprobs.len() != n {
            v.push(at, "token_logprobs", format!("length {} but token_count is {n}", s.token_logprobs.len()));
        }
        if let Some(x) = s.token_logprobs.iter().find(|x| !x.is_finite() || **x > 1e-9) {
            v.push(at, "token_logprobs", format!("value {x} is not a finite log-probability"));
        }
        if !s.token_logsumexp.is_empty() && s.token_logsumexp.len() != n {
            v.push(at, "token_logsumexp", format!("length {} but token_count is {n}", s.token_logsumexp.len()));
        }
        if s.token_logsumexp.iter().any(|x| !x.is_finite()) {
            v.push(at, "token_logsumexp", "contains non-finite values".into());
        }
        if req.logsumexp && s.token_logsumexp.is_empty() {
            v.push(at, "token_logsumexp", "required by energy but absent".into());
        }

        if s.layers.len() != layer_count {
            v.push(at, "layers", format!("{} layers, sample 0 has {layer_count}", s.layers.len()));
        }
        if req.layers && s.layers.is_empty() {
            v.push(at, "layers", "required by hidden-state eigenscores but absent".into());
        }
        for (j, l) in s.layers.iter().enumerate() {
            if l.layer_index as usize != j {
                v.push(at, "layers", format!("position {j} has layer_index {}", l.layer_index));
            }
            let dim = layer_dim.unwrap_or(0);
            if l.mean_vec.len() != dim || l.last_vec.len() != dim {
                v.push(
                    at,
                    "layers",
                    format!("layer {j} widths {}/{} differ from {dim}", l.mean_vec.len(), l.last_vec.len()),
                );
            }
            if l.mean_vec.iter().chain(&l.last_vec).any(|x| !x.is_finite()) {
                v.push(at, "layers", format!("layer {j} contains non-finite values"));
            }
        }
        if req.layers && layer_dim == Some(0) {
            v.push(at, "layers", "zero-width hidden vectors".into());
        }

        match (&s.external_embedding, embed_dim) {
            (Some(e), Some(d)) if e.len() != d => {
                v.push(at, "external_embedding", format!("width {} differs from sample 0 width {d}", e.len()));
            }
            (Some(_), None) | (None, Some(_)) => {
                v.push(at, "external_embedding", "present on some samples only".into());
            }
            _ => {}
        }
        if let Some(e) = &s.external_embedding {
            if e.is_empty() {
                v.push(at, "external_embedding", "empty vector".into());
            }
            if e.iter().any(|x| !x.is_finite()) {
                v.push(at, "external_embedding", "contains non-finite values".into());
            }
        } else if req.external_embedding {
            v.push(at, "external_embedding", "required by eigenscore_output but absent".into());
        }
    }
    if v.0.is_empty() {
        Ok(())
    } else {
        Err(v.0)
    }
}
