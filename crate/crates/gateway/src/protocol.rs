//! `/v1` wire messages. Every body is one JSON object terminated by a
//! newline and carries `format_version`.

use gss_core::metrics::{EntailmentLabel, LayerStats, ResponseSample};
use serde::{Deserialize, Serialize};

pub const WIRE_VERSION: u32 = 1;

pub const SAMPLE_PATH: &str = "/v1/sample";
pub const EMBED_PATH: &str = "/v1/embed";
pub const ENTAIL_PATH: &str = "/v1/entail";
pub const REWARD_PATH: &str = "/v1/reward";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRequest {
    pub format_version: u32,
    pub prompt: String,
    pub temperature: f64,
    pub top_k: u32,
    pub k: u32,
    pub max_tokens: u32,
    pub want_layers: bool,
    pub want_logsumexp: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub model_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireLayer {
    pub mean_vec: Vec<f32>,
    pub last_vec: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireSample {
    pub text: String,
    pub token_logprobs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logsumexp: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<WireLayer>>,
}

impl WireSample {
    pub fn into_sample(self) -> ResponseSample {
        let layers = self
            .layers
            .unwrap_or_default()
            .into_iter()
            .enumerate()
            .map(|(i, l)| LayerStats { layer_index: i as u32, mean_vec: l.mean_vec, last_vec: l.last_vec })
            .collect();
        ResponseSample {
            text: self.text,
            token_count: self.token_logprobs.len() as u32,
            token_logprobs: self.token_logprobs,
            token_logsumexp: self.token_logsumexp.unwrap_or_default(),
            layers,
            external_embedding: None,
        }
    }

    pub fn from_sample(s: &ResponseSample) -> Self {
        Self {
            text: s.text.clone(),
            token_logprobs: s.token_logprobs.clone(),
            token_logsumexp: (!s.token_logsumexp.is_empty()).then(|| s.token_logsumexp.clone()),
            layers: (!s.layers.is_empty()).then(|| {
                s.layers.iter().map(|l| WireLayer { mean_vec: l.mean_vec.clone(), last_vec: l.last_vec.clone() }).collect()
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResponse {
    pub format_version: u32,
    pub samples: Vec<WireSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub format_version: u32,
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub format_version: u32,
    pub vectors: Vec<Vec<f32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntailRequest {
    pub format_version: u32,
    pub premise: String,
    pub hypothesis: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntailResponse {
    pub format_version: u32,
    pub label: EntailmentLabel,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRequest {
    pub format_version: u32,
    pub prompt: String,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardResponse {
    pub format_version: u32,
    pub score: f64,
}

/// Error body returned by conforming providers on a rejected request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub format_version: u32,
    pub error: String,
}

/// Encodes a message as a single newline-terminated JSON line.
pub fn encode_line<T: Serialize>(msg: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec(msg).expect("wire messages always serialise");
    out.push(b'\n');
    out
}

/// Reads `format_version` from any wire body without committing to a type.
pub fn peek_version(body: &[u8]) -> Option<u64> {
    #[derive(Deserialize)]
    struct Peek {
        format_version: Option<u64>,
    }
    serde_json::from_slice::<Peek>(body).ok()?.format_version
}
