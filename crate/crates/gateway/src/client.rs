use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use gss_core::metrics::{EntailmentOracle, EntailmentVerdict, OracleError, ResponseSample};
use rand::Rng;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archive::SamplingParams;
use crate::protocol::*;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("transport failure talking to {url} after {} attempt(s): {}", .trace.len(), .trace.join("; "))]
    Transport { url: String, trace: Vec<String> },
    #[error("{url} rejected the request with status {status}: {body}")]
    Rejected { url: String, status: u16, body: String },
    #[error("protocol violation from {url}: {detail}")]
    Protocol { url: String, detail: String },
    #[error("invalid configuration: {0}")]
    Configuration(String),
}

impl GatewayError {
    pub fn is_transport(&self) -> bool {
        matches!(self, Self::Transport { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientConfig {
    /// Base URL, e.g. `http://127.0.0.1:8080`.
    pub endpoint: String,
    #[serde(default, skip_serializing)]
    pub bearer_token: Option<String>,
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub timeout_ms: u64,
}

impl ClientConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            bearer_token: None,
            max_attempts: 4,
            initial_backoff_ms: 200,
            max_backoff_ms: 5_000,
            timeout_ms: 300_000,
        }
    }
}

/// Which optional per-sample fields to ask the provider for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SampleOptions {
    pub want_layers: bool,
    pub want_logsumexp: bool,
}

/// Blocking `/v1` client with jittered exponential backoff on transient
/// failures (connection errors, timeouts, 429 and 5xx).
#[derive(Debug, Clone)]
pub struct ProviderClient {
    cfg: ClientConfig,
    http: Client,
}

enum Attempt<T> {
    Done(T),
    Retry(String),
    Fail(GatewayError),
}

impl ProviderClient {
    pub fn new(cfg: ClientConfig) -> Result<Self, GatewayError> {
        if cfg.max_attempts == 0 {
            return Err(GatewayError::Configuration("max_attempts must be at least 1".into()));
        }
        if !(cfg.endpoint.starts_with("http://") || cfg.endpoint.starts_with("https://")) {
            return Err(GatewayError::Configuration(format!("endpoint {:?} is not an http(s) URL", cfg.endpoint)));
        }
        let http = Client::builder()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| GatewayError::Configuration(e.to_string()))?;
        Ok(Self { cfg, http })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.cfg
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.cfg.endpoint.trim_end_matches('/'))
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let base = self.cfg.initial_backoff_ms.saturating_mul(1 << attempt.min(16)).min(self.cfg.max_backoff_ms);
        let jitter = rand::thread_rng().gen_range(0.5..=1.0);
        Duration::from_millis((base as f64 * jitter) as u64)
    }

    fn attempt<T: DeserializeOwned>(&self, url: &str, body: &[u8]) -> Attempt<T> {
        let mut req = self.http.post(url).header("content-type", "application/x-ndjson").body(body.to_vec());
        if let Some(token) = &self.cfg.bearer_token {
            req = req.bearer_auth(token);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status();
        let bytes = match resp.bytes() {
            Ok(b) => b,
            Err(e) => return Attempt::Retry(format!("reading body: {e}")),
        };
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Attempt::Retry(format!("status {}", status.as_u16()));
        }
        if !status.is_success() {
            return Attempt::Fail(GatewayError::Rejected {
                url: url.to_owned(),
                status: status.as_u16(),
                body: String::from_utf8_lossy(&bytes).trim().to_owned(),
            });
        }
        let protocol = |detail: String| Attempt::Fail(GatewayError::Protocol { url: url.to_owned(), detail });
        match peek_version(&bytes) {
            Some(v) if v == WIRE_VERSION as u64 => {}
            Some(v) => return protocol(format!("format_version {v}, expected {WIRE_VERSION}")),
            None => return protocol("response lacks format_version".into()),
        }
        match serde_json::from_slice(&bytes) {
            Ok(v) => Attempt::Done(v),
            Err(e) => protocol(format!("schema-invalid response: {e}")),
        }
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, req: &Req) -> Result<Resp, GatewayError> {
        let url = self.url(path);
        let body = encode_line(req);
        let mut trace = Vec::new();
        for attempt in 0..self.cfg.max_attempts {
            match self.attempt(&url, &body) {
                Attempt::Done(v) => return Ok(v),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(why) => {
                    log::warn!("{url}: attempt {} failed: {why}", attempt + 1);
                    trace.push(format!("attempt {}: {why}", attempt + 1));
                    if attempt + 1 < self.cfg.max_attempts {
                        thread::sleep(self.backoff(attempt));
                    }
                }
            }
        }
        Err(GatewayError::Transport { url, trace })
    }

    pub fn sample(
        &self,
        prompt: &str,
        params: &SamplingParams,
        opts: SampleOptions,
    ) -> Result<Vec<ResponseSample>, GatewayError> {
        params.validate().map_err(GatewayError::Configuration)?;
        let req = SampleRequest {
            format_version: WIRE_VERSION,
            prompt: prompt.to_owned(),
            temperature: params.temperature,
            top_k: params.top_k,
            k: params.k,
            max_tokens: params.max_tokens,
            want_layers: opts.want_layers,
            want_logsumexp: opts.want_logsumexp,
            model_id: params.model_id.clone(),
        };
        let resp: SampleResponse = self.post(SAMPLE_PATH, &req)?;
        Ok(resp.samples.into_iter().map(WireSample::into_sample).collect())
    }

    pub fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, GatewayError> {
        let req = EmbedRequest { format_version: WIRE_VERSION, texts: texts.to_vec() };
        let resp: EmbedResponse = self.post(EMBED_PATH, &req)?;
        if resp.vectors.len() != texts.len() {
            return Err(GatewayError::Protocol {
                url: self.url(EMBED_PATH),
                detail: format!("{} vectors for {} texts", resp.vectors.len(), texts.len()),
            });
        }
        Ok(resp.vectors)
    }

    pub fn entail(&self, premise: &str, hypothesis: &str) -> Result<EntailmentVerdict, GatewayError> {
        let req = EntailRequest {
            format_version: WIRE_VERSION,
            premise: premise.to_owned(),
            hypothesis: hypothesis.to_owned(),
        };
        let resp: EntailResponse = self.post(ENTAIL_PATH, &req)?;
        if !(resp.confidence.is_finite() && (0.0..=1.0).contains(&resp.confidence)) {
            return Err(GatewayError::Protocol {
                url: self.url(ENTAIL_PATH),
                detail: format!("confidence {} outside [0, 1]", resp.confidence),
            });
        }
        Ok(EntailmentVerdict::new(resp.label, resp.confidence))
    }

    pub fn reward(&self, prompt: &str, response: &str) -> Result<f64, GatewayError> {
        let req = RewardRequest {
            format_version: WIRE_VERSION,
            prompt: prompt.to_owned(),
            response: response.to_owned(),
        };
        let resp: RewardResponse = self.post(REWARD_PATH, &req)?;
        if !resp.score.is_finite() {
            return Err(GatewayError::Protocol { url: self.url(REWARD_PATH), detail: "non-finite score".into() });
        }
        Ok(resp.score)
    }
}

/// Entailment over `/v1/entail`, memoising verdicts per ordered text pair.
/// The memo can be saved and reloaded so scoring reruns need no network.
pub struct HttpEntailmentOracle {
    client: Option<ProviderClient>,
    cache: Mutex<HashMap<(String, String), EntailmentVerdict>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictEntry {
    pub premise: String,
    pub hypothesis: String,
    #[serde(flatten)]
    pub verdict: EntailmentVerdict,
}

impl HttpEntailmentOracle {
    pub fn new(client: ProviderClient) -> Self {
        Self { client: Some(client), cache: Mutex::default() }
    }

    /// Serves only cached verdicts; a miss is a transport error.
    pub fn offline() -> Self {
        Self { client: None, cache: Mutex::default() }
    }

    pub fn load_cache(&self, path: &Path) -> Result<usize, gss_core::io::RecordIoError> {
        if !path.exists() {
            return Ok(0);
        }
        let entries: Vec<VerdictEntry> = gss_core::io::read_jsonl(path)?;
        let mut cache = self.cache.lock().expect("verdict cache poisoned");
        let n = entries.len();
        for e in entries {
            cache.insert((e.premise, e.hypothesis), e.verdict);
        }
        Ok(n)
    }

    pub fn save_cache(&self, path: &Path) -> Result<(), gss_core::io::RecordIoError> {
        let cache = self.cache.lock().expect("verdict cache poisoned");
        let mut entries: Vec<VerdictEntry> = cache
            .iter()
            .map(|((p, h), v)| VerdictEntry { premise: p.clone(), hypothesis: h.clone(), verdict: *v })
            .collect();
        entries.sort_by(|a, b| (&a.premise, &a.hypothesis).cmp(&(&b.premise, &b.hypothesis)));
        gss_core::io::write_jsonl(path, &entries)
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().expect("verdict cache poisoned").len()
    }
}

impl EntailmentOracle for HttpEntailmentOracle {
    fn entail(&self, premise: &str, hypothesis: &str) -> Result<EntailmentVerdict, OracleError> {
        let key = (premise.to_owned(), hypothesis.to_owned());
        if let Some(v) = self.cache.lock().expect("verdict cache poisoned").get(&key) {
            return Ok(*v);
        }
        let Some(client) = &self.client else {
            return Err(OracleError::Transport("verdict not cached and no entailment endpoint configured".into()));
        };
        let verdict = client.entail(premise, hypothesis).map_err(|e| match e {
            GatewayError::Transport { .. } => OracleError::Transport(e.to_string()),
            GatewayError::Protocol { .. } | GatewayError::Rejected { .. } => OracleError::Protocol(e.to_string()),
            GatewayError::Configuration(m) => OracleError::Other(m),
        })?;
        self.cache.lock().expect("verdict cache poisoned").insert(key, verdict);
        Ok(verdict)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_configuration() {
        assert!(ProviderClient::new(ClientConfig::new("localhost:1")).is_err());
        let mut cfg = ClientConfig::new("http://localhost:1");
        cfg.max_attempts = 0;
        assert!(ProviderClient::new(cfg).is_err());
    }

    #[test]
    fn backoff_is_bounded_and_jittered() {
        let mut cfg = ClientConfig::new("http://localhost:1");
        cfg.initial_backoff_ms = 100;
        cfg.max_backoff_ms = 1000;
        let c = ProviderClient::new(cfg).unwrap();
        for attempt in 0..40 {
            let b = c.backoff(attempt).as_millis() as u64;
            let cap = (100u64 << attempt.min(16)).min(1000);
            assert!(b >= cap / 2 && b <= cap, "attempt {attempt}: {b}");
        }
    }

    #[test]
    fn offline_oracle_misses_are_transport_errors() {
        let o = HttpEntailmentOracle::offline();
        assert!(matches!(o.entail("a", "b"), Err(OracleError::Transport(_))));
    }

    #[test]
    fn token_is_never_serialised() {
        let mut cfg = ClientConfig::new("http://x");
        cfg.bearer_token = Some("secret".into());
        assert!(!serde_json::to_string(&cfg).unwrap().contains("secret"));
    }
}
