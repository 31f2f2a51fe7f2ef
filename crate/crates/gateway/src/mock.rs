//! A deterministic in-process `/v1` provider for tests.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::Router;
use gss_core::metrics::{tokenize, EntailmentLabel};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::protocol::*;

#[derive(Debug, Clone)]
pub struct MockConfig {
    /// Hidden-state entries per sample (0 omits layers entirely).
    pub layers: usize,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    /// Distinct response texts per prompt; samples cycle through them.
    pub distinct_texts: usize,
    /// The first N requests (over all endpoints) get a 503.
    pub fail_first: usize,
    /// Prompts containing this marker get one sample fewer than requested.
    pub short_marker: Option<String>,
    /// `format_version` written into responses.
    pub reply_version: u32,
    pub expected_token: Option<String>,
}

impl Default for MockConfig {
    fn default() -> Self {
        Self {
            layers: 6,
            hidden_dim: 8,
            embed_dim: 5,
            distinct_texts: 3,
            fail_first: 0,
            short_marker: None,
            reply_version: WIRE_VERSION,
            expected_token: None,
        }
    }
}

struct Shared {
    cfg: MockConfig,
    hits: AtomicUsize,
}

/// Running mock server; shut down on drop.
pub struct MockProvider {
    addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl MockProvider {
    pub fn start(cfg: MockConfig) -> Self {
        let shared = Arc::new(Shared { cfg, hits: AtomicUsize::new(0) });
        let app = Router::new()
            .route(SAMPLE_PATH, post(sample))
            .route(EMBED_PATH, post(embed))
            .route(ENTAIL_PATH, post(entail))
            .route(REWARD_PATH, post(reward))
            .with_state(shared.clone());
        let listener = std::net::TcpListener::bind("127.0.0.1:0").expect("bind mock provider");
        listener.set_nonblocking(true).expect("nonblocking listener");
        let addr = listener.local_addr().expect("local addr");
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .expect("mock runtime");
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).expect("tokio listener");
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        rx.await.ok();
                    })
                    .await
                    .expect("mock server");
            });
        });
        Self { addr, shared, shutdown: Some(tx), thread: Some(thread) }
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Requests received so far, including failed ones.
    pub fn hits(&self) -> usize {
        self.shared.hits.load(Ordering::SeqCst)
    }
}

impl Drop for MockProvider {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn reply<T: Serialize>(status: StatusCode, body: &T) -> Response {
    (status, encode_line(body)).into_response()
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    reply(status, &ErrorBody { format_version: WIRE_VERSION, error: msg.into() })
}

/// Common gatekeeping; returns the decoded request or the error response.
fn admit<T: DeserializeOwned>(s: &Shared, headers: &axum::http::HeaderMap, body: &[u8]) -> Result<T, Response> {
    let n = s.hits.fetch_add(1, Ordering::SeqCst);
    if n < s.cfg.fail_first {
        return Err(error(StatusCode::SERVICE_UNAVAILABLE, "warming up"));
    }
    if let Some(token) = &s.cfg.expected_token {
        let want = format!("Bearer {token}");
        if headers.get("authorization").and_then(|v| v.to_str().ok()) != Some(want.as_str()) {
            return Err(error(StatusCode::UNAUTHORIZED, "bad token"));
        }
    }
    match peek_version(body) {
        Some(v) if v == WIRE_VERSION as u64 => {}
        other => return Err(error(StatusCode::BAD_REQUEST, format!("unsupported format_version {other:?}"))),
    }
    serde_json::from_slice(body).map_err(|e| error(StatusCode::BAD_REQUEST, e.to_string()))
}

/// Deterministic value in [-1, 1) from any hashable key.
fn unit<K: Hash>(key: K) -> f32 {
    let mut h = DefaultHasher::new();
    key.hash(&mut h);
    (h.finish() >> 40) as f32 / (1u64 << 23) as f32 - 1.0
}

async fn sample(State(s): State<Arc<Shared>>, headers: axum::http::HeaderMap, body: Bytes) -> Response {
    let req: SampleRequest = match admit(&s, &headers, &body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let mut k = req.k as usize;
    if s.cfg.short_marker.as_deref().is_some_and(|m| req.prompt.contains(m)) {
        k -= 1;
    }
    let samples = (0..k)
        .map(|i| {
            let variant = i % s.cfg.distinct_texts.max(1);
            let text = format!("answer {variant} to {}", req.prompt);
            let n = tokenize(&text).len().max(1);
            let token_logprobs = (0..n).map(|t| -0.2 - 0.1 * ((t + variant) % 4) as f64).collect();
            let token_logsumexp = req.want_logsumexp.then(|| (0..n).map(|t| 2.0 + 0.01 * t as f64).collect());
            let layers = (req.want_layers && s.cfg.layers > 0).then(|| {
                (0..s.cfg.layers)
                    .map(|l| WireLayer {
                        mean_vec: (0..s.cfg.hidden_dim).map(|j| unit((&req.prompt, i, l, j, 0))).collect(),
                        last_vec: (0..s.cfg.hidden_dim).map(|j| unit((&req.prompt, i, l, j, 1))).collect(),
                    })
                    .collect()
            });
            WireSample { text, token_logprobs, token_logsumexp, layers }
        })
        .collect();
    reply(StatusCode::OK, &SampleResponse { format_version: s.cfg.reply_version, samples })
}

async fn embed(State(s): State<Arc<Shared>>, headers: axum::http::HeaderMap, body: Bytes) -> Response {
    let req: EmbedRequest = match admit(&s, &headers, &body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let vectors = req.texts.iter().map(|t| (0..s.cfg.embed_dim).map(|j| unit((t, j))).collect()).collect();
    reply(StatusCode::OK, &EmbedResponse { format_version: s.cfg.reply_version, vectors })
}

async fn entail(State(s): State<Arc<Shared>>, headers: axum::http::HeaderMap, body: Bytes) -> Response {
    let req: EntailRequest = match admit(&s, &headers, &body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let label = if tokenize(&req.premise) == tokenize(&req.hypothesis) {
        EntailmentLabel::Entail
    } else {
        EntailmentLabel::Neutral
    };
    reply(StatusCode::OK, &EntailResponse { format_version: s.cfg.reply_version, label, confidence: 0.9 })
}

async fn reward(State(s): State<Arc<Shared>>, headers: axum::http::HeaderMap, body: Bytes) -> Response {
    let req: RewardRequest = match admit(&s, &headers, &body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let score = tokenize(&req.response).len() as f64 / 10.0;
    reply(StatusCode::OK, &RewardResponse { format_version: s.cfg.reply_version, score })
}
