use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use gss_core::eval::ScoreRecord;
use gss_core::metrics::{
    score, EntailmentOracle, ExactMatchOracle, MetricConfig, MetricError, MetricName, SampleSet,
};
use gss_gateway::{ClientConfig, HttpEntailmentOracle, ProviderClient};
use serde::{Deserialize, Serialize};

use crate::args::{OracleKind, ScoreArgs};
use crate::error::CliError;
use crate::manifest::RunContext;

/// A `(prompt, metric)` that could not be scored, and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unavailable {
    pub prompt_id: String,
    pub model_id: String,
    pub metric_name: String,
    /// data_unavailable, invalid_input, configuration, singular, numeric or oracle.
    pub kind: String,
    pub detail: String,
}

fn kind_of(e: &MetricError) -> &'static str {
    match e {
        MetricError::InvalidInput(_) => "invalid_input",
        MetricError::DataUnavailable { .. } => "data_unavailable",
        MetricError::Singular { .. } => "singular",
        MetricError::Configuration(_) => "configuration",
        MetricError::Numeric(_) => "numeric",
        MetricError::Oracle { .. } => "oracle",
    }
}

enum Oracle {
    Exact(ExactMatchOracle),
    Http(HttpEntailmentOracle),
}

impl Oracle {
    fn as_dyn(&self) -> &dyn EntailmentOracle {
        match self {
            Self::Exact(o) => o,
            Self::Http(o) => o,
        }
    }
}

fn build_oracle(args: &ScoreArgs, ctx: &mut RunContext) -> Result<Oracle, CliError> {
    match args.oracle {
        OracleKind::Exact => Ok(Oracle::Exact(ExactMatchOracle)),
        OracleKind::Http => {
            let endpoint = args
                .endpoint
                .clone()
                .ok_or_else(|| CliError::Usage("--oracle http needs --endpoint".into()))?;
            let mut cfg = ClientConfig::new(endpoint);
            cfg.bearer_token = args.token.clone();
            let oracle = HttpEntailmentOracle::new(ProviderClient::new(cfg)?);
            if let Some(cache) = args.verdict_cache.as_deref().filter(|p| p.exists()) {
                ctx.input(cache);
                let n = oracle.load_cache(cache)?;
                log::info!("loaded {n} cached entailment verdicts");
            }
            Ok(Oracle::Http(oracle))
        }
        OracleKind::Cache => {
            let cache = args
                .verdict_cache
                .as_deref()
                .ok_or_else(|| CliError::Usage("--oracle cache needs --verdict-cache".into()))?;
            ctx.input(cache);
            let oracle = HttpEntailmentOracle::offline();
            oracle.load_cache(cache)?;
            Ok(Oracle::Http(oracle))
        }
    }
}

/// Scores every archived prompt on every requested metric.
///
/// Writes `scores.jsonl` (sorted by model, metric, prompt) and
/// `unavailable.jsonl` with one entry per `(prompt, metric)` that could not
/// be computed — for example eigenscore_original on an archive without
/// hidden states. Such entries do not fail the run.
pub fn cmd_score(args: &ScoreArgs, ctx: &mut RunContext) -> Result<(), CliError> {
    if !(args.alpha > 0.0 && args.alpha.is_finite()) {
        return Err(CliError::Usage(format!("--alpha must be > 0, got {}", args.alpha)));
    }
    let mut metrics: Vec<MetricName> = Vec::new();
    for m in &args.metrics {
        if !metrics.contains(m) {
            metrics.push(*m);
        }
    }
    let mut sets: Vec<SampleSet> = Vec::new();
    for path in &args.archive {
        ctx.input(path);
        let fallback = path
            .file_name()
            .map(|n| n.to_string_lossy().trim_end_matches(".gz").trim_end_matches(".jsonl").to_owned())
            .unwrap_or_default();
        for rec in gss_gateway::read_archive(path)? {
            let mut set = rec.to_sample_set();
            if set.model_id.is_empty() {
                set.model_id = fallback.clone();
            }
            sets.push(set);
        }
    }
    let mut seen = HashSet::new();
    if let Some(dup) = sets.iter().find(|s| !seen.insert((s.model_id.clone(), s.prompt_id.clone()))) {
        return Err(CliError::Data(format!(
            "prompt `{}` appears twice for model `{}`",
            dup.prompt_id, dup.model_id
        )));
    }

    let oracle = if metrics.contains(&MetricName::SemanticEntropy) { Some(build_oracle(args, ctx)?) } else { None };
    let cfg = MetricConfig {
        alpha: args.alpha,
        layer_window: args.layer_window,
        directions: Vec::new(),
        sequence_prob_mode: args.seq_prob,
    };

    let workers = match args.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .clamp(1, sets.len().max(1));
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(sets.len()));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(set) = sets.get(i) else { break };
                let row: Vec<_> = metrics
                    .iter()
                    .map(|&m| score(set, m, &cfg, oracle.as_ref().map(Oracle::as_dyn)))
                    .collect();
                results.lock().expect("score results poisoned").push((i, row));
            });
        }
    });
    let mut results = results.into_inner().expect("score results poisoned");
    results.sort_by_key(|(i, _)| *i);

    let mut scores = Vec::new();
    let mut unavailable = Vec::new();
    for (i, row) in results {
        let set = &sets[i];
        for (metric, r) in metrics.iter().zip(row) {
            match r {
                Ok(s) => scores.push(ScoreRecord {
                    prompt_id: s.prompt_id,
                    model_id: s.model_id,
                    metric_name: metric.as_str().to_owned(),
                    value: s.value,
                }),
                Err(e) => unavailable.push(Unavailable {
                    prompt_id: set.prompt_id.clone(),
                    model_id: set.model_id.clone(),
                    metric_name: metric.as_str().to_owned(),
                    kind: kind_of(&e).to_owned(),
                    detail: e.to_string(),
                }),
            }
        }
    }
    let key = |m: &str, f: &str, p: &str| (m.to_owned(), f.to_owned(), p.to_owned());
    scores.sort_by_cached_key(|s| key(&s.model_id, &s.metric_name, &s.prompt_id));
    unavailable.sort_by_cached_key(|u| key(&u.model_id, &u.metric_name, &u.prompt_id));
    if !unavailable.is_empty() {
        log::warn!("{} (prompt, metric) scores unavailable; see unavailable.jsonl", unavailable.len());
    }

    if let (Some(Oracle::Http(o)), Some(cache), OracleKind::Http) = (&oracle, &args.verdict_cache, args.oracle) {
        o.save_cache(cache)?;
        ctx.output(cache);
    }
    ctx.write_jsonl("scores.jsonl", &scores)?;
    ctx.write_jsonl("unavailable.jsonl", &unavailable)?;
    Ok(())
}
