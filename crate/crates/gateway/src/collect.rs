use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::archive::{partial_path, read_archive, write_archive, ArchiveError, ArchiveRecord, PartialArchive, SamplingParams};
use crate::client::{GatewayError, ProviderClient, SampleOptions};
use crate::validate::{validate_record, Requirements, Violation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptJob {
    pub prompt_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectConfig {
    pub params: SamplingParams,
    pub options: SampleOptions,
    /// Also fetch `/v1/embed` vectors for every response.
    pub embed: bool,
    pub concurrency: usize,
    pub requirements: Requirements,
}

impl Default for CollectConfig {
    fn default() -> Self {
        Self {
            params: SamplingParams::default(),
            options: SampleOptions { want_layers: true, want_logsumexp: true },
            embed: true,
            concurrency: 4,
            requirements: Requirements::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptErrorKind {
    Transport,
    Rejected,
    Protocol,
    Validation,
    Archive,
}

/// A prompt that produced no record, and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptError {
    pub prompt_id: String,
    pub kind: PromptErrorKind,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CollectReport {
    /// Prompts fetched from the provider during this run.
    pub fetched: usize,
    /// Prompts already present (same parameters) in the archive or journal.
    pub cached: usize,
    pub errors: Vec<PromptError>,
}

fn gateway_error(prompt_id: &str, e: GatewayError) -> PromptError {
    let kind = match e {
        GatewayError::Transport { .. } => PromptErrorKind::Transport,
        GatewayError::Rejected { .. } => PromptErrorKind::Rejected,
        GatewayError::Protocol { .. } | GatewayError::Configuration(_) => PromptErrorKind::Protocol,
    };
    PromptError { prompt_id: prompt_id.to_owned(), kind, message: e.to_string(), violations: Vec::new() }
}

fn fetch_one(client: &ProviderClient, job: &PromptJob, cfg: &CollectConfig) -> Result<ArchiveRecord, PromptError> {
    let mut samples = client.sample(&job.text, &cfg.params, cfg.options).map_err(|e| gateway_error(&job.prompt_id, e))?;
    if cfg.embed && !samples.is_empty() {
        let texts: Vec<String> = samples.iter().map(|s| s.text.clone()).collect();
        let vectors = client.embed(&texts).map_err(|e| gateway_error(&job.prompt_id, e))?;
        for (s, v) in samples.iter_mut().zip(vectors) {
            s.external_embedding = Some(v);
        }
    }
    let rec = ArchiveRecord::new(job.prompt_id.clone(), cfg.params.clone(), samples).map_err(|e| PromptError {
        prompt_id: job.prompt_id.clone(),
        kind: PromptErrorKind::Validation,
        message: e.to_string(),
        violations: Vec::new(),
    })?;
    validate_record(&rec, &cfg.requirements).map_err(|violations| PromptError {
        prompt_id: job.prompt_id.clone(),
        kind: PromptErrorKind::Validation,
        message: format!(
            "response violates the record contract: {}",
            violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
        ),
        violations,
    })?;
    Ok(rec)
}

/// Collects K samples per prompt into the archive at `archive`.
///
/// Prompts already archived with identical sampling parameters — in the
/// final archive or in the `.partial` journal of an interrupted run — are
/// not requested again. New records are journaled as they arrive; on
/// completion the archive is rewritten atomically (sorted by prompt id) and
/// the journal removed. Failed prompts are returned as error entries and
/// can be retried by running again.
pub fn collect_samples(
    client: &ProviderClient,
    prompts: &[PromptJob],
    cfg: &CollectConfig,
    archive: &Path,
) -> Result<CollectReport, ArchiveError> {
    let journal_path = partial_path(archive);
    let mut have: HashMap<String, ArchiveRecord> = HashMap::new();
    if archive.exists() {
        for r in read_archive(archive)? {
            have.insert(r.prompt_id.clone(), r);
        }
    }
    for r in PartialArchive::recover(&journal_path)? {
        have.insert(r.prompt_id.clone(), r);
    }
    let wanted: HashMap<&str, &PromptJob> = prompts.iter().map(|p| (p.prompt_id.as_str(), p)).collect();
    let stale = have.values().filter(|r| !wanted.contains_key(r.prompt_id.as_str()) || r.params != cfg.params).count();
    if stale > 0 {
        log::warn!("{stale} archived record(s) do not match this run's prompts or parameters and will be replaced");
    }
    have.retain(|id, r| wanted.contains_key(id.as_str()) && r.params == cfg.params);

    let todo: Vec<&PromptJob> = prompts.iter().filter(|p| !have.contains_key(&p.prompt_id)).collect();
    let mut report = CollectReport { cached: have.len(), ..Default::default() };

    if !todo.is_empty() {
        let journal = Mutex::new(PartialArchive::open(&journal_path)?);
        let fetched = Mutex::new(Vec::new());
        let errors = Mutex::new(Vec::new());
        let next = AtomicUsize::new(0);
        let workers = cfg.concurrency.clamp(1, todo.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(job) = todo.get(i) else { break };
                    let outcome = fetch_one(client, job, cfg).and_then(|rec| {
                        journal.lock().expect("journal poisoned").append(&rec).map_err(|e| PromptError {
                            prompt_id: job.prompt_id.clone(),
                            kind: PromptErrorKind::Archive,
                            message: e.to_string(),
                            violations: Vec::new(),
                        })?;
                        Ok(rec)
                    });
                    match outcome {
                        Ok(rec) => fetched.lock().expect("results poisoned").push(rec),
                        Err(e) => {
                            log::error!("prompt {}: {}", e.prompt_id, e.message);
                            errors.lock().expect("errors poisoned").push(e);
                        }
                    }
                });
            }
        });
        let fetched = fetched.into_inner().expect("results poisoned");
        report.fetched = fetched.len();
        for r in fetched {
            have.insert(r.prompt_id.clone(), r);
        }
        report.errors = errors.into_inner().expect("errors poisoned");
        report.errors.sort_by(|a, b| a.prompt_id.cmp(&b.prompt_id));
    }

    let mut records: Vec<ArchiveRecord> = have.into_values().collect();
    records.sort_by(|a, b| a.prompt_id.cmp(&b.prompt_id));
    write_archive(&records, archive)?;
    if journal_path.exists() {
        std::fs::remove_file(&journal_path).map_err(|source| ArchiveError::Io { path: journal_path, source })?;
    }
    Ok(report)
}
