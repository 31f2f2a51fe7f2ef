use std::collections::HashSet;

use gss_gateway::{
    collect_samples, ClientConfig, CollectConfig, PromptErrorKind, PromptJob, ProviderClient, Requirements,
    SampleOptions, SamplingParams,
};
use serde::Serialize;

use super::{read_pairs, read_prompts};
use crate::args::CollectArgs;
use crate::error::CliError;
use crate::manifest::RunContext;

pub const ARCHIVE_NAME: &str = "samples.jsonl.gz";

#[derive(Debug, Serialize)]
struct CollectSummary {
    prompts: usize,
    fetched: usize,
    cached: usize,
    failed: usize,
}

/// Samples every selected prompt into `samples.jsonl.gz`, resuming from an
/// existing archive or journal in the output directory. Failed prompts are
/// listed in `collect_errors.jsonl`; the exit status reflects the worst
/// failure class (transport before data).
pub fn cmd_collect(args: &CollectArgs, ctx: &mut RunContext) -> Result<(), CliError> {
    let params = SamplingParams {
        temperature: args.temperature,
        top_k: args.top_k,
        k: args.k,
        max_tokens: args.max_tokens,
        model_id: args.model_id.clone(),
    };
    params.validate().map_err(CliError::Usage)?;
    let mut prompts = read_prompts(&args.prompts, ctx)?;
    if !args.pairs.is_empty() {
        let pairs = read_pairs(&args.pairs, ctx)?;
        let wanted: HashSet<&str> =
            pairs.iter().flat_map(|p| [p.larger_id.as_str(), p.smaller_id.as_str()]).collect();
        let known: HashSet<&str> = prompts.iter().map(|p| p.id.as_str()).collect();
        if let Some(missing) = wanted.iter().find(|id| !known.contains(*id)) {
            return Err(CliError::Data(format!("pair references prompt `{missing}` absent from the prompt file")));
        }
        let wanted: HashSet<String> = wanted.into_iter().map(str::to_owned).collect();
        prompts.retain(|p| wanted.contains(&p.id));
    }
    let jobs: Vec<PromptJob> = prompts.into_iter().map(|p| PromptJob { prompt_id: p.id, text: p.text }).collect();

    let mut client_cfg = ClientConfig::new(args.endpoint.clone());
    client_cfg.bearer_token = args.token.clone();
    client_cfg.max_attempts = args.max_attempts;
    client_cfg.timeout_ms = args.timeout_ms;
    let client = ProviderClient::new(client_cfg)?;
    let cfg = CollectConfig {
        params,
        options: SampleOptions { want_layers: !args.no_layers, want_logsumexp: !args.no_logsumexp },
        embed: !args.no_embed,
        concurrency: args.concurrency.max(1),
        requirements: Requirements {
            logsumexp: !args.no_logsumexp,
            layers: !args.no_layers,
            external_embedding: !args.no_embed,
        },
    };
    let archive = ctx.output_path(ARCHIVE_NAME);
    let report = collect_samples(&client, &jobs, &cfg, &archive)?;
    ctx.output(&archive);
    ctx.write_jsonl("collect_errors.jsonl", &report.errors)?;
    ctx.write_json(
        "collect_summary.json",
        &CollectSummary { prompts: jobs.len(), fetched: report.fetched, cached: report.cached, failed: report.errors.len() },
    )?;
    log::info!("{} fetched, {} cached, {} failed", report.fetched, report.cached, report.errors.len());

    let first = |kinds: &[PromptErrorKind]| report.errors.iter().find(|e| kinds.contains(&e.kind));
    if let Some(e) = first(&[PromptErrorKind::Transport, PromptErrorKind::Rejected, PromptErrorKind::Protocol]) {
        return Err(CliError::Transport(format!(
            "{} of {} prompts failed; first: {}: {}",
            report.errors.len(),
            jobs.len(),
            e.prompt_id,
            e.message
        )));
    }
    if let Some(e) = first(&[PromptErrorKind::Validation, PromptErrorKind::Archive]) {
        return Err(CliError::Data(format!(
            "{} of {} prompts failed; first: {}: {}",
            report.errors.len(),
            jobs.len(),
            e.prompt_id,
            e.message
        )));
    }
    Ok(())
}
