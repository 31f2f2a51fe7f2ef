use std::collections::HashMap;
use std::fmt::Write as _;

use gss_core::eval::{
    divpo_select, loo_result, Candidate, DiversityMetric, DivpoSelection, LooResult, PairBuildConfig,
    SkipReason,
};
use gss_core::metrics::{loo_eigenscore_set, mean_embedding_distance_set, MetricConfig, SampleSet};
use gss_gateway::{ClientConfig, ProviderClient};
use serde::{Deserialize, Serialize};

use super::{read_archives, read_prompts};
use crate::args::{LooArgs, PairsBuildArgs};
use crate::error::CliError;
use crate::manifest::RunContext;

#[derive(Debug, Serialize)]
struct LooRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    model_id: Option<String>,
    #[serde(flatten)]
    result: LooResult,
}

fn metric_config(alpha: f64, layer_window: gss_core::metrics::LayerWindow) -> Result<MetricConfig, CliError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(CliError::Usage(format!("--alpha must be > 0, got {alpha}")));
    }
    Ok(MetricConfig { alpha, layer_window, ..MetricConfig::default() })
}

/// Leave-one-out EigenScore per response with min-max normalised rewards,
/// from archives or from raw `--values`. Writes `loo.jsonl` and `loo.md`.
pub fn cmd_loo(args: &LooArgs, ctx: &mut RunContext) -> Result<(), CliError> {
    let mut rows = Vec::new();
    if !args.values.is_empty() {
        if args.values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Data("--values must be finite".into()));
        }
        rows.push(LooRow { model_id: None, result: loo_result(&args.prompt_id, &args.values) });
    } else {
        let cfg = metric_config(args.alpha, args.layer_window)?;
        for rec in read_archives(&args.archive, ctx)? {
            let set = rec.to_sample_set();
            let looe = loo_eigenscore_set(&set, args.source, &cfg)
                .map_err(|e| CliError::from(e).context(&format!("prompt `{}`", set.prompt_id)))?;
            rows.push(LooRow { model_id: Some(set.model_id), result: loo_result(&rec.prompt_id, &looe) });
        }
    }
    let mut md = String::from("# Leave-one-out EigenScore\n\n| prompt | response | LOOE | normalized |\n|---|---|---|---|\n");
    for row in &rows {
        for e in &row.result.entries {
            let _ = writeln!(md, "| {} | {} | {:.4} | {:.2} |", row.result.prompt_id, e.index, e.looe, e.normalized);
        }
    }
    ctx.write_jsonl("loo.jsonl", &rows)?;
    ctx.write_text("loo.md", &md)?;
    Ok(())
}

/// One line of a reward file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub prompt_id: String,
    /// Response position within the archived sample list.
    pub index: usize,
    pub reward: f64,
}

/// A chosen/rejected preference pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub prompt_id: String,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    pub chosen: String,
    pub rejected: String,
    pub chosen_index: usize,
    pub rejected_index: usize,
    pub chosen_reward: f64,
    pub rejected_reward: f64,
    pub chosen_diversity: f64,
    pub rejected_diversity: f64,
}

#[derive(Debug, Serialize)]
struct Skipped {
    prompt_id: String,
    reason: String,
}

fn diversity(set: &SampleSet, args: &PairsBuildArgs, cfg: &MetricConfig) -> Result<Vec<f64>, CliError> {
    Ok(match args.diversity {
        DiversityMetric::LooEigenscore => loo_eigenscore_set(set, args.source, cfg)?,
        DiversityMetric::MeanEmbeddingDistance => mean_embedding_distance_set(set, args.source, cfg)?,
        // less likely under the model = more diverse
        DiversityMetric::NegativeLogLikelihood => set.samples.iter().map(|s| -s.sequence_logprob()).collect(),
    })
}

/// Diversity-aware preference pairs: per prompt, the most diverse response
/// among high-reward ones against the least diverse among low-reward ones.
/// Writes `preferences.jsonl` and `skipped.jsonl`.
pub fn cmd_pairs_build(args: &PairsBuildArgs, ctx: &mut RunContext) -> Result<(), CliError> {
    let cfg = metric_config(args.alpha, args.layer_window)?;
    let pair_cfg = PairBuildConfig {
        quality_fraction: args.quality_fraction,
        diversity_metric: args.diversity,
        pool_rule: args.pool_rule,
    };
    pair_cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let records = read_archives(std::slice::from_ref(&args.archive), ctx)?;
    let texts: HashMap<String, String> = match &args.prompts {
        Some(p) => read_prompts(p, ctx)?.into_iter().map(|p| (p.id, p.text)).collect(),
        None => HashMap::new(),
    };
    let file_rewards: Option<HashMap<(String, usize), f64>> = match &args.rewards {
        Some(path) => {
            ctx.input(path);
            let mut m = HashMap::new();
            for r in gss_core::io::read_jsonl::<RewardRecord>(path)? {
                if m.insert((r.prompt_id.clone(), r.index), r.reward).is_some() {
                    return Err(CliError::Data(format!("duplicate reward for `{}` response {}", r.prompt_id, r.index)));
                }
            }
            Some(m)
        }
        None => None,
    };
    let client = match &args.endpoint {
        Some(endpoint) => {
            if args.prompts.is_none() {
                return Err(CliError::Usage("--endpoint rewards need --prompts for the prompt texts".into()));
            }
            let mut c = ClientConfig::new(endpoint.clone());
            c.bearer_token = args.token.clone();
            Some(ProviderClient::new(c)?)
        }
        None => None,
    };

    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for rec in &records {
        let set = rec.to_sample_set();
        let skip = |reason: String| Skipped { prompt_id: set.prompt_id.clone(), reason };
        let rewards: Result<Vec<f64>, String> = (0..set.k())
            .map(|i| match (&file_rewards, &client) {
                (Some(m), _) => m
                    .get(&(set.prompt_id.clone(), i))
                    .copied()
                    .ok_or_else(|| format!("no reward for response {i}")),
                (None, Some(c)) => {
                    let text = texts.get(&set.prompt_id).ok_or("prompt text unknown")?;
                    c.reward(text, &set.samples[i].text).map_err(|e| e.to_string())
                }
                (None, None) => unreachable!("clap requires --rewards or --endpoint"),
            })
            .collect();
        let rewards = match rewards {
            Ok(r) => r,
            Err(e) if client.is_some() => return Err(CliError::Transport(format!("prompt `{}`: {e}", set.prompt_id))),
            Err(e) => {
                skipped.push(skip(e));
                continue;
            }
        };
        let div = match diversity(&set, args, &cfg) {
            Ok(d) => d,
            Err(e) => {
                skipped.push(skip(e.to_string()));
                continue;
            }
        };
        let candidates: Vec<Candidate> =
            rewards.iter().zip(&div).map(|(&reward, &diversity)| Candidate { reward, diversity }).collect();
        match divpo_select(&candidates, &pair_cfg) {
            Ok(DivpoSelection::Pair { chosen, rejected }) => pairs.push(PreferencePair {
                prompt_id: set.prompt_id.clone(),
                model_id: set.model_id.clone(),
                prompt: texts.get(&set.prompt_id).cloned(),
                chosen: set.samples[chosen].text.clone(),
                rejected: set.samples[rejected].text.clone(),
                chosen_index: chosen,
                rejected_index: rejected,
                chosen_reward: rewards[chosen],
                rejected_reward: rewards[rejected],
                chosen_diversity: div[chosen],
                rejected_diversity: div[rejected],
            }),
            Ok(DivpoSelection::Skipped { reason: SkipReason::SameResponse }) => {
                skipped.push(skip("same_response".into()))
            }
            Err(e) => skipped.push(skip(e.to_string())),
        }
    }
    log::info!("{} preference pairs, {} prompts skipped", pairs.len(), skipped.len());
    ctx.write_jsonl("preferences.jsonl", &pairs)?;
    ctx.write_jsonl("skipped.jsonl", &skipped)?;
    Ok(())
}
