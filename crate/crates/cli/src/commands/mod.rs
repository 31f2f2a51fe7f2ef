mod collect;
mod generate;
mod report;
mod score;
mod select;

pub use collect::cmd_collect;
pub use generate::cmd_generate;
pub use report::{cmd_classify, cmd_corr, cmd_eval, cmd_ttest};
pub use score::{cmd_score, Unavailable};
pub use select::{cmd_loo, cmd_pairs_build, PreferencePair, RewardRecord};

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use chrono::Utc;
use gss_core::bench::PromptPair;
use gss_core::eval::{LabelRecord, ScoreRecord, ScoreTable};
use gss_gateway::ArchiveRecord;
use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::error::{exit, CliError};
use crate::manifest::{OutputLock, RunContext, RunManifest};

/// Runs one command, holding its output directory's lock, and writes its
/// manifest (also when the command fails).
pub fn run(command: Command) -> Result<RunManifest, CliError> {
    if let Command::Replay(r) = &command {
        let recorded = RunManifest::read(&r.manifest)?;
        let mut cmd = recorded.config;
        if let (Some(out), Some(slot)) = (&r.out, cmd.out_dir_mut()) {
            *slot = out.clone();
        }
        log::info!("replaying `{}` from {}", cmd.name(), r.manifest.display());
        return run(cmd);
    }
    let out = command.out_dir().expect("every non-replay command has --out").clone();
    let _lock = OutputLock::acquire(&out, command.name())?;
    let started = Utc::now();
    let mut ctx = RunContext::new(&out);
    let result = dispatch(&command, &mut ctx);
    let (inputs, outputs) = ctx.entries();
    let manifest = RunManifest {
        command: command.name().to_owned(),
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        config: command.clone(),
        inputs,
        outputs,
        seeds: ctx.seeds.clone(),
        started,
        finished: Utc::now(),
        status: result.as_ref().map_or_else(|e| e.to_string(), |_| "ok".to_owned()),
        exit_code: result.as_ref().map_or_else(CliError::exit_code, |_| exit::OK),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Data(e.to_string()))?;
    bytes.push(b'\n');
    gss_core::io::write_atomic(&out.join(RunManifest::file_name(command.name())), &bytes)?;
    result.map(|()| manifest)
}

fn dispatch(command: &Command, ctx: &mut RunContext) -> Result<(), CliError> {
    match command {
        Command::Generate(a) => cmd_generate(a, ctx),
        Command::Collect(a) => cmd_collect(a, ctx),
        Command::Score(a) => cmd_score(a, ctx),
        Command::Eval(a) => cmd_eval(a, ctx),
        Command::Ttest(a) => cmd_ttest(a, ctx),
        Command::Corr(a) => cmd_corr(a, ctx),
        Command::Classify(a) => cmd_classify(a, ctx),
        Command::Loo(a) => cmd_loo(a, ctx),
        Command::PairsBuild(a) => cmd_pairs_build(a, ctx),
        Command::Replay(_) => unreachable!("replay is resolved before dispatch"),
    }
}

/// The `{id, text}` part of any prompt file.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub(crate) struct PromptText {
    pub id: String,
    pub text: String,
}

pub(crate) fn read_prompts(path: &Path, ctx: &mut RunContext) -> Result<Vec<PromptText>, CliError> {
    ctx.input(path);
    let prompts: Vec<PromptText> = gss_core::io::read_jsonl(path)?;
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = prompts.iter().find(|p| !seen.insert(p.id.as_str())) {
        return Err(CliError::Data(format!("{}: duplicate prompt id `{}`", path.display(), dup.id)));
    }
    Ok(prompts)
}

pub(crate) fn read_pairs(paths: &[PathBuf], ctx: &mut RunContext) -> Result<Vec<PromptPair>, CliError> {
    let mut pairs = Vec::new();
    for p in paths {
        ctx.input(p);
        pairs.extend(gss_core::io::read_jsonl::<PromptPair>(p)?);
    }
    Ok(pairs)
}

pub(crate) fn read_scores(paths: &[PathBuf], ctx: &mut RunContext) -> Result<ScoreTable, CliError> {
    let mut records = Vec::new();
    for p in paths {
        ctx.input(p);
        records.extend(gss_core::io::read_jsonl::<ScoreRecord>(p)?);
    }
    let mut seen = std::collections::HashSet::new();
    for r in &records {
        if !seen.insert((&r.model_id, &r.metric_name, &r.prompt_id)) {
            return Err(CliError::Data(format!(
                "duplicate score for model `{}`, metric `{}`, prompt `{}`",
                r.model_id, r.metric_name, r.prompt_id
            )));
        }
        if !r.value.is_finite() {
            return Err(CliError::Data(format!("non-finite score for prompt `{}`", r.prompt_id)));
        }
    }
    Ok(ScoreTable::from_records(&records))
}

pub(crate) fn read_labels(path: &Path, ctx: &mut RunContext) -> Result<HashMap<String, LabelRecord>, CliError> {
    ctx.input(path);
    let mut out = HashMap::new();
    for l in gss_core::io::read_jsonl::<LabelRecord>(path)? {
        let id = l.prompt_id.clone();
        if out.insert(id.clone(), l).is_some() {
            return Err(CliError::Data(format!("{}: duplicate label for `{id}`", path.display())));
        }
    }
    Ok(out)
}

pub(crate) fn read_archives(paths: &[PathBuf], ctx: &mut RunContext) -> Result<Vec<ArchiveRecord>, CliError> {
    let mut records = Vec::new();
    for p in paths {
        ctx.input(p);
        records.extend(gss_gateway::read_archive(p)?);
    }
    Ok(records)
}

/// Prompt ids of a score map in sorted order.
pub(crate) fn sorted_ids(scores: &HashMap<String, f64>) -> Vec<&String> {
    let mut ids: Vec<&String> = scores.keys().collect();
    ids.sort();
    ids
}
