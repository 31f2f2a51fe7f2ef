use std::collections::BTreeMap;

use gss_core::bench::{generate_all, generate_dataset, BuildConfig, TemplateBank};
use serde::Serialize;

use crate::args::{DatasetSel, GenerateArgs};
use crate::error::CliError;
use crate::manifest::RunContext;

#[derive(Debug, Default, Serialize)]
struct Counts {
    prompts: usize,
    pairs: usize,
}

/// Writes `prompts.jsonl`, `pairs.jsonl` and per-dataset `counts.json`.
pub fn cmd_generate(args: &GenerateArgs, ctx: &mut RunContext) -> Result<(), CliError> {
    let bank = TemplateBank::default();
    ctx.seeds.insert("bench".into(), args.seed);
    let bench = match args.dataset {
        DatasetSel::All => {
            if args.sets.is_some() {
                return Err(CliError::Usage("--sets needs a single --dataset".into()));
            }
            generate_all(&bank, &BuildConfig { seed: args.seed, ..BuildConfig::default() })?
        }
        DatasetSel::One(d) => {
            let size = args.sets.unwrap_or_else(|| BuildConfig::default().size_of(d));
            let mut b = generate_dataset(&bank, d, size, args.seed)?;
            b.sort();
            b
        }
    };
    let mut counts: BTreeMap<String, Counts> = BTreeMap::new();
    for p in &bench.prompts {
        counts.entry(p.dataset.to_string()).or_default().prompts += 1;
    }
    for p in &bench.pairs {
        counts.entry(p.dataset.to_string()).or_default().pairs += 1;
    }
    for (d, c) in &counts {
        log::info!("{d}: {} prompts, {} pairs", c.prompts, c.pairs);
    }
    ctx.write_jsonl("prompts.jsonl", &bench.prompts)?;
    ctx.write_jsonl("pairs.jsonl", &bench.pairs)?;
    ctx.write_json("counts.json", &counts)?;
    Ok(())
}
