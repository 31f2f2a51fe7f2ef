//! Command-line surface. Every subcommand's arguments are serialisable so a
//! run manifest can freeze the resolved values and `gss replay` can re-run
//! them.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gss_core::bench::Dataset;
use gss_core::eval::{DiversityMetric, PoolRule};
use gss_core::metrics::{Direction, EmbeddingSource, LayerWindow, MetricName, SequenceProbMode};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Parser)]
#[command(name = "gss", version, about = "Generation-space-size benchmark toolkit")]
pub struct Cli {
    /// TOML file with default flag values; flags and GSS_* variables win.
    #[arg(long, global = true, env = "GSS_CONFIG")]
    pub config: Option<PathBuf>,

    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Synthesise benchmark prompts and ordered prompt pairs.
    Generate(GenerateArgs),
    /// Sample K responses per prompt from a /v1 provider into an archive.
    Collect(CollectArgs),
    /// Compute metric scores from sample archives.
    Score(ScoreArgs),
    /// Pairwise accuracy per dataset with macro averages and selections.
    Eval(EvalArgs),
    /// Welch's t-test between positively and negatively labelled prompts.
    Ttest(TtestArgs),
    /// Pearson correlation between scores and reasoning-token counts.
    Corr(CorrArgs),
    /// Threshold classifier accuracy, macro-F1 and AUC against labels.
    Classify(ClassifyArgs),
    /// Leave-one-out EigenScore contributions and normalised rewards.
    Loo(LooArgs),
    /// Build chosen/rejected preference pairs by diversity-aware selection.
    PairsBuild(PairsBuildArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Generate(_) => "generate",
            Self::Collect(_) => "collect",
            Self::Score(_) => "score",
            Self::Eval(_) => "eval",
            Self::Ttest(_) => "ttest",
            Self::Corr(_) => "corr",
            Self::Classify(_) => "classify",
            Self::Loo(_) => "loo",
            Self::PairsBuild(_) => "pairs-build",
            Self::Replay(_) => "replay",
        }
    }

    pub fn out_dir(&self) -> Option<&PathBuf> {
        match self {
            Self::Generate(a) => Some(&a.out),
            Self::Collect(a) => Some(&a.out),
            Self::Score(a) => Some(&a.out),
            Self::Eval(a) => Some(&a.out),
            Self::Ttest(a) => Some(&a.out),
            Self::Corr(a) => Some(&a.out),
            Self::Classify(a) => Some(&a.out),
            Self::Loo(a) => Some(&a.out),
            Self::PairsBuild(a) => Some(&a.out),
            Self::Replay(_) => None,
        }
    }

    pub fn out_dir_mut(&mut self) -> Option<&mut PathBuf> {
        match self {
            Self::Generate(a) => Some(&mut a.out),
            Self::Collect(a) => Some(&mut a.out),
            Self::Score(a) => Some(&mut a.out),
            Self::Eval(a) => Some(&mut a.out),
            Self::Ttest(a) => Some(&mut a.out),
            Self::Corr(a) => Some(&mut a.out),
            Self::Classify(a) => Some(&mut a.out),
            Self::Loo(a) => Some(&mut a.out),
            Self::PairsBuild(a) => Some(&mut a.out),
            Self::Replay(_) => None,
        }
    }
}

/// `all` or one synthetic dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetSel {
    All,
    One(Dataset),
}

impl FromStr for DatasetSel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(Self::All);
        }
        match s.parse::<Dataset>()? {
            Dataset::External => Err("external datasets are loaded from pair files, not generated".into()),
            d => Ok(Self::One(d)),
        }
    }
}

impl fmt::Display for DatasetSel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::All => f.write_str("all"),
            Self::One(d) => d.fmt(f),
        }
    }
}

impl Serialize for DatasetSel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DatasetSel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// `metric=higher|lower`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionOverride {
    pub metric: String,
    pub direction: Direction,
}

impl FromStr for DirectionOverride {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (metric, dir) = s.split_once('=').ok_or_else(|| format!("`{s}` should look like metric=higher"))?;
        Ok(Self { metric: metric.trim().to_owned(), direction: dir.trim().parse()? })
    }
}

/// Direction for `metric`: explicit override, else the metric's default,
/// else higher-means-larger for metrics this tool does not know.
pub fn direction_for(metric: &str, overrides: &[DirectionOverride]) -> Direction {
    overrides
        .iter()
        .rev()
        .find(|o| o.metric == metric)
        .map(|o| o.direction)
        .or_else(|| metric.parse::<MetricName>().ok().map(MetricName::default_direction))
        .unwrap_or(Direction::HigherMeansLarger)
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    /// `all` or one of complement, factualqa, random_choice, subset, union, intersection.
    #[arg(long, env = "GSS_DATASET", default_value = "all")]
    pub dataset: DatasetSel,
    /// Pair count (complement, factualqa, random_choice) or set count (subset, union, intersection).
    #[arg(long, visible_alias = "n", env = "GSS_SETS")]
    pub sets: Option<usize>,
    #[arg(long, env = "GSS_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "GSS_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CollectArgs {
    /// Prompt file (`{id, text, ...}` per line).
    #[arg(long, env = "GSS_PROMPTS")]
    pub prompts: PathBuf,
    /// Only sample prompts referenced by these pair files.
    #[arg(long, env = "GSS_PAIRS", value_delimiter = ',')]
    pub pairs: Vec<PathBuf>,
    #[arg(long, env = "GSS_ENDPOINT")]
    pub endpoint: String,
    #[arg(long, env = "GSS_TOKEN", hide_env_values = true)]
    #[serde(skip)]
    pub token: Option<String>,
    #[arg(long, env = "GSS_MODEL_ID", default_value = "")]
    pub model_id: String,
    #[arg(long, env = "GSS_K", default_value_t = 10)]
    pub k: u32,
    #[arg(long, env = "GSS_TEMPERATURE", default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long, env = "GSS_TOP_K", default_value_t = 10)]
    pub top_k: u32,
    #[arg(long, env = "GSS_MAX_TOKENS", default_value_t = 256)]
    pub max_tokens: u32,
    #[arg(long, env = "GSS_CONCURRENCY", default_value_t = 4)]
    pub concurrency: usize,
    #[arg(long, env = "GSS_MAX_ATTEMPTS", default_value_t = 4)]
    pub max_attempts: u32,
    #[arg(long, env = "GSS_TIMEOUT_MS", default_value_t = 300_000)]
    pub timeout_ms: u64,
    /// Do not request hidden-state statistics.
    #[arg(long, env = "GSS_NO_LAYERS")]
    pub no_layers: bool,
    /// Do not request per-token log-sum-exp values.
    #[arg(long, env = "GSS_NO_LOGSUMEXP")]
    pub no_logsumexp: bool,
    /// Skip the /v1/embed call.
    #[arg(long, env = "GSS_NO_EMBED")]
    pub no_embed: bool,
    #[arg(long, env = "GSS_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Identical token sequences entail each other; nothing else does.
    #[default]
    Exact,
    /// Ask the provider's /v1/entail endpoint (verdicts cached).
    Http,
    /// Only verdicts from --verdict-cache; misses are errors.
    Cache,
}

pub const DEFAULT_METRICS: &str =
    "perplexity,energy,normalized_entropy,lexical_similarity,eigenscore_original,eigenscore_output,eigenscore_average";

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ScoreArgs {
    #[arg(long, env = "GSS_ARCHIVE", value_delimiter = ',', required = true)]
    pub archive: Vec<PathBuf>,
    #[arg(long, env = "GSS_METRICS", value_delimiter = ',', default_value = DEFAULT_METRICS)]
    pub metrics: Vec<MetricName>,
    #[arg(long, env = "GSS_ALPHA", default_value_t = 1e-3)]
    pub alpha: f64,
    /// `start:end` layer indices or `fraction:offset` (e.g. 0.65:2).
    #[arg(long, env = "GSS_LAYER_WINDOW", default_value = "0.65:2")]
    pub layer_window: LayerWindow,
    /// Sequence weighting for semantic entropy: length_normalized or raw.
    #[arg(long, env = "GSS_SEQ_PROB", default_value = "length_normalized")]
    pub seq_prob: SequenceProbMode,
    #[arg(long, env = "GSS_ORACLE", value_enum, default_value_t = OracleKind::Exact)]
    pub oracle: OracleKind,
    #[arg(long, env = "GSS_ENDPOINT")]
    pub endpoint: Option<String>,
    #[arg(long, env = "GSS_TOKEN", hide_env_values = true)]
    #[serde(skip)]
    pub token: Option<String>,
    /// Entailment verdict cache (read before scoring, rewritten after).
    #[arg(long, env = "GSS_VERDICT_CACHE")]
    pub verdict_cache: Option<PathBuf>,
    /// Worker threads; 0 uses all cores. Output does not depend on it.
    #[arg(long, env = "GSS_THREADS", default_value_t = 0)]
    pub threads: usize,
    #[arg(long, env = "GSS_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    #[arg(long, env = "GSS_SCORES", value_delimiter = ',', required = true)]
    pub scores: Vec<PathBuf>,
    #[arg(long, env = "GSS_PAIRS", value_delimiter = ',', required = true)]
    pub pairs: Vec<PathBuf>,
    /// Per-metric orientation override, e.g. `lexical_similarity=higher`.
    #[arg(long, env = "GSS_DIRECTION", value_delimiter = ',')]
    pub direction: Vec<DirectionOverride>,
    #[arg(long, env = "GSS_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TtestArgs {
    #[arg(long, env = "GSS_SCORES", value_delimiter = ',', required = true)]
    pub scores: Vec<PathBuf>,
    /// Label file `{prompt_id, label}`; positive labels form the first group.
    #[arg(long, env = "GSS_LABELS")]
    pub labels: PathBuf,
    #[arg(long, env = "GSS_DIRECTION", value_delimiter = ',')]
    pub direction: Vec<DirectionOverride>,
    #[arg(long, env = "GSS_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CorrArgs {
    #[arg(long, env = "GSS_SCORES", value_delimiter = ',', required = true)]
    pub scores: Vec<PathBuf>,
    /// Token-count file `{prompt_id, reasoning_token_count}`.
    #[arg(long, env = "GSS_TOKEN_COUNTS")]
    pub token_counts: PathBuf,
    #[arg(long, env = "GSS_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ClassifyArgs {
    #[arg(long, env = "GSS_SCORES", value_delimiter = ',', required = true)]
    pub scores: Vec<PathBuf>,
    #[arg(long, env = "GSS_LABELS")]
    pub labels: PathBuf,
    /// Decision threshold; defaults to the median score of each cell.
    #[arg(long, env = "GSS_THRESHOLD")]
    pub threshold: Option<f64>,
    #[arg(long, env = "GSS_DIRECTION", value_delimiter = ',')]
    pub direction: Vec<DirectionOverride>,
    #[arg(long, env = "GSS_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct LooArgs {
    #[arg(long, env = "GSS_ARCHIVE", value_delimiter = ',', required_unless_present = "values", conflicts_with = "values")]
    pub archive: Vec<PathBuf>,
    /// Raw LOOE values to normalise directly (comma separated).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub values: Vec<f64>,
    #[arg(long, default_value = "values")]
    pub prompt_id: String,
    /// Embedding source: output, original or average.
    #[arg(long, env = "GSS_SOURCE", default_value = "output")]
    pub source: EmbeddingSource,
    #[arg(long, env = "GSS_ALPHA", default_value_t = 1e-3)]
    pub alpha: f64,
    #[arg(long, env = "GSS_LAYER_WINDOW", default_value = "0.65:2")]
    pub layer_window: LayerWindow,
    #[arg(long, env = "GSS_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PairsBuildArgs {
    #[arg(long, env = "GSS_ARCHIVE")]
    pub archive: PathBuf,
    /// Prompt file, for prompt texts in the output and reward requests.
    #[arg(long, env = "GSS_PROMPTS")]
    pub prompts: Option<PathBuf>,
    /// Reward file `{prompt_id, index, reward}`.
    #[arg(long, env = "GSS_REWARDS", required_unless_present = "endpoint", conflicts_with = "endpoint")]
    pub rewards: Option<PathBuf>,
    /// Score responses with the provider's /v1/reward endpoint instead.
    #[arg(long, env = "GSS_ENDPOINT")]
    pub endpoint: Option<String>,
    #[arg(long, env = "GSS_TOKEN", hide_env_values = true)]
    #[serde(skip)]
    pub token: Option<String>,
    #[arg(long, env = "GSS_DIVERSITY", default_value = "loo_eigenscore")]
    pub diversity: DiversityMetric,
    #[arg(long, env = "GSS_SOURCE", default_value = "output")]
    pub source: EmbeddingSource,
    #[arg(long, env = "GSS_QUALITY_FRACTION", default_value_t = 0.5)]
    pub quality_fraction: f64,
    /// Pool rule: range (reward bands) or quantile.
    #[arg(long, env = "GSS_POOL_RULE", default_value = "range")]
    pub pool_rule: PoolRule,
    #[arg(long, env = "GSS_ALPHA", default_value_t = 1e-3)]
    pub alpha: f64,
    #[arg(long, env = "GSS_LAYER_WINDOW", default_value = "0.65:2")]
    pub layer_window: LayerWindow,
    #[arg(long, env = "GSS_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
