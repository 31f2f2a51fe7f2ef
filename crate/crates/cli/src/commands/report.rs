use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use gss_core::eval::{
    best_metric, best_model, binary_threshold_eval, evaluate_all, group_summary, pearson_r, welch_t_test,
    AccuracyReport, ClassifierReport, CorrelationResult, EvalError, GroupSummaryReport, LabelRecord, Selection,
    TTestResult,
};
use gss_core::metrics::Direction;
use serde::Serialize;

use super::{read_labels, read_pairs, read_scores, sorted_ids};
use crate::args::{direction_for, ClassifyArgs, CorrArgs, EvalArgs, TtestArgs};
use crate::error::CliError;
use crate::manifest::RunContext;

fn dir_str(d: Direction) -> &'static str {
    match d {
        Direction::HigherMeansLarger => "higher",
        Direction::LowerMeansLarger => "lower",
    }
}

#[derive(Debug, Serialize)]
struct Selections {
    best_metric: BTreeMap<String, Selection>,
    best_model: BTreeMap<String, Selection>,
}

fn render_accuracy(reports: &[AccuracyReport], sel: &Selections) -> String {
    let datasets: BTreeSet<_> = reports.iter().flat_map(|r| r.datasets.iter().map(|d| d.dataset)).collect();
    let mut s = String::from("# Pairwise accuracy\n\n| model | metric | direction |");
    for d in &datasets {
        let _ = write!(s, " {d} |");
    }
    s.push_str(" macro | excluded |\n|---|---|---|");
    s.push_str(&"---|".repeat(datasets.len() + 2));
    s.push('\n');
    for r in reports {
        let _ = write!(s, "| {} | {} | {} |", r.model_id, r.metric_name, dir_str(r.direction));
        for d in &datasets {
            match r.dataset(*d) {
                Some(a) => {
                    let _ = write!(s, " {:.3} ± {:.3} |", a.accuracy, a.ci_halfwidth);
                }
                None => s.push_str(" – |"),
            }
        }
        let _ = writeln!(s, " {:.3} | {} |", r.macro_average, r.excluded.len());
    }
    let mut list = |title: &str, m: &BTreeMap<String, Selection>| {
        let _ = write!(s, "\n## {title}\n\n");
        for (k, v) in m {
            let _ = write!(s, "- {k}: {} ({:.3})", v.winner, v.macro_average);
            if !v.tied_with.is_empty() {
                let _ = write!(s, ", tied with {}", v.tied_with.join(", "));
            }
            s.push('\n');
        }
    };
    list("Best metric per model", &sel.best_metric);
    list("Best model per metric", &sel.best_model);
    s
}

/// Writes `accuracy.jsonl` (one report per model × metric), `selection.json`
/// and a rendered `accuracy.md`.
pub fn cmd_eval(args: &EvalArgs, ctx: &mut RunContext) -> Result<(), CliError> {
    let table = read_scores(&args.scores, ctx)?;
    let pairs = read_pairs(&args.pairs, ctx)?;
    if pairs.is_empty() {
        return Err(CliError::Data("no prompt pairs to evaluate".into()));
    }
    let reports = evaluate_all(&table, &pairs, |m| direction_for(m, &args.direction));
    for r in reports.iter().filter(|r| !r.excluded.is_empty()) {
        log::warn!("{}/{}: {} pairs excluded for missing scores", r.model_id, r.metric_name, r.excluded.len());
    }
    let models: BTreeSet<&str> = reports.iter().map(|r| r.model_id.as_str()).collect();
    let metrics: BTreeSet<&str> = reports.iter().map(|r| r.metric_name.as_str()).collect();
    let sel = Selections {
        best_metric: models
            .iter()
            .filter_map(|m| best_metric(&reports, m).map(|s| (m.to_string(), s)))
            .collect(),
        best_model: metrics
            .iter()
            .filter_map(|m| best_model(&reports, m).map(|s| (m.to_string(), s)))
            .collect(),
    };
    ctx.write_jsonl("accuracy.jsonl", &reports)?;
    ctx.write_json("selection.json", &sel)?;
    ctx.write_text("accuracy.md", &render_accuracy(&reports, &sel))?;
    Ok(())
}

/// Per-cell outcome: either a result or the reason there is none.
#[derive(Debug, Serialize)]
struct Cell<T> {
    model_id: String,
    metric_name: String,
    #[serde(flatten)]
    extra: BTreeMap<&'static str, serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl<T> Cell<T> {
    fn new(model: &str, metric: &str, outcome: Result<T, EvalError>, first_err: &mut Option<CliError>) -> Self {
        let (result, error) = match outcome {
            Ok(r) => (Some(r), None),
            Err(e) => {
                log::warn!("{model}/{metric}: {e}");
                let msg = e.to_string();
                first_err.get_or_insert_with(|| CliError::from(e));
                (None, Some(msg))
            }
        };
        Self { model_id: model.to_owned(), metric_name: metric.to_owned(), extra: BTreeMap::new(), result, error }
    }

    fn with(mut self, key: &'static str, v: impl Serialize) -> Self {
        self.extra.insert(key, serde_json::to_value(v).expect("plain values serialise"));
        self
    }
}

/// Scores of one cell split by binary label, in prompt-id order.
struct Labelled {
    scores: Vec<f64>,
    labels: Vec<bool>,
    /// Scored prompts with no usable label.
    unlabeled: usize,
}

fn split_by_label(scores: &HashMap<String, f64>, labels: &HashMap<String, LabelRecord>) -> Labelled {
    let mut out = Labelled { scores: Vec::new(), labels: Vec::new(), unlabeled: 0 };
    for id in sorted_ids(scores) {
        match labels.get(id).and_then(LabelRecord::is_positive) {
            Some(l) => {
                out.scores.push(scores[id]);
                out.labels.push(l);
            }
            None => out.unlabeled += 1,
        }
    }
    out
}

#[derive(Debug, Serialize)]
struct GroupRow {
    model_id: String,
    metric_name: String,
    #[serde(flatten)]
    report: GroupSummaryReport,
}

/// Welch's t-test of positive against negative labels per model × metric,
/// oriented so that `direction_correct` means the positive group looks
/// larger under the metric's direction. Also writes per-label group
/// summaries (`groups.jsonl`).
pub fn cmd_ttest(args: &TtestArgs, ctx: &mut RunContext) -> Result<(), CliError> {
    let table = read_scores(&args.scores, ctx)?;
    let labels = read_labels(&args.labels, ctx)?;
    let mut first_err = None;
    let mut rows = Vec::new();
    let mut groups = Vec::new();
    let mut md = String::from(
        "# Welch t-tests (positive vs negative labels)\n\n| model | metric | n+ | n− | mean+ | mean− | t | df | p | stars | direction ok |\n|---|---|---|---|---|---|---|---|---|---|---|\n",
    );
    for (model, metric, scores) in table.cells() {
        let direction = direction_for(metric, &args.direction);
        let l = split_by_label(scores, &labels);
        let (a, b): (Vec<(f64, bool)>, Vec<(f64, bool)>) =
            l.scores.iter().copied().zip(l.labels.iter().copied()).partition(|(_, pos)| *pos);
        let a: Vec<f64> = a.into_iter().map(|(v, _)| v).collect();
        let b: Vec<f64> = b.into_iter().map(|(v, _)| v).collect();
        let outcome = welch_t_test(&a, &b).map(|r| r.oriented(direction));
        if let Ok(r) = &outcome {
            let _ = writeln!(
                md,
                "| {model} | {metric} | {} | {} | {:.4} | {:.4} | {:.4} | {:.2} | {:.3e} | {} | {} |",
                a.len(),
                b.len(),
                r.mean_a,
                r.mean_b,
                r.t_statistic,
                r.degrees_of_freedom,
                r.p_value,
                r.star_band.as_str(),
                if r.direction_correct { "yes" } else { "no" }
            );
        }
        rows.push(
            Cell::<TTestResult>::new(model, metric, outcome, &mut first_err)
                .with("direction", dir_str(direction))
                .with("n_positive", a.len())
                .with("n_negative", b.len())
                .with("unlabeled", l.unlabeled),
        );

        let mut values = Vec::new();
        let mut keys = Vec::new();
        for id in sorted_ids(scores) {
            if let Some(lab) = labels.get(id) {
                values.push(scores[id]);
                keys.push(lab.group_key());
            }
        }
        match group_summary(&values, &keys) {
            Ok(report) => groups.push(GroupRow { model_id: model.to_owned(), metric_name: metric.to_owned(), report }),
            Err(e) => log::warn!("{model}/{metric}: group summary: {e}"),
        }
    }
    ctx.write_jsonl("ttest.jsonl", &rows)?;
    ctx.write_jsonl("groups.jsonl", &groups)?;
    ctx.write_text("ttest.md", &md)?;
    first_err.map_or(Ok(()), Err)
}

/// Pearson's r between each cell's scores and reasoning-token counts.
pub fn cmd_corr(args: &CorrArgs, ctx: &mut RunContext) -> Result<(), CliError> {
    let table = read_scores(&args.scores, ctx)?;
    ctx.input(&args.token_counts);
    let mut counts = HashMap::new();
    for r in gss_core::io::read_jsonl::<gss_core::eval::TokenCountRecord>(&args.token_counts)? {
        if counts.insert(r.prompt_id.clone(), r.reasoning_token_count).is_some() {
            return Err(CliError::Data(format!("duplicate token count for `{}`", r.prompt_id)));
        }
    }
    let mut first_err = None;
    let mut rows = Vec::new();
    let mut md = String::from("# Score vs reasoning-token correlation\n\n| model | metric | n | r | p |\n|---|---|---|---|---|\n");
    for (model, metric, scores) in table.cells() {
        let (x, y): (Vec<f64>, Vec<f64>) = sorted_ids(scores)
            .into_iter()
            .filter_map(|id| counts.get(id).map(|&c| (scores[id], c as f64)))
            .unzip();
        let outcome = pearson_r(&x, &y);
        if let Ok(r) = &outcome {
            let p = r.p_value.map_or_else(|| "–".to_owned(), |p| format!("{p:.3e}"));
            let _ = writeln!(md, "| {model} | {metric} | {} | {:.4} | {p} |", r.n, r.r);
        }
        rows.push(Cell::<CorrelationResult>::new(model, metric, outcome, &mut first_err));
    }
    ctx.write_jsonl("corr.jsonl", &rows)?;
    ctx.write_text("corr.md", &md)?;
    first_err.map_or(Ok(()), Err)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Threshold classifiers predicting the positive label when the score
/// indicates a larger generation space than the threshold (above it for
/// higher-is-larger metrics, below it otherwise).
pub fn cmd_classify(args: &ClassifyArgs, ctx: &mut RunContext) -> Result<(), CliError> {
    let table = read_scores(&args.scores, ctx)?;
    let labels = read_labels(&args.labels, ctx)?;
    let mut first_err = None;
    let mut rows = Vec::new();
    let mut md = String::from(
        "# Threshold classifiers\n\n| model | metric | threshold | n | accuracy | macro F1 | AUC |\n|---|---|---|---|---|---|---|\n",
    );
    for (model, metric, scores) in table.cells() {
        let direction = direction_for(metric, &args.direction);
        let l = split_by_label(scores, &labels);
        if l.scores.is_empty() {
            rows.push(Cell::<ClassifierReport>::new(
                model,
                metric,
                Err(EvalError::InvalidInput("no labelled prompts".into())),
                &mut first_err,
            ));
            continue;
        }
        let threshold = args.threshold.unwrap_or_else(|| median(&l.scores));
        let sign = if direction == Direction::LowerMeansLarger { -1.0 } else { 1.0 };
        let oriented: Vec<f64> = l.scores.iter().map(|v| sign * v).collect();
        let outcome = binary_threshold_eval(&oriented, &l.labels, sign * threshold).map(|mut r| {
            r.threshold = threshold;
            r
        });
        if let Ok(r) = &outcome {
            let _ = writeln!(
                md,
                "| {model} | {metric} | {threshold:.4} | {} | {:.3} | {:.3} | {:.3} |",
                r.n, r.accuracy, r.macro_f1, r.auc
            );
        }
        rows.push(
            Cell::<ClassifierReport>::new(model, metric, outcome, &mut first_err)
                .with("direction", dir_str(direction))
                .with("threshold_source", if args.threshold.is_some() { "fixed" } else { "median" })
                .with("unlabeled", l.unlabeled),
        );
    }
    ctx.write_jsonl("classify.jsonl", &rows)?;
    ctx.write_text("classify.md", &md)?;
    first_err.map_or(Ok(()), Err)
}
