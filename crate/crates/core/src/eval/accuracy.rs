use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::ScoreRecord;
use crate::bench::{Dataset, PromptPair};
use crate::metrics::Direction;

/// Scores indexed by `(model, metric)` then prompt id.
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    cells: BTreeMap<(String, String), HashMap<String, f64>>,
}

impl ScoreTable {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a ScoreRecord>) -> Self {
        let mut t = Self::default();
        for r in records {
            t.insert(&r.model_id, &r.metric_name, &r.prompt_id, r.value);
        }
        t
    }

    pub fn insert(&mut self, model: &str, metric: &str, prompt: &str, value: f64) {
        self.cells
            .entry((model.to_owned(), metric.to_owned()))
            .or_default()
            .insert(prompt.to_owned(), value);
    }

    pub fn cells(&self) -> impl Iterator<Item = (&str, &str, &HashMap<String, f64>)> {
        self.cells.iter().map(|((m, f), s)| (m.as_str(), f.as_str(), s))
    }

    pub fn get(&self, model: &str, metric: &str) -> Option<&HashMap<String, f64>> {
        self.cells.get(&(model.to_owned(), metric.to_owned()))
    }

    /// Copy with every value mapped through `f`.
    pub fn map_values(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let cells = self
            .cells
            .iter()
            .map(|(k, s)| (k.clone(), s.iter().map(|(p, v)| (p.clone(), f(*v))).collect()))
            .collect();
        Self { cells }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetAccuracy {
    pub dataset: Dataset,
    pub n_pairs: usize,
    pub correct: usize,
    /// Pairs with exactly equal scores; they count as incorrect.
    pub ties: usize,
    pub accuracy: f64,
    pub ci_halfwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedPair {
    pub larger_id: String,
    pub smaller_id: String,
    pub dataset: Dataset,
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub model_id: String,
    pub metric_name: String,
    pub direction: Direction,
    pub datasets: Vec<DatasetAccuracy>,
    /// Equal-weight mean over the datasets that have at least one pair.
    pub macro_average: f64,
    pub excluded: Vec<ExcludedPair>,
}

impl AccuracyReport {
    pub fn dataset(&self, dataset: Dataset) -> Option<&DatasetAccuracy> {
        self.datasets.iter().find(|d| d.dataset == dataset)
    }
}

fn ci_halfwidth(acc: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    1.96 * (acc * (1.0 - acc) / n as f64).sqrt()
}

/// Fraction of pairs on which the metric ranks the larger-GSS prompt higher
/// (under `direction`), per dataset and macro-averaged.
pub fn pairwise_accuracy(
    model_id: &str,
    metric_name: &str,
    scores: &HashMap<String, f64>,
    pairs: &[PromptPair],
    direction: Direction,
) -> AccuracyReport {
    let mut tallies: BTreeMap<Dataset, (usize, usize, usize)> = BTreeMap::new();
    let mut excluded = Vec::new();
    for p in pairs {
        let larger = scores.get(&p.larger_id);
        let smaller = scores.get(&p.smaller_id);
        let (Some(&a), Some(&b)) = (larger, smaller) else {
            let missing = [(&p.larger_id, larger), (&p.smaller_id, smaller)]
                .into_iter()
                .filter(|(_, v)| v.is_none())
                .map(|(id, _)| id.clone())
                .collect();
            excluded.push(ExcludedPair {
                larger_id: p.larger_id.clone(),
                smaller_id: p.smaller_id.clone(),
                dataset: p.dataset,
                missing,
            });
            continue;
        };
        let t = tallies.entry(p.dataset).or_default();
        t.0 += 1;
        match direction.prefers(a, b) {
            Some(true) => t.1 += 1,
            Some(false) => {}
            None => t.2 += 1,
        }
    }
    let datasets: Vec<DatasetAccuracy> = tallies
        .into_iter()
        .map(|(dataset, (n, correct, ties))| {
            let accuracy = correct as f64 / n as f64;
            DatasetAccuracy { dataset, n_pairs: n, correct, ties, accuracy, ci_halfwidth: ci_halfwidth(accuracy, n) }
        })
        .collect();
    let macro_average = if datasets.is_empty() {
        0.0
    } else {
        datasets.iter().map(|d| d.accuracy).sum::<f64>() / datasets.len() as f64
    };
    AccuracyReport {
        model_id: model_id.to_owned(),
        metric_name: metric_name.to_owned(),
        direction,
        datasets,
        macro_average,
        excluded,
    }
}

/// Accuracy report for every `(model, metric)` cell of `table`.
pub fn evaluate_all(
    table: &ScoreTable,
    pairs: &[PromptPair],
    direction_of: impl Fn(&str) -> Direction,
) -> Vec<AccuracyReport> {
    table
        .cells()
        .map(|(model, metric, scores)| pairwise_accuracy(model, metric, scores, pairs, direction_of(metric)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub winner: String,
    pub macro_average: f64,
    /// Other candidates with the same macro accuracy (lexicographic
    /// tie-break picked `winner`).
    pub tied_with: Vec<String>,
}

fn select<'a>(candidates: impl Iterator<Item = (&'a str, f64)>) -> Option<Selection> {
    let mut all: Vec<(&str, f64)> = candidates.collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let &(winner, best) = all.first()?;
    let tied_with = all[1..]
        .iter()
        .filter(|(_, v)| (best - v).abs() <= 1e-12)
        .map(|(n, _)| (*n).to_owned())
        .collect();
    Some(Selection { winner: winner.to_owned(), macro_average: best, tied_with })
}

/// The metric with the highest macro accuracy for `model_id`.
pub fn best_metric(reports: &[AccuracyReport], model_id: &str) -> Option<Selection> {
    select(
        reports
            .iter()
            .filter(|r| r.model_id == model_id)
            .map(|r| (r.metric_name.as_str(), r.macro_average)),
    )
}

/// The model with the highest macro accuracy under `metric_name`.
pub fn best_model(reports: &[AccuracyReport], metric_name: &str) -> Option<Selection> {
    select(
        reports
            .iter()
            .filter(|r| r.metric_name == metric_name)
            .map(|r| (r.model_id.as_str(), r.macro_average)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::Rationale;

    fn pair(l: &str, s: &str, d: Dataset) -> PromptPair {
        PromptPair { larger_id: l.into(), smaller_id: s.into(), dataset: d, rationale: Rationale::External }
    }

    fn scores(v: &[(&str, f64)]) -> HashMap<String, f64> {
        v.iter().map(|(k, x)| ((*k).to_owned(), *x)).collect()
    }

    #[test]
    fn oracle_and_anti_oracle() {
        let pairs = vec![pair("a", "b", Dataset::Complement), pair("c", "d", Dataset::Union)];
        let s = scores(&[("a", 2.0), ("b", 1.0), ("c", 5.0), ("d", -1.0)]);
        let r = pairwise_accuracy("m", "f", &s, &pairs, Direction::HigherMeansLarger);
        assert_eq!(r.macro_average, 1.0);
        let r = pairwise_accuracy("m", "f", &s, &pairs, Direction::LowerMeansLarger);
        assert_eq!(r.macro_average, 0.0);
    }

    #[test]
    fn two_of_three_with_interval() {
        let pairs = vec![
            pair("a", "b", Dataset::Subset),
            pair("a", "c", Dataset::Subset),
            pair("b", "c", Dataset::Subset),
        ];
        let s = scores(&[("a", 3.0), ("b", 1.0), ("c", 2.0)]);
        let r = pairwise_accuracy("m", "f", &s, &pairs, Direction::HigherMeansLarger);
        let d = r.dataset(Dataset::Subset).unwrap();
        assert!((d.accuracy - 2.0 / 3.0).abs() < 1e-12);
        let expected_ci = 1.96 * ((2.0 / 3.0) * (1.0 / 3.0) / 3.0f64).sqrt();
        assert!((d.ci_halfwidth - expected_ci).abs() < 1e-12);
        assert!((d.ci_halfwidth - 0.533).abs() < 1e-3);
    }

    #[test]
    fn ties_count_as_wrong_and_are_tallied() {
        let pairs = vec![pair("a", "b", Dataset::Complement), pair("c", "d", Dataset::Complement)];
        let s = scores(&[("a", 1.0), ("b", 1.0), ("c", 2.0), ("d", 1.0)]);
        let r = pairwise_accuracy("m", "f", &s, &pairs, Direction::HigherMeansLarger);
        let d = &r.datasets[0];
        assert_eq!((d.n_pairs, d.correct, d.ties), (2, 1, 1));
    }

    #[test]
    fn missing_scores_are_reported() {
        let pairs = vec![pair("a", "b", Dataset::Complement), pair("a", "zz", Dataset::Complement)];
        let s = scores(&[("a", 1.0), ("b", 0.0)]);
        let r = pairwise_accuracy("m", "f", &s, &pairs, Direction::HigherMeansLarger);
        assert_eq!(r.datasets[0].n_pairs, 1);
        assert_eq!(r.excluded.len(), 1);
        assert_eq!(r.excluded[0].missing, vec!["zz".to_owned()]);
    }

    #[test]
    fn macro_weights_datasets_equally() {
        let pairs = vec![
            pair("a", "b", Dataset::Complement),
            pair("c", "d", Dataset::Union),
            pair("e", "f", Dataset::Union),
            pair("g", "h", Dataset::Union),
        ];
        let s = scores(&[("a", 1.0), ("b", 0.0), ("c", 0.0), ("d", 1.0), ("e", 0.0), ("f", 1.0), ("g", 0.0), ("h", 1.0)]);
        let r = pairwise_accuracy("m", "f", &s, &pairs, Direction::HigherMeansLarger);
        assert_eq!(r.macro_average, 0.5);
    }

    fn report(model: &str, metric: &str, acc: f64) -> AccuracyReport {
        AccuracyReport {
            model_id: model.into(),
            metric_name: metric.into(),
            direction: Direction::HigherMeansLarger,
            datasets: vec![],
            macro_average: acc,
            excluded: vec![],
        }
    }

    #[test]
    fn selection_and_ties() {
        let reports = vec![
            report("llama", "perplexity", 0.6),
            report("llama", "eigenscore_average", 0.72),
            report("qwen", "perplexity", 0.5),
            report("qwen", "eigenscore_average", 0.65),
            report("qwen", "eigenscore_output", 0.65),
        ];
        assert_eq!(best_metric(&reports, "llama").unwrap().winner, "eigenscore_average");
        let q = best_metric(&reports, "qwen").unwrap();
        assert_eq!(q.winner, "eigenscore_average");
        assert_eq!(q.tied_with, vec!["eigenscore_output".to_owned()]);
        assert_eq!(best_model(&reports, "perplexity").unwrap().winner, "llama");
        assert!(best_model(&reports, "energy").is_none());
        let single = vec![report("m", "only", 0.1)];
        assert_eq!(best_metric(&single, "m").unwrap().winner, "only");
    }
}
