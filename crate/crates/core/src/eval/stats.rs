use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::EvalError;
use crate::metrics::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StarBand {
    #[serde(rename = "ns")]
    NotSignificant,
    #[serde(rename = "*")]
    One,
    #[serde(rename = "**")]
    Two,
    #[serde(rename = "***")]
    Three,
}

impl StarBand {
    pub fn from_p(p: f64) -> Self {
        if p < 0.001 {
            Self::Three
        } else if p < 0.01 {
            Self::Two
        } else if p < 0.05 {
            Self::One
        } else {
            Self::NotSignificant
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::NotSignificant => "ns",
            Self::One => "*",
            Self::Two => "**",
            Self::Three => "***",
        }
    }
}

impl fmt::Display for StarBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub star_band: StarBand,
    pub mean_a: f64,
    pub mean_b: f64,
    /// Whether group `a` scored in the expected direction relative to `b`.
    /// [`welch_t_test`] assumes `a` should be higher; see [`TTestResult::oriented`].
    pub direction_correct: bool,
}

impl TTestResult {
    /// Re-evaluates `direction_correct` for a metric with the given direction,
    /// where group `a` is the one expected to have the larger generation space.
    pub fn oriented(mut self, direction: Direction) -> Self {
        self.direction_correct = direction.prefers(self.mean_a, self.mean_b) == Some(true);
        self
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn check_finite(name: &str, xs: &[f64]) -> Result<(), EvalError> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(EvalError::InvalidInput(format!("{name} contains non-finite values")));
    }
    Ok(())
}

/// Two-sided p-value of `t` under Student's t with `df` degrees of freedom.
fn two_sided_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

/// Two-sample t-test without the equal-variance assumption.
pub fn welch_t_test(group_a: &[f64], group_b: &[f64]) -> Result<TTestResult, EvalError> {
    if group_a.len() < 2 || group_b.len() < 2 {
        return Err(EvalError::InvalidInput(format!(
            "each group needs at least 2 values (got {} and {})",
            group_a.len(),
            group_b.len()
        )));
    }
    check_finite("group_a", group_a)?;
    check_finite("group_b", group_b)?;
    let (ma, va) = mean_var(group_a);
    let (mb, vb) = mean_var(group_b);
    let (na, nb) = (group_a.len() as f64, group_b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    if sa + sb == 0.0 {
        return Err(EvalError::Degenerate("both groups have zero variance".into()));
    }
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p = two_sided_p(t, df);
    Ok(TTestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: p,
        star_band: StarBand::from_p(p),
        mean_a: ma,
        mean_b: mb,
        direction_correct: ma > mb,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub n: usize,
    /// Two-sided p-value for r = 0; absent when n < 3 or |r| = 1.
    pub p_value: Option<f64>,
}

/// Product-moment correlation coefficient.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<CorrelationResult, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::InvalidInput(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(EvalError::InvalidInput("need at least 2 points".into()));
    }
    check_finite("x", x)?;
    check_finite("y", y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::Degenerate("zero variance in one argument".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let p_value = (x.len() >= 3 && r.abs() < 1.0).then(|| {
        let df = n - 2.0;
        two_sided_p(r * (df / (1.0 - r * r)).sqrt(), df)
    });
    Ok(CorrelationResult { r, n: x.len(), p_value })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub threshold: f64,
    pub n: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub auc: f64,
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Midranks (1-based) of `xs`; ties share the mean of their positions.
pub(crate) fn midranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Evaluates the rule "positive iff score > threshold"; AUC is the
/// threshold-free rank statistic.
pub fn binary_threshold_eval(scores: &[f64], labels: &[bool], threshold: f64) -> Result<ClassifierReport, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::InvalidInput(format!(
            "length mismatch: {} scores, {} labels",
            scores.len(),
            labels.len()
        )));
    }
    check_finite("scores", scores)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::Degenerate("labels contain a single class; AUC is undefined".into()));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s > threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let accuracy = (tp + tn) as f64 / scores.len() as f64;
    let macro_f1 = (f1(tp, fp, fn_) + f1(tn, fn_, fp)) / 2.0;
    let ranks = midranks(scores);
    let pos_rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    let (p, q) = (n_pos as f64, n_neg as f64);
    let auc = (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
    Ok(ClassifierReport { threshold, n: scores.len(), accuracy, macro_f1, auc })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub n: usize,
    pub mean: f64,
    /// 1.96 × standard error; zero for single-member groups.
    pub ci_halfwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupSummaryReport {
    pub groups: Vec<GroupSummary>,
    pub notes: Vec<String>,
}

/// Mean ± 1.96·SE per group. Non-finite values are dropped; groups left
/// empty are excluded and noted.
pub fn group_summary(values: &[f64], groups: &[String]) -> Result<GroupSummaryReport, EvalError> {
    if values.len() != groups.len() {
        return Err(EvalError::InvalidInput(format!(
            "length mismatch: {} values, {} group labels",
            values.len(),
            groups.len()
        )));
    }
    let mut by_group: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (v, g) in values.iter().zip(groups) {
        let bucket = by_group.entry(g.as_str()).or_default();
        if v.is_finite() {
            bucket.push(*v);
        }
    }
    let mut report = GroupSummaryReport::default();
    for (g, xs) in by_group {
        if xs.is_empty() {
            report.notes.push(format!("group {g:?} has no finite values; excluded"));
            continue;
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let ci_halfwidth = if n < 2 {
            report.notes.push(format!("group {g:?} has a single value; interval set to 0"));
            0.0
        } else {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        };
        report.groups.push(GroupSummary { group: g.to_owned(), n, mean, ci_halfwidth });
    }
    Ok(report)
}
