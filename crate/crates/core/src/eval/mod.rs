//! Statistics over metric scores: pairwise accuracy with bidirectional
//! selection, Welch's t-test, Pearson correlation, threshold classifiers,
//! group summaries and DivPO-style preference-pair selection.

mod accuracy;
mod divpo;
mod stats;

pub use accuracy::{
    best_metric, best_model, evaluate_all, pairwise_accuracy, AccuracyReport, DatasetAccuracy,
    ExcludedPair, ScoreTable, Selection,
};
pub use divpo::{
    divpo_select, loo_result, minmax_normalize, Candidate, DiversityMetric, DivpoSelection,
    LooEntry, LooResult, PairBuildConfig, PoolRule, SkipReason,
};
pub use stats::{
    binary_threshold_eval, group_summary, pearson_r, welch_t_test, ClassifierReport,
    CorrelationResult, GroupSummary, GroupSummaryReport, StarBand, TTestResult,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

/// One line of a score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub prompt_id: String,
    pub model_id: String,
    pub metric_name: String,
    pub value: f64,
}

/// One line of a label file. Labels may be booleans, 0/1 or strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub prompt_id: String,
    pub label: serde_json::Value,
}

impl LabelRecord {
    /// Interprets the label as a binary class: `true`, non-zero numbers and
    /// the strings "1", "true", "yes", "ambiguous", "positive" are positive.
    pub fn is_positive(&self) -> Option<bool> {
        match &self.label {
            serde_json::Value::Bool(b) => Some(*b),
            serde_json::Value::Number(n) => n.as_f64().map(|v| v != 0.0),
            serde_json::Value::String(s) => match s.to_ascii_lowercase().as_str() {
                "1" | "true" | "yes" | "ambiguous" | "positive" => Some(true),
                "0" | "false" | "no" | "non-ambiguous" | "unambiguous" | "negative" => Some(false),
                _ => None,
            },
            _ => None,
        }
    }

    /// Group key for summaries.
    pub fn group_key(&self) -> String {
        match &self.label {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }
}

/// One line of a reasoning-token-count file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenCountRecord {
    pub prompt_id: String,
    pub reasoning_token_count: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn label_interpretation() {
        let l = |v| LabelRecord { prompt_id: "p".into(), label: v };
        assert_eq!(l(json!(true)).is_positive(), Some(true));
        assert_eq!(l(json!(0)).is_positive(), Some(false));
        assert_eq!(l(json!("ambiguous")).is_positive(), Some(true));
        assert_eq!(l(json!("maybe")).is_positive(), None);
        assert_eq!(l(json!("x")).group_key(), "x");
        assert_eq!(l(json!(1)).group_key(), "1");
    }
}
