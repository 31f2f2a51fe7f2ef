use super::{MetricError, MetricName, SampleSet};

fn check_logprobs(set: &SampleSet) -> Result<(), MetricError> {
    if set.samples.is_empty() {
        return Err(MetricError::InvalidInput(format!("prompt {}: no samples", set.prompt_id)));
    }
    for (i, s) in set.samples.iter().enumerate() {
        if s.token_logprobs.is_empty() {
            return Err(MetricError::InvalidInput(format!(
                "prompt {}: sample {i} has no token logprobs",
                set.prompt_id
            )));
        }
    }
    Ok(())
}

/// Monte-Carlo length-normalised predictive entropy:
/// `(1/K) Σ_n −(1/T_n) Σ_t log p_{n,t}`.
pub fn normalized_entropy(set: &SampleSet) -> Result<f64, MetricError> {
    check_logprobs(set)?;
    let total: f64 = set.samples.iter().map(|s| -s.mean_logprob()).sum();
    Ok(total / set.k() as f64)
}

/// `exp` of the mean per-token negative log-likelihood.
pub fn perplexity(set: &SampleSet) -> Result<f64, MetricError> {
    Ok(normalized_entropy(set)?.exp())
}

/// Mean over samples of the mean per-token energy `−logsumexp(logits)`.
pub fn energy(set: &SampleSet) -> Result<f64, MetricError> {
    if set.samples.is_empty() {
        return Err(MetricError::InvalidInput(format!("prompt {}: no samples", set.prompt_id)));
    }
    let mut total = 0.0;
    for (i, s) in set.samples.iter().enumerate() {
        if s.token_logsumexp.is_empty() {
            return Err(MetricError::DataUnavailable {
                metric: MetricName::Energy,
                detail: format!("sample {i} has no per-token logit normalisers"),
            });
        }
        let mean = s.token_logsumexp.iter().sum::<f64>() / s.token_logsumexp.len() as f64;
        total -= mean;
    }
    Ok(total / set.k() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ResponseSample;

    fn set_of(logprobs: &[&[f64]]) -> SampleSet {
        SampleSet::new(
            "p",
            "m",
            logprobs.iter().map(|l| ResponseSample::from_logprobs("t", l.to_vec())).collect(),
        )
    }

    fn logsumexp(logits: &[f64]) -> f64 {
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
    }

    #[test]
    fn uniform_over_four_symbols() {
        let l = -(4f64.ln());
        let set = set_of(&[&[l, l, l], &[l]]);
        assert!((perplexity(&set).unwrap() - 4.0).abs() < 1e-12);
        assert!((normalized_entropy(&set).unwrap() - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn deterministic_sequences() {
        let set = set_of(&[&[0.0, 0.0], &[0.0]]);
        assert_eq!(perplexity(&set).unwrap(), 1.0);
        assert_eq!(normalized_entropy(&set).unwrap(), 0.0);
    }

    #[test]
    fn mixed_fixture_matches_formula() {
        let set = set_of(&[&[-0.5, -1.5], &[-2.0, -0.1, -0.3], &[-0.7]]);
        let expected_h = (1.0 + 0.8 + 0.7) / 3.0;
        assert!((normalized_entropy(&set).unwrap() - expected_h).abs() < 1e-12);
        assert!((perplexity(&set).unwrap() - expected_h.exp()).abs() < 1e-12);
    }

    #[test]
    fn empty_set_is_invalid() {
        assert!(perplexity(&set_of(&[])).is_err());
        assert!(normalized_entropy(&set_of(&[&[]])).is_err());
    }

    #[test]
    fn energy_single_token() {
        let mut s = ResponseSample::from_logprobs("a", vec![-0.0001]);
        s.token_logsumexp = vec![logsumexp(&[10.0, 0.0, 0.0])];
        let set = SampleSet::new("p", "m", vec![s]);
        let e = energy(&set).unwrap();
        assert!((e - (-(10f64.exp() + 2.0).ln())).abs() < 1e-12);
        assert!((e - (-10.00009)).abs() < 1e-5);
    }

    #[test]
    fn energy_of_flat_logits_is_minus_log_vocab() {
        let mut s = ResponseSample::from_logprobs("a", vec![-(50f64.ln())]);
        s.token_logsumexp = vec![logsumexp(&[0.0; 50])];
        let e = energy(&SampleSet::new("p", "m", vec![s])).unwrap();
        assert!((e + 50f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn energy_shift_identity() {
        let logits = [[1.0, 2.0, -0.5], [0.3, 0.3, 4.0]];
        let make = |c: f64| {
            let mut s = ResponseSample::from_logprobs("a", vec![-1.0, -1.0]);
            s.token_logsumexp = logits
                .iter()
                .map(|l| logsumexp(&l.iter().map(|v| v + c).collect::<Vec<_>>()))
                .collect();
            SampleSet::new("p", "m", vec![s])
        };
        let base = energy(&make(0.0)).unwrap();
        let shifted = energy(&make(2.5)).unwrap();
        assert!((shifted - (base - 2.5)).abs() < 1e-12);
    }

    #[test]
    fn energy_without_logsumexp_is_unavailable() {
        let set = set_of(&[&[-1.0]]);
        assert!(matches!(
            energy(&set),
            Err(MetricError::DataUnavailable { metric: MetricName::Energy, .. })
        ));
    }
}
