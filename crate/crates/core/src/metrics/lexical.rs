use super::{MetricError, SampleSet};

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Rouge-L F1 between two texts over [`tokenize`]d tokens. Two empty texts
/// score 1; one empty text scores 0.
pub fn rouge_l_f1(a: &str, b: &str) -> f64 {
    let (ta, tb) = (tokenize(a), tokenize(b));
    match (ta.is_empty(), tb.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let lcs = lcs_len(&ta, &tb) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let precision = lcs / tb.len() as f64;
    let recall = lcs / ta.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Mean pairwise Rouge-L F1 over all `C(K,2)` sample pairs.
pub fn lexical_similarity(set: &SampleSet) -> Result<f64, MetricError> {
    let k = set.k();
    if k < 2 {
        return Err(MetricError::InvalidInput(format!(
            "lexical similarity needs K ≥ 2, got {k}"
        )));
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..k {
        for j in i + 1..k {
            total += rouge_l_f1(&set.samples[i].text, &set.samples[j].text);
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ResponseSample;

    fn set_of(texts: &[&str]) -> SampleSet {
        SampleSet::new(
            "p",
            "m",
            texts.iter().map(|t| ResponseSample::from_logprobs(*t, vec![-1.0])).collect(),
        )
    }

    #[test]
    fn identical_texts() {
        assert_eq!(lexical_similarity(&set_of(&["the cat sat"; 4])).unwrap(), 1.0);
    }

    #[test]
    fn disjoint_texts() {
        assert_eq!(lexical_similarity(&set_of(&["red fox", "blue whale"])).unwrap(), 0.0);
    }

    #[test]
    fn partial_overlap() {
        // LCS 2, P = 1, R = 2/3
        assert!((rouge_l_f1("a b c", "a c") - 0.8).abs() < 1e-12);
        assert!((rouge_l_f1("a c", "a b c") - 0.8).abs() < 1e-12);
    }

    #[test]
    fn tokenizer_ignores_case_and_punctuation() {
        assert_eq!(tokenize("Hello, World!  hello"), vec!["hello", "world", "hello"]);
        assert_eq!(rouge_l_f1("Hello, world.", "hello world"), 1.0);
    }

    #[test]
    fn single_sample_is_rejected() {
        assert!(lexical_similarity(&set_of(&["x"])).is_err());
    }
}
