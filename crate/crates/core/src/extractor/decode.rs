//! Span confidence and multi-grained span decoding.

use std::collections::HashSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenize::{detokenize, Token};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanPrediction {
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub confidence: f64,
}

/// `p_start[i] + p_end[j]` for a span from token `i` to token `j` inclusive.
pub fn confidence(i: usize, j: usize, p_start: &[f64], p_end: &[f64]) -> Result<f64> {
    if i > j {
        return Err(Error::InvalidArgument(format!("span start {i} after end {j}")));
    }
    if i >= p_start.len() || j >= p_end.len() {
        return Err(Error::InvalidArgument(format!("span ({i}, {j}) outside a sequence of {}", p_start.len())));
    }
    Ok(p_start[i] + p_end[j])
}

/// Every span inside `abstract_span` with length at most `max_span_len` and confidence
/// strictly above `threshold`, ranked by confidence (descending) then by `(start, end)`.
/// Nested and overlapping spans are all kept; spans with the same text keep only their
/// best-ranked occurrence.
pub fn decode_spans(
    tokens: &[Token],
    p_start: &[f64],
    p_end: &[f64],
    abstract_span: Range<usize>,
    threshold: f64,
    max_span_len: usize,
) -> Vec<SpanPrediction> {
    let end_bound = abstract_span.end.min(tokens.len()).min(p_start.len()).min(p_end.len());
    let mut candidates = Vec::new();
    for i in abstract_span.start..end_bound {
        let last = (i + max_span_len).min(end_bound);
        for j in i..last {
            let cs = p_start[i] + p_end[j];
            if cs > threshold {
                candidates.push((i, j, cs));
            }
        }
    }
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut seen = HashSet::new();
    candidates
        .into_iter()
        .filter_map(|(start, end, confidence)| {
            let text = detokenize(&tokens[start..=end]);
            seen.insert(text.clone()).then_some(SpanPrediction {
                text,
                start,
                end,
                confidence,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize::tokenize;
    use proptest::prelude::*;

    #[test]
    fn confidence_is_a_sum() {
        let ps = [0.0, 0.0, 0.3, 0.0, 0.0, 0.0];
        let pe = [0.0, 0.0, 0.0, 0.0, 0.0, 0.4];
        assert!((confidence(2, 5, &ps, &pe).unwrap() - 0.7).abs() < 1e-15);
        assert!(confidence(5, 2, &ps, &pe).is_err());
        let tiny = [f64::MIN_POSITIVE; 2];
        let c = confidence(0, 1, &tiny, &tiny).unwrap();
        assert!(c > 0.0 && c < 1e-300);
    }

    #[test]
    fn nested_spans_are_all_returned() {
        // [CLS] person [SEP] she was a famous american writer . [SEP]
        let mut tokens = vec![Token::new("[CLS]", false), Token::new("person", false), Token::new("[SEP]", false)];
        tokens.extend(tokenize("She was a famous American writer ."));
        tokens.push(Token::new("[SEP]", false));
        let n = tokens.len();
        let mut ps = vec![0.01; n];
        let mut pe = vec![0.01; n];
        ps[6] = 0.30; // famous
        ps[7] = 0.25; // American
        ps[8] = 0.20; // writer
        pe[8] = 0.70;
        let spans = decode_spans(&tokens, &ps, &pe, 3..n - 1, 0.30, 30);
        let texts: Vec<&str> = spans.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(&texts[..3], ["famous American writer", "American writer", "writer"]);
        assert!(decode_spans(&tokens, &ps, &pe, 3..n - 1, 2.0, 30).is_empty());
    }

    #[test]
    fn respects_abstract_span_and_length() {
        let tokens = tokenize("a b c d e");
        let p = [0.2; 5];
        let spans = decode_spans(&tokens, &p, &p, 1..4, 0.0, 2);
        for s in &spans {
            assert!(s.start >= 1 && s.end < 4 && s.end - s.start < 2);
        }
        assert_eq!(spans.len(), 5);
    }

    #[test]
    fn duplicate_text_keeps_best() {
        let tokens = tokenize("x y x");
        let ps = [0.1, 0.0, 0.5];
        let pe = [0.1, 0.0, 0.5];
        let spans = decode_spans(&tokens, &ps, &pe, 0..3, 0.15, 1);
        assert_eq!(spans.len(), 1);
        assert_eq!((spans[0].start, spans[0].end), (2, 2));
    }

    proptest! {
        #[test]
        fn lowering_threshold_never_removes(
            probs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..16),
            hi in 0.0f64..2.0,
            drop in 0.0f64..1.0,
        ) {
            let words = ["a", "b", "a", "c"];
            let text: Vec<&str> = (0..probs.len()).map(|i| words[i % 4]).collect();
            let tokens = tokenize(&text.join(" "));
            let ps: Vec<f64> = probs.iter().map(|p| p.0).collect();
            let pe: Vec<f64> = probs.iter().map(|p| p.1).collect();
            let n = tokens.len();
            let high: HashSet<String> = decode_spans(&tokens, &ps, &pe, 0..n, hi, 4).into_iter().map(|s| s.text).collect();
            let low: HashSet<String> = decode_spans(&tokens, &ps, &pe, 0..n, hi - drop, 4).into_iter().map(|s| s.text).collect();
            prop_assert!(high.is_subset(&low));
        }
    }
}
