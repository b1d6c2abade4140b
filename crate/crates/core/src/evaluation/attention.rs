//! Sequence-start attention of the last encoder layer, averaged over heads.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extractor::{PointerModel, PromptedInput};

/// Models that can report last-layer attention probabilities, one `(len × len)` matrix
/// per head.
pub trait AttentionSource {
    fn last_layer_attention(&self, input: &PromptedInput) -> Option<Vec<Array2<f64>>>;
}

impl AttentionSource for PointerModel {
    fn last_layer_attention(&self, input: &PromptedInput) -> Option<Vec<Array2<f64>>> {
        let cache = self.encoder_cache(input);
        cache.last_layer_attention().map(|heads| heads.to_vec())
    }
}

/// Mean of row 0 over all heads, renormalized to sum to one.
pub fn cls_row_average(heads: &[Array2<f64>]) -> Result<Vec<f64>> {
    let first = heads.first().ok_or(Error::AttentionUnavailable)?;
    let n = first.ncols();
    let mut w = vec![0.0; n];
    for h in heads {
        if h.ncols() != n || h.nrows() == 0 {
            return Err(Error::InvalidArgument("attention heads differ in shape".into()));
        }
        for (j, wj) in w.iter_mut().enumerate() {
            *wj += h[(0, j)];
        }
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("attention row has no mass".into()));
    }
    Ok(w.into_iter().map(|v| v / total).collect())
}

pub fn cls_attention_distribution<M: AttentionSource>(model: &M, input: &PromptedInput) -> Result<Vec<f64>> {
    let heads = model.last_layer_attention(input).ok_or(Error::AttentionUnavailable)?;
    cls_row_average(&heads)
}

/// Total weight on abstract tokens equal (case-insensitively) to `token`.
pub fn abstract_token_mass(input: &PromptedInput, weights: &[f64], token: &str) -> f64 {
    input
        .abstract_span
        .clone()
        .filter(|&j| input.tokens[j].text.eq_ignore_ascii_case(token))
        .map(|j| weights[j])
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenWeight {
    pub token: String,
    pub weight: f64,
}

pub fn attention_records(input: &PromptedInput, weights: &[f64]) -> Vec<TokenWeight> {
    input
        .tokens
        .iter()
        .zip(weights)
        .map(|(t, w)| TokenWeight {
            token: t.text.clone(),
            weight: *w,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_input, EntityRecord, RawRecord};
    use crate::extractor::{assemble_prompted_input, ExtractorConfig};
    use crate::tokenize::Vocab;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Blind;

    impl AttentionSource for Blind {
        fn last_layer_attention(&self, _: &PromptedInput) -> Option<Vec<Array2<f64>>> {
            None
        }
    }

    fn input() -> PromptedInput {
        let r = EntityRecord::from_raw(RawRecord {
            entity: "Mara Holm".into(),
            abstract_text: "Mara Holm is linked to the writer and the novel of 1901 .".into(),
            concepts: vec!["writer".into()],
            topic: None,
        })
        .unwrap();
        assemble_prompted_input("Person", &build_input(&r).unwrap(), 64).unwrap()
    }

    fn tiny(heads: usize, layers: usize) -> PointerModel {
        let inp = input();
        let vocab = Vocab::build([inp.tokens.as_slice()], 1);
        let cfg = ExtractorConfig {
            num_heads: heads,
            num_layers: layers,
            hidden_dim: 8,
            embedding_dim: 8,
            ffn_dim: 16,
            max_len: 64,
            ..Default::default()
        };
        PointerModel::new(cfg, vocab, &mut ChaCha8Rng::seed_from_u64(3)).unwrap()
    }

    #[test]
    fn sums_to_one() {
        let w = cls_attention_distribution(&tiny(4, 2), &input()).unwrap();
        assert_eq!(w.len(), input().tokens.len());
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_head_is_the_raw_row() {
        let m = tiny(1, 1);
        let heads = m.last_layer_attention(&input()).unwrap();
        let w = cls_attention_distribution(&m, &input()).unwrap();
        for (j, v) in w.iter().enumerate() {
            assert!((v - heads[0][(0, j)]).abs() < 1e-12);
        }
    }

    #[test]
    fn unavailable() {
        assert_eq!(cls_attention_distribution(&Blind, &input()).unwrap_err().to_string(), "attention unavailable");
    }

    #[test]
    fn token_mass() {
        let inp = input();
        let n = inp.tokens.len();
        let w = vec![1.0 / n as f64; n];
        assert!((abstract_token_mass(&inp, &w, "novel") - 1.0 / n as f64).abs() < 1e-15);
        assert_eq!(attention_records(&inp, &w)[0].token, "[CLS]");
    }
}
