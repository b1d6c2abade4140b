#![allow(dead_code)]

use std::collections::BTreeMap;

use concept_core::taxonomy::similarity::SimilarityMatrix;
use concept_core::tokenize::Token;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Symmetric matrix with `blocks` planted groups: within-block similarity in [0.6, 0.9),
/// cross-block in [0, 0.15). Returns the matrix and the planted label of each row.
pub fn planted(blocks: usize, seed: u64) -> (SimilarityMatrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Vec::new();
    for b in 0..blocks {
        let size = rng.random_range(3..=8);
        labels.extend(std::iter::repeat_n(b, size));
    }
    let n = labels.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = if labels[i] == labels[j] { rng.random_range(0.6..0.9) } else { rng.random_range(0.0..0.15) };
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let names = (0..n).map(|i| format!("c{i}")).collect();
    (SimilarityMatrix::from_values(names, m), labels)
}

const WORDS: [&str; 4] = ["red", "blue", "fox", "-"];

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

pub struct Trial {
    pub tokens: Vec<Token>,
    pub p_start: Vec<f64>,
    pub p_end: Vec<f64>,
    pub range: std::ops::Range<usize>,
    pub threshold: f64,
    pub max_len: usize,
}

pub fn random_trial(rng: &mut ChaCha8Rng) -> Trial {
    let n = rng.random_range(1..=32);
    let tokens: Vec<Token> = (0..n).map(|_| Token::new(WORDS[rng.random_range(0..WORDS.len())], rng.random_bool(0.8))).collect();
    let p_start = softmax(&(0..n).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<_>>());
    let p_end = softmax(&(0..n).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<_>>());
    let a = rng.random_range(0..n);
    let b = rng.random_range(a + 1..=n);
    // pick a threshold among realised confidences so outputs are rarely empty
    let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
    let threshold = if rng.random_bool(0.1) { 2.0 } else { p_start[i] + p_end[j] - 1e-3 };
    Trial { tokens, p_start, p_end, range: a..b, threshold, max_len: rng.random_range(1..=8) }
}

/// Enumerate every span of the whole sequence, filter, keep the best occurrence per text,
/// then order the survivors.
pub fn brute_force(t: &Trial) -> Vec<(String, usize, usize, f64)> {
    let n = t.tokens.len();
    let mut best: BTreeMap<String, (usize, usize, f64)> = BTreeMap::new();
    let better = |a: (usize, usize, f64), b: (usize, usize, f64)| a.2 > b.2 || (a.2 == b.2 && (a.0, a.1) < (b.0, b.1));
    for i in 0..n {
        for j in 0..n {
            let inside = t.range.contains(&i) && t.range.contains(&j);
            if !inside || j < i || j - i + 1 > t.max_len {
                continue;
            }
            let cs = t.p_start[i] + t.p_end[j];
            if cs <= t.threshold {
                continue;
            }
            let mut text = String::new();
            for (k, tok) in t.tokens[i..=j].iter().enumerate() {
                if k > 0 && tok.space_before {
                    text.push(' ');
                }
                text.push_str(&tok.text);
            }
            let cand = (i, j, cs);
            match best.get(&text) {
                Some(&cur) if !better(cand, cur) => {}
                _ => {
                    best.insert(text, cand);
                }
            }
        }
    }
    let mut out: Vec<_> = best.into_iter().map(|(s, (i, j, c))| (s, i, j, c)).collect();
    out.sort_by(|a, b| b.3.partial_cmp(&a.3).unwrap().then((a.1, a.2).cmp(&(b.1, b.2))));
    out
}
