mod common;

use concept_core::extractor::{decode_spans, SpanPrediction};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn as_tuples(p: &[SpanPrediction]) -> Vec<(String, usize, usize, f64)> {
    p.iter().map(|s| (s.text.clone(), s.start, s.end, s.confidence)).collect()
}

#[test]
fn matches_brute_force_over_random_trials() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut nonempty = 0;
    for trial in 0..1000 {
        let t = common::random_trial(&mut rng);
        let got = decode_spans(&t.tokens, &t.p_start, &t.p_end, t.range.clone(), t.threshold, t.max_len);
        let want = common::brute_force(&t);
        assert_eq!(as_tuples(&got), want, "trial {trial}");
        nonempty += usize::from(!got.is_empty());
    }
    assert!(nonempty > 500);
}

#[test]
fn invariants_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..300 {
        let t = common::random_trial(&mut rng);
        let got = decode_spans(&t.tokens, &t.p_start, &t.p_end, t.range.clone(), t.threshold, t.max_len);
        for w in got.windows(2) {
            assert!(w[0].confidence >= w[1].confidence);
        }
        for s in &got {
            assert!(s.start <= s.end && s.end - s.start < t.max_len);
            assert!(t.range.contains(&s.start) && t.range.contains(&s.end));
            assert!(s.confidence > t.threshold);
        }
    }
}
