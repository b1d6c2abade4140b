use concept_core::causal::{
    backdoor_estimate, compare, frontdoor_estimate, interventional_truth, max_abs_diff, observational_joint, random_check, DiscreteScm, Domains,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn draw(row: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    row.len() - 1
}

/// Sample the model with X forced to `x` and tabulate S.
fn monte_carlo_do(scm: &DiscreteScm, x: usize, samples: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut counts = vec![0usize; scm.domains.s];
    for _ in 0..samples {
        let k = draw(&scm.prior_k, rng);
        let p = draw(&scm.cond_p[x], rng);
        let s = draw(&scm.cond_s[p][k], rng);
        counts[s] += 1;
    }
    counts.into_iter().map(|c| c as f64 / samples as f64).collect()
}

#[test]
fn truth_agrees_with_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 1_000_000;
    for _ in 0..3 {
        let scm = DiscreteScm::random_sized(2, 4, &mut rng);
        let x = rng.random_range(0..scm.domains.x);
        let truth = interventional_truth(&scm, x).unwrap();
        let mc = monte_carlo_do(&scm, x, n, &mut rng);
        for (t, m) in truth.iter().zip(&mc) {
            let sigma = (t * (1.0 - t) / n as f64).sqrt().max(1e-6);
            assert!((t - m).abs() < 5.0 * sigma, "truth {t} vs sampled {m}");
        }
    }
}

#[test]
fn adjustment_formulas_match_truth_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let summary = random_check(100, &mut rng).unwrap();
    assert_eq!(summary.scms, 100);
    assert!(summary.max_frontdoor_deviation < 1e-9);
    assert!(summary.max_backdoor_deviation < 1e-9);
}

#[test]
fn conditioning_differs_from_intervention_under_confounding() {
    let scm = DiscreteScm {
        domains: Domains { k: 2, x: 2, p: 2, s: 2 },
        prior_k: vec![0.5, 0.5],
        cond_x: vec![vec![0.9, 0.1], vec![0.1, 0.9]],
        cond_p: vec![vec![0.8, 0.2], vec![0.3, 0.7]],
        cond_s: vec![vec![vec![0.9, 0.1], vec![0.2, 0.8]], vec![vec![0.6, 0.4], vec![0.05, 0.95]]],
    };
    let c = compare(&scm, 0).unwrap();
    assert!(max_abs_diff(&c.truth, &c.frontdoor) < 1e-12);
    assert!(max_abs_diff(&c.truth, &c.conditional) > 0.05);
}

#[test]
fn estimates_are_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let scm = DiscreteScm::random_sized(2, 5, &mut rng);
        let joint = observational_joint(&scm).unwrap();
        assert!((joint.total() - 1.0).abs() < 1e-12);
        for x in 0..scm.domains.x {
            for est in [frontdoor_estimate(&joint.observe_xps(), x).unwrap(), backdoor_estimate(&joint.observe_kxs(), x).unwrap()] {
                assert!((est.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(est.iter().all(|v| *v >= 0.0));
            }
        }
    }
}
