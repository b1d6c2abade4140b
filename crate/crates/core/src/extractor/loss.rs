//! Weighted start/end cross-entropy of the pointer head.

use crate::error::{Error, Result};

/// The 0/1 indicator scaled to sum to one over its positive entries.
pub fn normalize_target(y: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = y.iter().filter(|v| **v > 0.0).sum();
    if total <= 0.0 {
        return Err(Error::NoGoldSpan);
    }
    Ok(y.iter().map(|v| if *v > 0.0 { v / total } else { 0.0 }).collect())
}

/// `-Σ t_i ln p_i` over the support of `t`; probabilities are floored at the smallest
/// positive double so the result stays finite.
pub fn cross_entropy(p: &[f64], target: &[f64]) -> f64 {
    p.iter()
        .zip(target)
        .filter(|(_, t)| **t > 0.0)
        .map(|(p, t)| -t * p.max(f64::MIN_POSITIVE).ln())
        .sum()
}

/// `alpha · CE(p_start, ŷ_start) + (1 − alpha) · CE(p_end, ŷ_end)` where each ŷ is the
/// gold indicator normalized over its positives.
pub fn training_loss(p_start: &[f64], p_end: &[f64], y_start: &[f64], y_end: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    if p_start.len() != y_start.len() || p_end.len() != y_end.len() {
        return Err(Error::InvalidArgument("probability and target lengths differ".into()));
    }
    let ts = normalize_target(y_start)?;
    let te = normalize_target(y_end)?;
    Ok(alpha * cross_entropy(p_start, &ts) + (1.0 - alpha) * cross_entropy(p_end, &te))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_three_tokens() {
        let l = training_loss(&[0.2, 0.5, 0.3], &[0.0, 1.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 1.0, 0.0], 0.3).unwrap();
        assert!((l - 0.3 * -(0.5f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_is_zero() {
        let one_hot = [0.0, 0.0, 1.0, 0.0];
        assert_eq!(training_loss(&one_hot, &one_hot, &one_hot, &one_hot, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn multi_gold_targets_are_normalized() {
        let t = normalize_target(&[1.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(t, vec![1.0 / 3.0, 0.0, 1.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn no_gold_is_an_error() {
        let e = training_loss(&[0.5, 0.5], &[0.5, 0.5], &[0.0, 0.0], &[1.0, 0.0], 0.3).unwrap_err();
        assert_eq!(e.to_string(), "no gold span");
        assert!(training_loss(&[1.0], &[1.0], &[1.0], &[1.0], 1.0).is_err());
    }
}
