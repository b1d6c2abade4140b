//! Cluster-count selection by combined Silhouette Coefficient and Calinski–Harabasz Index.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::similarity::SimilarityMatrix;
use super::spectral::spectral_cluster;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionScore {
    pub k: usize,
    #[serde(with = "crate::io::extended_f64")]
    pub sc: f64,
    #[serde(with = "crate::io::extended_f64")]
    pub chi: f64,
    #[serde(with = "crate::io::extended_f64")]
    pub sum_norm: f64,
}

fn dist(points: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    (points.row(i) - points.row(j)).norm()
}

/// Mean silhouette over all points (Euclidean). Points in singleton clusters score 0.
pub fn silhouette(points: &DMatrix<f64>, labels: &[usize], k: usize) -> f64 {
    let n = points.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let mut total = 0.0;
    for i in 0..n {
        let own = labels[i];
        if sizes[own] <= 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += dist(points, i, j);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if !b.is_finite() {
            continue;
        }
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    total / n as f64
}

/// Between-cluster over within-cluster dispersion, each divided by its degrees of freedom.
/// Returns `+inf` when the within-cluster dispersion vanishes and 0 when `k >= n`.
pub fn calinski_harabasz(points: &DMatrix<f64>, labels: &[usize], k: usize) -> f64 {
    let n = points.nrows();
    let dim = points.ncols();
    if k < 2 || k >= n {
        return 0.0;
    }
    let mean: Vec<f64> = (0..dim).map(|c| points.column(c).mean()).collect();
    let mut centroids = vec![vec![0.0; dim]; k];
    let mut sizes = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        sizes[l] += 1;
        for c in 0..dim {
            centroids[l][c] += points[(i, c)];
        }
    }
    for (cent, &s) in centroids.iter_mut().zip(&sizes) {
        if s > 0 {
            cent.iter_mut().for_each(|x| *x /= s as f64);
        }
    }
    let between: f64 = centroids
        .iter()
        .zip(&sizes)
        .map(|(cent, &s)| s as f64 * cent.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum();
    let within: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| (0..dim).map(|c| (points[(i, c)] - centroids[l][c]).powi(2)).sum::<f64>())
        .sum();
    if within <= f64::EPSILON * between.max(f64::MIN_POSITIVE) {
        return f64::INFINITY;
    }
    (between / (k - 1) as f64) / (within / (n - k) as f64)
}

/// Min–max feature scaling: `(v - min) / (max - min)` over the finite entries.
/// `-inf` (a skipped candidate) stays `-inf` and a constant series maps to 0. When the
/// series contains `+inf` the limit of the definition applies: `+inf` maps to 1, finite values to 0.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let min = finite.clone().fold(f64::INFINITY, f64::min);
    let max = finite.fold(f64::NEG_INFINITY, f64::max);
    let has_pos_inf = values.iter().any(|v| *v == f64::INFINITY);
    values
        .iter()
        .map(|&v| {
            if v == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else if v == f64::INFINITY {
                1.0
            } else if has_pos_inf {
                0.0
            } else if max > min {
                (v - min) / (max - min)
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountSelection {
    pub k_star: usize,
    pub scores: Vec<SelectionScore>,
    pub warnings: Vec<String>,
}

/// Clusters at every k in `k_min..=k_max`, scores each run, and returns the k maximizing
/// the sum of the min–max-normalized SC and CHI series (ties go to the smaller k).
pub fn select_cluster_count(matrix: &SimilarityMatrix, k_min: usize, k_max: usize, seed: u64) -> Result<CountSelection> {
    let n = matrix.len();
    if k_min < 2 || k_max > n || k_min > k_max {
        return Err(Error::InvalidArgument(format!(
            "k range [{k_min}, {k_max}] must lie within [2, {n}]"
        )));
    }
    let mut warnings = Vec::new();
    let mut raw = Vec::new();
    for k in k_min..=k_max {
        let a = spectral_cluster(matrix, k, seed)?;
        for w in &a.warnings {
            if !warnings.contains(w) {
                warnings.push(w.clone());
            }
        }
        if a.cluster_sizes().contains(&0) {
            let w = format!("k = {k} produced an empty cluster; skipped");
            log::warn!("{w}");
            warnings.push(w);
            raw.push((k, f64::NEG_INFINITY, f64::NEG_INFINITY));
            continue;
        }
        let sc = silhouette(&a.embedding, &a.labels, k);
        let chi = calinski_harabasz(&a.embedding, &a.labels, k);
        raw.push((k, sc, chi));
    }
    let sc_norm = min_max_normalize(&raw.iter().map(|r| r.1).collect::<Vec<_>>());
    let chi_norm = min_max_normalize(&raw.iter().map(|r| r.2).collect::<Vec<_>>());
    let scores: Vec<SelectionScore> = raw
        .iter()
        .zip(sc_norm.iter().zip(&chi_norm))
        .map(|(&(k, sc, chi), (s, c))| SelectionScore {
            k,
            sc,
            chi,
            sum_norm: s + c,
        })
        .map(|mut s| {
            if s.sc == f64::NEG_INFINITY {
                s.sum_norm = f64::NEG_INFINITY;
            }
            s
        })
        .collect();
    let k_star = best_k(&scores).ok_or_else(|| Error::Validation("no k in range produced a valid clustering".into()))?;
    Ok(CountSelection {
        k_star,
        scores,
        warnings,
    })
}

/// Argmax of `sum_norm`, ties broken toward the smaller k.
pub fn best_k(scores: &[SelectionScore]) -> Option<usize> {
    let mut best: Option<&SelectionScore> = None;
    for s in scores {
        if s.sum_norm == f64::NEG_INFINITY {
            continue;
        }
        if best.is_none_or(|b| s.sum_norm > b.sum_norm) {
            best = Some(s);
        }
    }
    best.map(|s| s.k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_max_on_three_points() {
        assert_eq!(min_max_normalize(&[2.0, 4.0, 3.0]), vec![0.0, 1.0, 0.5]);
        assert_eq!(min_max_normalize(&[7.0, 7.0]), vec![0.0, 0.0]);
        let with_inf = min_max_normalize(&[1.0, f64::INFINITY, 3.0]);
        assert_eq!(with_inf, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn silhouette_of_separated_pairs() {
        let pts = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 10.0, 11.0]);
        let labels = [0, 0, 1, 1];
        // a = 1 for every point; b = 10.5, 9.5, 9.5, 10.5 respectively.
        let expected = ((10.5 - 1.0) / 10.5 + (9.5 - 1.0) / 9.5) / 2.0;
        assert!((silhouette(&pts, &labels, 2) - expected).abs() < 1e-12);
    }

    #[test]
    fn chi_hand_computed() {
        let pts = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 10.0, 11.0]);
        // centroids 0.5, 10.5, mean 5.5: between = 2*25 + 2*25 = 100, within = 4*0.25 = 1.
        let chi = calinski_harabasz(&pts, &[0, 0, 1, 1], 2);
        assert!((chi - (100.0 / 1.0) / (1.0 / 2.0)).abs() < 1e-9);
    }

    #[test]
    fn ties_go_to_smaller_k() {
        let s = |k, v| SelectionScore { k, sc: 0.0, chi: 0.0, sum_norm: v };
        assert_eq!(best_k(&[s(3, 1.0), s(4, 2.0), s(5, 2.0)]), Some(4));
        assert_eq!(best_k(&[s(3, f64::NEG_INFINITY)]), None);
    }

    #[test]
    fn forced_two_of_two() {
        let m = SimilarityMatrix::from_values(vec!["a".into(), "b".into()], DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.5]));
        let sel = select_cluster_count(&m, 2, 2, 0).unwrap();
        assert_eq!(sel.k_star, 2);
    }
}
