//! Normalized spectral clustering: symmetric normalized Laplacian, bottom-k eigenvectors,
//! row normalization, then k-means++ with restarts on the embedded rows.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::similarity::SimilarityMatrix;
use crate::error::{Error, Result};

pub const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub k: usize,
    /// Cluster index per concept, in matrix order.
    pub labels: Vec<usize>,
    /// Row-normalized spectral coordinates the clustering ran on.
    pub embedding: DMatrix<f64>,
    pub warnings: Vec<String>,
}

impl ClusterAssignment {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Number of connected components of the graph whose edges are the positive off-diagonal entries.
pub fn connected_components(values: &DMatrix<f64>) -> usize {
    let n = values.nrows();
    let mut seen = vec![false; n];
    let mut components = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if !seen[v] && v != u && values[(u, v)] > 0.0 {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    components
}

/// Eigenvectors of `I - D^{-1/2} W D^{-1/2}` for the `k` smallest eigenvalues, rows scaled to unit norm.
pub fn spectral_embedding(values: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = values.nrows();
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = values.row(i).iter().sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let laplacian = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - inv_sqrt_deg[i] * values[(i, j)] * inv_sqrt_deg[j]
    });
    let eig = SymmetricEigen::new(laplacian);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let mut emb = DMatrix::zeros(n, k);
    for (c, &col) in order.iter().take(k).enumerate() {
        // Fix the sign so the embedding does not depend on solver sign conventions.
        let v = eig.eigenvectors.column(col);
        let pivot = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() + 1e-12 { x } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            emb[(r, c)] = sign * v[r];
        }
    }
    for r in 0..n {
        let norm = emb.row(r).norm();
        if norm > 0.0 {
            for c in 0..k {
                emb[(r, c)] /= norm;
            }
        }
    }
    emb
}

fn sq_dist(points: &DMatrix<f64>, i: usize, center: &[f64]) -> f64 {
    points.row(i).iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn kmeans_pp_seed(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.nrows();
    let row = |i: usize| points.row(i).iter().copied().collect::<Vec<f64>>();
    let mut centers = vec![row(rng.random_range(0..n))];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = row(pick);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, i, &c));
        }
        centers.push(c);
    }
    centers
}

/// Moves points into empty clusters so every cluster is populated: the point farthest
/// from its own centroid among clusters with more than one member is reassigned.
fn repair_empty(points: &DMatrix<f64>, labels: &mut [usize], centers: &[Vec<f64>], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut best: Option<(usize, f64)> = None;
        for (i, &l) in labels.iter().enumerate() {
            if sizes[l] < 2 {
                continue;
            }
            let d = sq_dist(points, i, &centers[l]);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        match best {
            Some((i, _)) => labels[i] = empty,
            None => return,
        }
    }
}

fn lloyd(points: &DMatrix<f64>, k: usize, mut centers: Vec<Vec<f64>>) -> (Vec<usize>, f64) {
    let n = points.nrows();
    let dim = points.ncols();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(points, i, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if *label != best {
                *label = best;
                changed = true;
            }
        }
        repair_empty(points, &mut labels, &centers, k);
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(points.row(i).iter()) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = labels.iter().enumerate().map(|(i, &l)| sq_dist(points, i, &centers[l])).sum();
    (labels, inertia)
}

/// k-means++ restarted `restarts` times; keeps the lowest-inertia run (first on ties).
pub fn kmeans(points: &DMatrix<f64>, k: usize, restarts: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..restarts.max(1) {
        let centers = kmeans_pp_seed(points, k, &mut rng);
        let (labels, inertia) = lloyd(points, k, centers);
        if best.as_ref().is_none_or(|(_, bi)| inertia < *bi - 1e-12) {
            best = Some((labels, inertia));
        }
    }
    canonicalize(best.unwrap().0)
}

/// Renumbers clusters in order of first appearance.
fn canonicalize(labels: Vec<usize>) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .into_iter()
        .map(|l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

pub fn spectral_cluster(matrix: &SimilarityMatrix, k: usize, seed: u64) -> Result<ClusterAssignment> {
    let n = matrix.len();
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} outside [2, {n}]")));
    }
    let mut warnings = Vec::new();
    let components = connected_components(&matrix.values);
    if components > 1 {
        let w = format!("similarity graph has {components} connected components; clustering proceeds on the full embedding");
        log::warn!("{w}");
        warnings.push(w);
    }
    let embedding = spectral_embedding(&matrix.values, k);
    let labels = kmeans(&embedding, k, KMEANS_RESTARTS, seed);
    Ok(ClusterAssignment {
        k,
        labels,
        embedding,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks(sizes: &[usize], within: f64, across: f64) -> SimilarityMatrix {
        let n: usize = sizes.iter().sum();
        let mut block_of = Vec::new();
        for (b, &s) in sizes.iter().enumerate() {
            block_of.extend(std::iter::repeat_n(b, s));
        }
        let values = DMatrix::from_fn(n, n, |i, j| if block_of[i] == block_of[j] { within } else { across });
        SimilarityMatrix::from_values((0..n).map(|i| format!("c{i}")).collect(), values)
    }

    #[test]
    fn recovers_two_perfect_blocks() {
        let m = blocks(&[4, 6], 0.9, 0.0);
        let a = spectral_cluster(&m, 2, 3).unwrap();
        assert_eq!(a.labels, vec![0, 0, 0, 0, 1, 1, 1, 1, 1, 1]);
        assert_eq!(a.warnings.len(), 1);
    }

    #[test]
    fn k_equal_n_gives_singletons() {
        let values = DMatrix::from_fn(5, 5, |i, j| if i == j { 0.8 } else { 0.1 * ((i + j) % 3) as f64 + 0.05 });
        let m = SimilarityMatrix::from_values((0..5).map(|i| format!("c{i}")).collect(), values);
        let a = spectral_cluster(&m, 5, 0).unwrap();
        assert_eq!(a.cluster_sizes(), vec![1; 5]);
    }

    #[test]
    fn identical_rows_split_deterministically() {
        let m = blocks(&[6], 0.5, 0.0);
        let a = spectral_cluster(&m, 2, 11).unwrap();
        let b = spectral_cluster(&m, 2, 11).unwrap();
        assert_eq!(a.labels, b.labels);
        assert!(a.cluster_sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn k_out_of_range() {
        let m = blocks(&[3], 0.5, 0.0);
        assert!(spectral_cluster(&m, 1, 0).is_err());
        assert!(spectral_cluster(&m, 4, 0).is_err());
    }
}
