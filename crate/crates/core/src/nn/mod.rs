//! Minimal dense neural-network toolkit with explicit backward passes.
//!
//! Everything runs in `f64` on single sequences; batching is done by the trainers,
//! which accumulate gradients over examples before an optimizer step.

pub mod encoder;

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Uniform access to every trainable tensor of a model, in a fixed order.
pub trait Parameters {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64]));

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, s| n += s.len());
        n
    }

    fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit(&mut |_, s| out.extend_from_slice(s));
        out
    }

    fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        let n = self.num_params();
        if flat.len() != n {
            return Err(Error::Checkpoint(format!("expected {n} parameters, found {}", flat.len())));
        }
        let mut off = 0;
        self.visit_mut(&mut |_, s| {
            s.copy_from_slice(&flat[off..off + s.len()]);
            off += s.len();
        });
        Ok(())
    }

    fn zero(&mut self) {
        self.visit_mut(&mut |_, s| s.fill(0.0));
    }

    fn scale(&mut self, factor: f64) {
        self.visit_mut(&mut |_, s| s.iter_mut().for_each(|x| *x *= factor));
    }

    fn all_finite(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |_, s| ok &= s.iter().all(|x| x.is_finite()));
        ok
    }
}

pub(crate) fn slice2(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("parameters are stored in standard layout")
}

pub(crate) fn slice2_mut(a: &mut Array2<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("parameters are stored in standard layout")
}

pub(crate) fn slice1(a: &Array1<f64>) -> &[f64] {
    a.as_slice().expect("parameters are stored in standard layout")
}

pub(crate) fn slice1_mut(a: &mut Array1<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("parameters are stored in standard layout")
}

pub(crate) fn normal_matrix<R: Rng>(rows: usize, cols: usize, std: f64, rng: &mut R) -> Array2<f64> {
    let dist = Normal::new(0.0, std).expect("positive std");
    Array2::from_shape_fn((rows, cols), |_| dist.sample(rng))
}

/// Affine map `y = x W + b` with `W` stored as (in × out).
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Linear {
    pub fn new<R: Rng>(input: usize, output: usize, rng: &mut R) -> Self {
        Linear {
            w: normal_matrix(input, output, (1.0 / input as f64).sqrt(), rng),
            b: Array1::zeros(output),
        }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Linear {
            w: Array2::zeros((input, output)),
            b: Array1::zeros(output),
        }
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }

    /// Accumulates parameter gradients into `grad` and returns the input gradient.
    pub fn backward(&self, x: &Array2<f64>, dy: &Array2<f64>, grad: &mut Linear) -> Array2<f64> {
        grad.w += &x.t().dot(dy);
        grad.b += &dy.sum_axis(Axis(0));
        dy.dot(&self.w.t())
    }

    pub(crate) fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&format!("{prefix}.w"), slice2(&self.w));
        f(&format!("{prefix}.b"), slice1(&self.b));
    }

    pub(crate) fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&format!("{prefix}.w"), slice2_mut(&mut self.w));
        f(&format!("{prefix}.b"), slice1_mut(&mut self.b));
    }
}

pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct LayerNormCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
}

impl LayerNorm {
    pub fn new(dim: usize) -> Self {
        LayerNorm {
            gamma: Array1::ones(dim),
            beta: Array1::zeros(dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        LayerNorm {
            gamma: Array1::zeros(dim),
            beta: Array1::zeros(dim),
        }
    }

    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, LayerNormCache) {
        let dim = x.ncols() as f64;
        let mean = x.sum_axis(Axis(1)) / dim;
        let centered = x - &mean.view().insert_axis(Axis(1));
        let var = centered.mapv(|v| v * v).sum_axis(Axis(1)) / dim;
        let inv_std = var.mapv(|v| 1.0 / (v + LAYER_NORM_EPS).sqrt());
        let xhat = centered * &inv_std.view().insert_axis(Axis(1));
        let y = &xhat * &self.gamma + &self.beta;
        (y, LayerNormCache { xhat, inv_std })
    }

    pub fn backward(&self, cache: &LayerNormCache, dy: &Array2<f64>, grad: &mut LayerNorm) -> Array2<f64> {
        let dim = dy.ncols() as f64;
        grad.gamma += &(dy * &cache.xhat).sum_axis(Axis(0));
        grad.beta += &dy.sum_axis(Axis(0));
        let dxhat = dy * &self.gamma;
        let sum_d = dxhat.sum_axis(Axis(1));
        let sum_dx = (&dxhat * &cache.xhat).sum_axis(Axis(1));
        let mut dx = dxhat * dim;
        dx -= &sum_d.view().insert_axis(Axis(1));
        dx -= &(&cache.xhat * &sum_dx.view().insert_axis(Axis(1)));
        dx * &(cache.inv_std.mapv(|s| s / dim)).view().insert_axis(Axis(1))
    }

    pub(crate) fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&format!("{prefix}.gamma"), slice1(&self.gamma));
        f(&format!("{prefix}.beta"), slice1(&self.beta));
    }

    pub(crate) fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&format!("{prefix}.gamma"), slice1_mut(&mut self.gamma));
        f(&format!("{prefix}.beta"), slice1_mut(&mut self.beta));
    }
}

/// Numerically stable softmax of a slice.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Row-wise softmax in place.
pub fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|z| (z - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|e| e / sum);
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, num_params: usize) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) {
        let g = grads.to_flat();
        assert_eq!(g.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let (m, v) = (&mut self.m, &mut self.v);
        let mut off = 0;
        params.visit_mut(&mut |_, p| {
            for (i, x) in p.iter_mut().enumerate() {
                let j = off + i;
                m[j] = b1 * m[j] + (1.0 - b1) * g[j];
                v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
                let mhat = m[j] / bc1;
                let vhat = v[j] / bc2;
                *x -= lr * mhat / (vhat.sqrt() + eps);
            }
            off += p.len();
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1000.0, 1000.0, -5.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn layer_norm_normalizes_rows() {
        let ln = LayerNorm::new(3);
        let (y, _) = ln.forward(&array![[1.0, 2.0, 3.0], [10.0, 10.0, 13.0]]);
        for row in y.rows() {
            assert!(row.sum().abs() < 1e-9);
        }
    }

    fn fd_check<F: Fn(&Array2<f64>) -> f64>(f: F, x: &Array2<f64>, analytic: &Array2<f64>) {
        let eps = 1e-6;
        for idx in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp.as_slice_mut().unwrap()[idx] += eps;
            xm.as_slice_mut().unwrap()[idx] -= eps;
            let num = (f(&xp) - f(&xm)) / (2.0 * eps);
            let a = analytic.as_slice().unwrap()[idx];
            assert!((num - a).abs() <= 1e-6 * (1.0 + a.abs()), "idx {idx}: {num} vs {a}");
        }
    }

    #[test]
    fn layer_norm_input_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ln = LayerNorm::new(4);
        ln.gamma = array![0.5, 1.5, -1.0, 2.0];
        ln.beta = array![0.1, 0.0, 0.3, -0.2];
        let x = normal_matrix(3, 4, 1.0, &mut rng);
        let w = normal_matrix(3, 4, 1.0, &mut rng);
        let loss = |x: &Array2<f64>| (ln.forward(x).0 * &w).sum();
        let (_, cache) = ln.forward(&x);
        let mut g = LayerNorm::zeros(4);
        let dx = ln.backward(&cache, &w, &mut g);
        fd_check(loss, &x, &dx);
    }

    #[test]
    fn linear_input_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let lin = Linear::new(3, 2, &mut rng);
        let x = normal_matrix(4, 3, 1.0, &mut rng);
        let w = normal_matrix(4, 2, 1.0, &mut rng);
        let loss = |x: &Array2<f64>| (lin.forward(x) * &w).sum();
        let mut g = Linear::zeros(3, 2);
        let dx = lin.backward(&x, &w, &mut g);
        fd_check(loss, &x, &dx);
    }

    struct Quad {
        x: Array1<f64>,
    }

    impl Parameters for Quad {
        fn visit(&self, f: &mut dyn FnMut(&str, &[f64])) {
            f("x", slice1(&self.x));
        }
        fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
            f("x", slice1_mut(&mut self.x));
        }
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut p = Quad { x: array![3.0, -2.0] };
        let mut opt = Adam::new(0.1, 2);
        for _ in 0..500 {
            let g = Quad { x: p.x.mapv(|v| 2.0 * v) };
            opt.step(&mut p, &g);
        }
        assert!(p.x.iter().all(|v| v.abs() < 1e-2));
    }
}
