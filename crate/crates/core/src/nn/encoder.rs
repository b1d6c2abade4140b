//! Post-norm transformer encoder trained from random initialization.
//!
//! Input layer: `H0 = E W0 + B0`, where `E` holds the token embeddings, `W0` projects the
//! embedding size to the hidden size, and `B0` is a learned per-position bias.
//! Each layer: multi-head self-attention, residual, layer norm, ReLU feed-forward,
//! residual, layer norm.

use ndarray::{s, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{normal_matrix, slice2, slice2_mut, softmax_rows, LayerNorm, LayerNormCache, Linear, Parameters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub ffn_dim: usize,
    pub max_len: usize,
    pub dropout: f64,
}

impl EncoderConfig {
    pub fn head_dim(&self) -> usize {
        self.hidden_dim / self.num_heads
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayer {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub attn_norm: LayerNorm,
    pub ff_in: Linear,
    pub ff_out: Linear,
    pub ff_norm: LayerNorm,
}

impl EncoderLayer {
    fn new<R: Rng>(cfg: &EncoderConfig, rng: &mut R) -> Self {
        let h = cfg.hidden_dim;
        EncoderLayer {
            query: Linear::new(h, h, rng),
            key: Linear::new(h, h, rng),
            value: Linear::new(h, h, rng),
            output: Linear::new(h, h, rng),
            attn_norm: LayerNorm::new(h),
            ff_in: Linear::new(h, cfg.ffn_dim, rng),
            ff_out: Linear::new(cfg.ffn_dim, h, rng),
            ff_norm: LayerNorm::new(h),
        }
    }

    fn zeros(cfg: &EncoderConfig) -> Self {
        let h = cfg.hidden_dim;
        EncoderLayer {
            query: Linear::zeros(h, h),
            key: Linear::zeros(h, h),
            value: Linear::zeros(h, h),
            output: Linear::zeros(h, h),
            attn_norm: LayerNorm::zeros(h),
            ff_in: Linear::zeros(h, cfg.ffn_dim),
            ff_out: Linear::zeros(cfg.ffn_dim, h),
            ff_norm: LayerNorm::zeros(h),
        }
    }

    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.query.visit(&format!("{prefix}.query"), f);
        self.key.visit(&format!("{prefix}.key"), f);
        self.value.visit(&format!("{prefix}.value"), f);
        self.output.visit(&format!("{prefix}.output"), f);
        self.attn_norm.visit(&format!("{prefix}.attn_norm"), f);
        self.ff_in.visit(&format!("{prefix}.ff_in"), f);
        self.ff_out.visit(&format!("{prefix}.ff_out"), f);
        self.ff_norm.visit(&format!("{prefix}.ff_norm"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.query.visit_mut(&format!("{prefix}.query"), f);
        self.key.visit_mut(&format!("{prefix}.key"), f);
        self.value.visit_mut(&format!("{prefix}.value"), f);
        self.output.visit_mut(&format!("{prefix}.output"), f);
        self.attn_norm.visit_mut(&format!("{prefix}.attn_norm"), f);
        self.ff_in.visit_mut(&format!("{prefix}.ff_in"), f);
        self.ff_out.visit_mut(&format!("{prefix}.ff_out"), f);
        self.ff_norm.visit_mut(&format!("{prefix}.ff_norm"), f);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub config: EncoderConfig,
    pub token_embedding: Array2<f64>,
    pub input_projection: Array2<f64>,
    pub position_bias: Array2<f64>,
    pub layers: Vec<EncoderLayer>,
}

/// Train mode draws dropout masks from the given generator; eval mode is deterministic.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// Attention probabilities, one (len × len) matrix per head.
    attn: Vec<Array2<f64>>,
    context: Array2<f64>,
    attn_drop: Option<Array2<f64>>,
    norm1: LayerNormCache,
    y1: Array2<f64>,
    ff_pre: Array2<f64>,
    ff_act: Array2<f64>,
    ff_drop: Option<Array2<f64>>,
    norm2: LayerNormCache,
}

#[derive(Debug, Clone)]
pub struct ForwardCache {
    ids: Vec<usize>,
    embedded: Array2<f64>,
    input_drop: Option<Array2<f64>>,
    layers: Vec<LayerCache>,
}

impl ForwardCache {
    /// Attention probabilities of the last layer, one matrix per head.
    pub fn last_layer_attention(&self) -> Option<&[Array2<f64>]> {
        self.layers.last().map(|l| l.attn.as_slice())
    }

    pub fn layer_attention(&self, layer: usize) -> Option<&[Array2<f64>]> {
        self.layers.get(layer).map(|l| l.attn.as_slice())
    }
}

fn dropout_mask(rows: usize, cols: usize, rate: f64, mode: &mut Mode<'_>) -> Option<Array2<f64>> {
    match mode {
        Mode::Train(rng) if rate > 0.0 => {
            let keep = 1.0 - rate;
            Some(Array2::from_shape_fn((rows, cols), |_| {
                if rng.random::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            }))
        }
        _ => None,
    }
}

fn apply_mask(x: Array2<f64>, mask: &Option<Array2<f64>>) -> Array2<f64> {
    match mask {
        Some(m) => x * m,
        None => x,
    }
}

impl Encoder {
    pub fn new<R: Rng>(config: EncoderConfig, rng: &mut R) -> Self {
        assert!(config.num_heads > 0 && config.hidden_dim % config.num_heads == 0);
        let token_embedding = normal_matrix(config.vocab_size, config.embedding_dim, 1.0, rng);
        let input_projection = normal_matrix(
            config.embedding_dim,
            config.hidden_dim,
            (1.0 / config.embedding_dim as f64).sqrt(),
            rng,
        );
        let position_bias = normal_matrix(config.max_len, config.hidden_dim, 0.1, rng);
        let layers = (0..config.num_layers).map(|_| EncoderLayer::new(&config, rng)).collect();
        Encoder {
            config,
            token_embedding,
            input_projection,
            position_bias,
            layers,
        }
    }

    pub fn zeros_like(&self) -> Self {
        let c = &self.config;
        Encoder {
            config: c.clone(),
            token_embedding: Array2::zeros((c.vocab_size, c.embedding_dim)),
            input_projection: Array2::zeros((c.embedding_dim, c.hidden_dim)),
            position_bias: Array2::zeros((c.max_len, c.hidden_dim)),
            layers: (0..c.num_layers).map(|_| EncoderLayer::zeros(c)).collect(),
        }
    }

    /// Encodes one sequence of token ids (length ≤ `max_len`) into a (len × hidden) matrix.
    pub fn forward(&self, ids: &[usize], mut mode: Mode<'_>) -> (Array2<f64>, ForwardCache) {
        let len = ids.len();
        assert!(len > 0 && len <= self.config.max_len, "sequence length {len} outside 1..={}", self.config.max_len);
        let d = self.config.embedding_dim;
        let mut embedded = Array2::zeros((len, d));
        for (r, &id) in ids.iter().enumerate() {
            embedded.row_mut(r).assign(&self.token_embedding.row(id));
        }
        let h0 = embedded.dot(&self.input_projection) + &self.position_bias.slice(s![..len, ..]);
        let input_drop = dropout_mask(len, self.config.hidden_dim, self.config.dropout, &mut mode);
        let mut x = apply_mask(h0, &input_drop);

        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (y, cache) = self.layer_forward(layer, x, &mut mode);
            caches.push(cache);
            x = y;
        }
        (
            x,
            ForwardCache {
                ids: ids.to_vec(),
                embedded,
                input_drop,
                layers: caches,
            },
        )
    }

    fn layer_forward(&self, layer: &EncoderLayer, x: Array2<f64>, mode: &mut Mode<'_>) -> (Array2<f64>, LayerCache) {
        let len = x.nrows();
        let heads = self.config.num_heads;
        let hd = self.config.head_dim();
        let scale = 1.0 / (hd as f64).sqrt();

        let q = layer.query.forward(&x);
        let k = layer.key.forward(&x);
        let v = layer.value.forward(&x);
        let mut context = Array2::zeros((len, self.config.hidden_dim));
        let mut attn = Vec::with_capacity(heads);
        for h in 0..heads {
            let cols = s![.., h * hd..(h + 1) * hd];
            let mut scores = q.slice(cols).dot(&k.slice(cols).t()) * scale;
            softmax_rows(&mut scores);
            context.slice_mut(cols).assign(&scores.dot(&v.slice(cols)));
            attn.push(scores);
        }
        let attn_out = layer.output.forward(&context);
        let attn_drop = dropout_mask(len, self.config.hidden_dim, self.config.dropout, mode);
        let r1 = &x + &apply_mask(attn_out, &attn_drop);
        let (y1, norm1) = layer.attn_norm.forward(&r1);

        let ff_pre = layer.ff_in.forward(&y1);
        let ff_act = ff_pre.mapv(|z| z.max(0.0));
        let ff_out = layer.ff_out.forward(&ff_act);
        let ff_drop = dropout_mask(len, self.config.hidden_dim, self.config.dropout, mode);
        let r2 = &y1 + &apply_mask(ff_out, &ff_drop);
        let (y2, norm2) = layer.ff_norm.forward(&r2);
        (
            y2,
            LayerCache {
                input: x,
                q,
                k,
                v,
                attn,
                context,
                attn_drop,
                norm1,
                y1,
                ff_pre,
                ff_act,
                ff_drop,
                norm2,
            },
        )
    }

    /// Backpropagates `d_hidden` (gradient w.r.t. the final hidden states) and accumulates
    /// parameter gradients into `grads`.
    pub fn backward(&self, cache: &ForwardCache, d_hidden: &Array2<f64>, grads: &mut Encoder) {
        let mut dx = d_hidden.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            dx = self.layer_backward(layer, &cache.layers[i], &dx, &mut grads.layers[i]);
        }
        let dh0 = apply_mask(dx, &cache.input_drop);
        let len = cache.ids.len();
        {
            let mut pb = grads.position_bias.slice_mut(s![..len, ..]);
            pb += &dh0;
        }
        grads.input_projection += &cache.embedded.t().dot(&dh0);
        let d_emb = dh0.dot(&self.input_projection.t());
        for (r, &id) in cache.ids.iter().enumerate() {
            let mut row = grads.token_embedding.row_mut(id);
            row += &d_emb.row(r);
        }
    }

    fn layer_backward(&self, layer: &EncoderLayer, c: &LayerCache, dy2: &Array2<f64>, g: &mut EncoderLayer) -> Array2<f64> {
        let heads = self.config.num_heads;
        let hd = self.config.head_dim();
        let scale = 1.0 / (hd as f64).sqrt();

        let dr2 = layer.ff_norm.backward(&c.norm2, dy2, &mut g.ff_norm);
        let d_ff_out = apply_mask(dr2.clone(), &c.ff_drop);
        let d_act = layer.ff_out.backward(&c.ff_act, &d_ff_out, &mut g.ff_out);
        let d_pre = d_act * &c.ff_pre.mapv(|z| if z > 0.0 { 1.0 } else { 0.0 });
        let dy1 = dr2 + &layer.ff_in.backward(&c.y1, &d_pre, &mut g.ff_in);

        let dr1 = layer.attn_norm.backward(&c.norm1, &dy1, &mut g.attn_norm);
        let d_attn_out = apply_mask(dr1.clone(), &c.attn_drop);
        let d_context = layer.output.backward(&c.context, &d_attn_out, &mut g.output);

        let mut dq = Array2::zeros(c.q.raw_dim());
        let mut dk = Array2::zeros(c.k.raw_dim());
        let mut dv = Array2::zeros(c.v.raw_dim());
        for h in 0..heads {
            let cols = s![.., h * hd..(h + 1) * hd];
            let a = &c.attn[h];
            let dctx = d_context.slice(cols);
            let da = dctx.dot(&c.v.slice(cols).t());
            dv.slice_mut(cols).assign(&a.t().dot(&dctx));
            let row_dot = (&da * a).sum_axis(Axis(1));
            let ds = (da - &row_dot.view().insert_axis(Axis(1))) * a * scale;
            dq.slice_mut(cols).assign(&ds.dot(&c.k.slice(cols)));
            dk.slice_mut(cols).assign(&ds.t().dot(&c.q.slice(cols)));
        }
        let mut dx = dr1;
        dx += &layer.query.backward(&c.input, &dq, &mut g.query);
        dx += &layer.key.backward(&c.input, &dk, &mut g.key);
        dx += &layer.value.backward(&c.input, &dv, &mut g.value);
        dx
    }
}

impl Parameters for Encoder {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64])) {
        f("token_embedding", slice2(&self.token_embedding));
        f("input_projection", slice2(&self.input_projection));
        f("position_bias", slice2(&self.position_bias));
        for (i, l) in self.layers.iter().enumerate() {
            l.visit(&format!("layers.{i}"), f);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        f("token_embedding", slice2_mut(&mut self.token_embedding));
        f("input_projection", slice2_mut(&mut self.input_projection));
        f("position_bias", slice2_mut(&mut self.position_bias));
        for (i, l) in self.layers.iter_mut().enumerate() {
            l.visit_mut(&format!("layers.{i}"), f);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn tiny() -> Encoder {
        let cfg = EncoderConfig {
            vocab_size: 10,
            embedding_dim: 6,
            hidden_dim: 8,
            num_layers: 2,
            num_heads: 2,
            ffn_dim: 12,
            max_len: 7,
            dropout: 0.0,
        };
        Encoder::new(cfg, &mut ChaCha8Rng::seed_from_u64(5))
    }

    #[test]
    fn attention_rows_are_distributions() {
        let enc = tiny();
        let (h, cache) = enc.forward(&[2, 4, 5, 3], Mode::Eval);
        assert_eq!(h.dim(), (4, 8));
        for a in cache.last_layer_attention().unwrap() {
            for row in a.rows() {
                assert!((row.sum() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eval_is_deterministic() {
        let enc = tiny();
        let (a, _) = enc.forward(&[2, 4, 5], Mode::Eval);
        let (b, _) = enc.forward(&[2, 4, 5], Mode::Eval);
        assert_eq!(a, b);
    }

    #[test]
    fn full_gradient_matches_finite_differences() {
        let enc = tiny();
        let ids = [2, 7, 1, 9, 3];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let proj = normal_matrix(5, 8, 1.0, &mut rng);
        let loss = |e: &Encoder| (e.forward(&ids, Mode::Eval).0 * &proj).sum();

        let (_, cache) = enc.forward(&ids, Mode::Eval);
        let mut grads = enc.zeros_like();
        enc.backward(&cache, &proj, &mut grads);
        let analytic = grads.to_flat();

        let base = enc.to_flat();
        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        for idx in (0..base.len()).step_by(7) {
            let mut plus = enc.clone();
            let mut p = base.clone();
            p[idx] += eps;
            plus.load_flat(&p).unwrap();
            let mut minus = enc.clone();
            p[idx] -= 2.0 * eps;
            minus.load_flat(&p).unwrap();
            let num = (loss(&plus) - loss(&minus)) / (2.0 * eps);
            let a = analytic[idx];
            let denom = num.abs().max(a.abs());
            if denom > 1e-7 {
                worst = worst.max((num - a).abs() / denom);
            }
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }
}
