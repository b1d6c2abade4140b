//! Topic classifier: a transformer encoder trained from random initialization, whose
//! `[CLS]` state feeds a two-layer ReLU perceptron and a softmax over the taxonomy topics.
//!
//! No pretrained weights are ever loaded here. The predicted topic becomes the extractor's
//! prompt, and a pretrained classifier would share knowledge with the extractor's encoder.

use std::path::Path;

use ndarray::{s, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint;
use crate::corpus::{DatasetSplit, EntityRecord};
use crate::error::{Error, Result};
use crate::nn::encoder::{Encoder, EncoderConfig, ForwardCache, Mode};
use crate::nn::{softmax, Adam, Linear, Parameters};
use crate::taxonomy::Taxonomy;
use crate::tokenize::{Token, Vocab};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub embedding_dim: usize,
    pub num_heads: usize,
    pub ffn_dim: usize,
    pub num_topics: usize,
    /// Encoder window in tokens, sentinels included.
    pub max_len: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub min_token_count: usize,
    /// Probability of replacing each input token by `[UNK]` during training.
    pub token_dropout: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            num_layers: 2,
            hidden_dim: 128,
            embedding_dim: 128,
            num_heads: 4,
            ffn_dim: 256,
            num_topics: 17,
            max_len: 128,
            dropout: 0.1,
            learning_rate: 3e-5,
            batch_size: 16,
            epochs: 2,
            seed: 0,
            min_token_count: 1,
            token_dropout: 0.0,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("classifier config: {m}")));
        if self.num_heads == 0 || self.hidden_dim % self.num_heads != 0 {
            return bad("hidden_dim must be divisible by num_heads");
        }
        if self.num_topics == 0 {
            return bad("num_topics must be positive");
        }
        if self.max_len < 3 {
            return bad("max_len must be at least 3");
        }
        if !(0.0..1.0).contains(&self.dropout) || !(0.0..1.0).contains(&self.token_dropout) {
            return bad("dropout rates must lie in [0, 1)");
        }
        if self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return bad("batch_size and learning_rate must be positive");
        }
        Ok(())
    }

    fn encoder_config(&self, vocab_size: usize) -> EncoderConfig {
        EncoderConfig {
            vocab_size,
            embedding_dim: self.embedding_dim,
            hidden_dim: self.hidden_dim,
            num_layers: self.num_layers,
            num_heads: self.num_heads,
            ffn_dim: self.ffn_dim,
            max_len: self.max_len,
            dropout: self.dropout,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicDistribution {
    pub probabilities: Vec<f64>,
    pub topic_index: usize,
    pub topic_name: String,
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

impl TopicDistribution {
    pub fn new(probabilities: Vec<f64>, topics: &[String]) -> Self {
        let topic_index = argmax(&probabilities);
        TopicDistribution {
            topic_name: topics.get(topic_index).cloned().unwrap_or_else(|| format!("topic_{topic_index}")),
            probabilities,
            topic_index,
        }
    }
}

pub fn predict_topic(dist: &TopicDistribution) -> &str {
    &dist.topic_name
}

pub struct ClassifierCache {
    encoder: ForwardCache,
    cls: Array2<f64>,
    pre: Array2<f64>,
    act: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicClassifier {
    pub config: ClassifierConfig,
    pub vocab: Vocab,
    pub topics: Vec<String>,
    pub encoder: Encoder,
    pub mlp_hidden: Linear,
    pub mlp_out: Linear,
}

impl TopicClassifier {
    pub fn new<R: rand::Rng>(mut config: ClassifierConfig, vocab: Vocab, topics: Vec<String>, rng: &mut R) -> Result<Self> {
        config.num_topics = topics.len();
        config.validate()?;
        let h = config.hidden_dim;
        let encoder = Encoder::new(config.encoder_config(vocab.len()), rng);
        Ok(TopicClassifier {
            mlp_hidden: Linear::new(h, h, rng),
            mlp_out: Linear::new(h, topics.len(), rng),
            config,
            vocab,
            topics,
            encoder,
        })
    }

    /// Sets both perceptron layers to zero, so every input maps to the uniform distribution.
    pub fn zero_head(&mut self) {
        self.mlp_hidden = Linear::zeros(self.config.hidden_dim, self.config.hidden_dim);
        self.mlp_out = Linear::zeros(self.config.hidden_dim, self.topics.len());
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.zero();
        z
    }

    /// `[CLS] E [SEP] T`, with `T` cut from the right to fit the window. Returns the ids and
    /// whether truncation happened.
    pub fn encode_input(&self, entity: &[Token], abstract_tokens: &[Token]) -> Result<(Vec<usize>, bool)> {
        if entity.is_empty() && abstract_tokens.is_empty() {
            return Err(Error::Validation("empty classifier input".into()));
        }
        let fixed = entity.len() + 2;
        if fixed > self.config.max_len {
            return Err(Error::Validation(format!(
                "entity of {} tokens does not fit the {}-token window",
                entity.len(),
                self.config.max_len
            )));
        }
        let room = self.config.max_len - fixed;
        let keep = abstract_tokens.len().min(room);
        let mut ids = Vec::with_capacity(fixed + keep);
        ids.push(Vocab::CLS_ID);
        ids.extend(self.vocab.ids(entity));
        ids.push(Vocab::SEP_ID);
        ids.extend(self.vocab.ids(&abstract_tokens[..keep]));
        Ok((ids, keep < abstract_tokens.len()))
    }

    pub fn forward(&self, ids: &[usize], mode: Mode<'_>) -> (Vec<f64>, ClassifierCache) {
        let (hidden, enc_cache) = self.encoder.forward(ids, mode);
        let cls = hidden.slice(s![0..1, ..]).to_owned();
        let pre = self.mlp_hidden.forward(&cls);
        let act = pre.mapv(|z| z.max(0.0));
        let logits = self.mlp_out.forward(&act);
        let probs = softmax(logits.row(0).as_slice().expect("row is contiguous"));
        (
            probs,
            ClassifierCache {
                encoder: enc_cache,
                cls,
                pre,
                act,
            },
        )
    }

    /// Cross-entropy of one example; parameter gradients are added into `grads`.
    pub fn loss_and_grad(&self, ids: &[usize], target: usize, mode: Mode<'_>, grads: &mut TopicClassifier) -> f64 {
        let (probs, cache) = self.forward(ids, mode);
        let loss = -probs[target].max(f64::MIN_POSITIVE).ln();
        let mut d_logits = Array2::from_shape_vec((1, probs.len()), probs).expect("shape");
        d_logits[(0, target)] -= 1.0;
        let d_act = self.mlp_out.backward(&cache.act, &d_logits, &mut grads.mlp_out);
        let d_pre = d_act * &cache.pre.mapv(|z| if z > 0.0 { 1.0 } else { 0.0 });
        let d_cls = self.mlp_hidden.backward(&cache.cls, &d_pre, &mut grads.mlp_hidden);
        let mut d_hidden = Array2::zeros((ids.len(), self.config.hidden_dim));
        d_hidden.row_mut(0).assign(&d_cls.row(0));
        self.encoder.backward(&cache.encoder, &d_hidden, &mut grads.encoder);
        loss
    }

    pub fn loss(&self, ids: &[usize], target: usize) -> f64 {
        let (probs, _) = self.forward(ids, Mode::Eval);
        -probs[target].max(f64::MIN_POSITIVE).ln()
    }

    /// Topic distribution for one input, in inference mode.
    pub fn classify(&self, entity: &[Token], abstract_tokens: &[Token]) -> Result<TopicDistribution> {
        let (ids, truncated) = self.encode_input(entity, abstract_tokens)?;
        if truncated {
            log::warn!(
                "classifier input truncated to {} tokens (abstract had {})",
                self.config.max_len,
                abstract_tokens.len()
            );
        }
        let (probs, _) = self.forward(&ids, Mode::Eval);
        Ok(TopicDistribution::new(probs, &self.topics))
    }

    pub fn classify_record(&self, record: &EntityRecord) -> Result<TopicDistribution> {
        self.classify(&record.entity_tokens, &record.abstract_tokens)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header = ClassifierHeader {
            kind: CLASSIFIER_KIND.into(),
            config: self.config.clone(),
            vocab_hash: self.vocab.hash(),
            vocab: self.vocab.tokens().to_vec(),
            topics: self.topics.clone(),
        };
        checkpoint::save(path, &header, &self.to_flat())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (header, params): (ClassifierHeader, Vec<f64>) = checkpoint::load(path)?;
        if header.kind != CLASSIFIER_KIND {
            return Err(Error::Checkpoint(format!("expected a {CLASSIFIER_KIND} checkpoint, found {}", header.kind)));
        }
        let vocab = Vocab::from_tokens(header.vocab);
        if vocab.hash() != header.vocab_hash {
            return Err(Error::Checkpoint("vocabulary hash mismatch".into()));
        }
        let mut model = TopicClassifier::new(header.config, vocab, header.topics, &mut ChaCha8Rng::seed_from_u64(0))?;
        model.load_flat(&params)?;
        Ok(model)
    }
}

const CLASSIFIER_KIND: &str = "topic_classifier";

#[derive(Serialize, Deserialize)]
struct ClassifierHeader {
    kind: String,
    config: ClassifierConfig,
    vocab_hash: String,
    vocab: Vec<String>,
    topics: Vec<String>,
}

impl Parameters for TopicClassifier {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64])) {
        self.encoder.visit(f);
        self.mlp_hidden.visit("mlp_hidden", f);
        self.mlp_out.visit("mlp_out", f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.encoder.visit_mut(f);
        self.mlp_hidden.visit_mut("mlp_hidden", f);
        self.mlp_out.visit_mut("mlp_out", f);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub train_examples: usize,
    pub validation_examples: usize,
    /// Training records whose topic could not be derived from the taxonomy.
    pub excluded: usize,
    pub epochs: Vec<EpochStats>,
}

fn labeled<'a>(records: &'a [EntityRecord], taxonomy: &Taxonomy) -> (Vec<(&'a EntityRecord, usize)>, usize) {
    let mut out = Vec::new();
    let mut excluded = 0;
    for r in records {
        match taxonomy.topic_for_record(r) {
            Some(t) => out.push((r, t)),
            None => excluded += 1,
        }
    }
    (out, excluded)
}

/// Fraction of records whose predicted topic matches the taxonomy topic; `None` when no
/// record carries a derivable topic.
pub fn accuracy(model: &TopicClassifier, records: &[EntityRecord], taxonomy: &Taxonomy) -> Result<Option<f64>> {
    let (items, _) = labeled(records, taxonomy);
    if items.is_empty() {
        return Ok(None);
    }
    let mut correct = 0;
    for (r, t) in &items {
        if model.classify_record(r)?.topic_index == *t {
            correct += 1;
        }
    }
    Ok(Some(correct as f64 / items.len() as f64))
}

/// Vocabulary over the entity and abstract tokens of the given records.
pub fn build_vocab(records: &[EntityRecord], min_count: usize) -> Vocab {
    Vocab::build(
        records
            .iter()
            .flat_map(|r| [r.entity_tokens.as_slice(), r.abstract_tokens.as_slice()]),
        min_count,
    )
}

fn drop_tokens(ids: &[usize], rate: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    use rand::Rng;
    ids.iter()
        .map(|&id| {
            if rate > 0.0 && id != Vocab::CLS_ID && id != Vocab::SEP_ID && rng.random::<f64>() < rate {
                Vocab::UNK_ID
            } else {
                id
            }
        })
        .collect()
}

/// Trains with Adam on mini-batches of mean cross-entropy. `config.num_topics` is taken from the taxonomy.
pub fn train_classifier(split: &DatasetSplit, taxonomy: &Taxonomy, config: &ClassifierConfig) -> Result<(TopicClassifier, ClassifierReport)> {
    let mut config = config.clone();
    if config.num_topics != taxonomy.k {
        log::info!("num_topics set to the taxonomy size {} (was {})", taxonomy.k, config.num_topics);
        config.num_topics = taxonomy.k;
    }
    config.validate()?;
    let (train, excluded) = labeled(&split.train, taxonomy);
    if excluded > 0 {
        log::warn!("{excluded} training records have no topic in the taxonomy and were excluded");
    }
    let vocab = build_vocab(&split.train, config.min_token_count);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = TopicClassifier::new(config.clone(), vocab, taxonomy.topic_names(), &mut rng)?;

    let encoded: Vec<(Vec<usize>, usize)> = train
        .iter()
        .map(|(r, t)| model.encode_input(&r.entity_tokens, &r.abstract_tokens).map(|(ids, _)| (ids, *t)))
        .collect::<Result<_>>()?;
    let validation_examples = labeled(&split.validation, taxonomy).0.len();

    let mut adam = Adam::new(config.learning_rate, model.num_params());
    let mut grads = model.zeros_like();
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.zero();
            for &i in batch {
                let (ids, t) = &encoded[i];
                let ids = drop_tokens(ids, config.token_dropout, &mut rng);
                total += model.loss_and_grad(&ids, *t, Mode::Train(&mut rng), &mut grads);
            }
            grads.scale(1.0 / batch.len() as f64);
            adam.step(&mut model, &grads);
        }
        if !model.all_finite() {
            return Err(Error::Validation(format!("classifier parameters diverged in epoch {epoch}")));
        }
        let mean_loss = if encoded.is_empty() { 0.0 } else { total / encoded.len() as f64 };
        let validation_accuracy = accuracy(&model, &split.validation, taxonomy)?;
        log::info!("classifier epoch {epoch}: loss {mean_loss:.4}, validation accuracy {validation_accuracy:?}");
        epochs.push(EpochStats {
            epoch,
            mean_loss,
            validation_accuracy,
        });
    }
    Ok((
        model,
        ClassifierReport {
            train_examples: encoded.len(),
            validation_examples,
            excluded,
            epochs,
        },
    ))
}
