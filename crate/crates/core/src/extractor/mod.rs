//! Prompt-augmented span extractor with a pointer-network head.
//!
//! Input layout is `[CLS] P [SEP] X [SEP]` where `P` is the tokenized topic name and `X`
//! is the entity followed by its abstract. The head maps the final hidden states `H` to
//! start and end distributions over positions, `softmax(H W + B)` column by column.

pub mod decode;
pub mod loss;

use std::ops::Range;
use std::path::{Path, PathBuf};

use ndarray::{s, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint;
use crate::classifier::TopicClassifier;
use crate::corpus::{build_input, DatasetSplit, EntityRecord, InputText};
use crate::error::{Error, Result};
use crate::nn::encoder::{Encoder, EncoderConfig, ForwardCache, Mode};
use crate::nn::{normal_matrix, slice2, slice2_mut, softmax, Adam, Parameters};
use crate::taxonomy::Taxonomy;
use crate::tokenize::{find_all_subsequences, normalize, tokenize, Token, Vocab, CLS, SEP};
pub use decode::{confidence, decode_spans, SpanPrediction};
pub use loss::training_loss;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum EncoderBackend {
    /// External pretrained bidirectional encoder (not bundled).
    PretrainedMaskedLm,
    /// Self-contained transformer trained from random initialization.
    ScratchTiny,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractorConfig {
    pub alpha: f64,
    pub threshold: f64,
    pub max_span_len: usize,
    pub encoder: EncoderBackend,
    pub pretrained_path: Option<PathBuf>,
    /// `false` trains and runs the variant without the topic prompt.
    pub use_prompt: bool,
    /// Replace `threshold` by the value maximizing validation span F1 after training.
    pub tune_threshold: bool,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub dropout: f64,
    pub seed: u64,
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub embedding_dim: usize,
    pub num_heads: usize,
    pub ffn_dim: usize,
    pub max_len: usize,
    pub min_token_count: usize,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig {
            alpha: 0.3,
            threshold: 0.12,
            max_span_len: 30,
            encoder: EncoderBackend::ScratchTiny,
            pretrained_path: None,
            use_prompt: true,
            tune_threshold: false,
            learning_rate: 3e-5,
            batch_size: 4,
            epochs: 2,
            dropout: 0.1,
            seed: 0,
            num_layers: 2,
            hidden_dim: 128,
            embedding_dim: 128,
            num_heads: 4,
            ffn_dim: 256,
            max_len: 128,
            min_token_count: 1,
        }
    }
}

impl ExtractorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("extractor config: {m}")));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.threshold >= 0.0) {
            return bad("threshold must be non-negative");
        }
        if self.max_span_len == 0 {
            return bad("max_span_len must be at least 1");
        }
        if self.num_heads == 0 || self.hidden_dim % self.num_heads != 0 {
            return bad("hidden_dim must be divisible by num_heads");
        }
        if self.max_len < 4 {
            return bad("max_len must be at least 4");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return bad("batch_size and learning_rate must be positive");
        }
        match self.encoder {
            EncoderBackend::ScratchTiny => Ok(()),
            EncoderBackend::PretrainedMaskedLm => Err(Error::InvalidArgument(format!(
                "encoder backend pretrained_masked_lm is not available in this build{}; use scratch_tiny",
                self.pretrained_path
                    .as_ref()
                    .map(|p| format!(" (requested checkpoint {})", p.display()))
                    .unwrap_or_default()
            ))),
        }
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

#[derive(Debug, Clone, PartialEq)]
pub struct PromptedInput {
    pub tokens: Vec<Token>,
    pub prompt_span: Range<usize>,
    pub entity_span: Range<usize>,
    pub abstract_span: Range<usize>,
    /// Abstract tokens dropped from the tail to fit the window.
    pub truncated: usize,
}

impl PromptedInput {
    pub fn total_len(&self) -> usize {
        self.tokens.len()
    }

    pub fn has_prompt(&self) -> bool {
        !self.prompt_span.is_empty()
    }
}

/// Builds `[CLS] P [SEP] E T [SEP]`, or `[CLS] E T [SEP]` when `topic` is empty. The abstract
/// tail is dropped when the sequence would exceed `max_len`; prompt and entity are never cut.
pub fn assemble_prompted_input(topic: &str, input: &InputText, max_len: usize) -> Result<PromptedInput> {
    let prompt = tokenize(topic);
    let sentinel = |t: &str| Token::new(t, true);
    let entity = input.entity_tokens();
    let abs = input.abstract_tokens();
    let prompt_overhead = if prompt.is_empty() { 0 } else { prompt.len() + 1 };
    let fixed = 2 + prompt_overhead + entity.len();
    if fixed >= max_len {
        return Err(Error::Validation(format!(
            "prompt and entity need {fixed} tokens, leaving no room for the abstract in a {max_len}-token window"
        )));
    }
    let keep = abs.len().min(max_len - fixed);
    let truncated = abs.len() - keep;
    if truncated > 0 {
        log::warn!("abstract truncated by {truncated} tokens to fit the {max_len}-token window");
    }

    let mut tokens = Vec::with_capacity(fixed + keep);
    tokens.push(Token::new(CLS, false));
    let prompt_span = if prompt.is_empty() {
        1..1
    } else {
        tokens.extend(prompt.iter().cloned());
        tokens.push(sentinel(SEP));
        1..1 + prompt.len()
    };
    let e0 = tokens.len();
    tokens.extend(entity.iter().cloned());
    let a0 = tokens.len();
    tokens.extend(abs[..keep].iter().cloned());
    let a1 = tokens.len();
    tokens.push(sentinel(SEP));
    Ok(PromptedInput {
        tokens,
        prompt_span,
        entity_span: e0..a0,
        abstract_span: a0..a1,
        truncated,
    })
}

/// Start and end indicator vectors over the full sequence, marking every occurrence of
/// every gold concept inside the abstract region.
pub fn gold_targets(input: &PromptedInput, concepts: &[String]) -> (Vec<f64>, Vec<f64>) {
    let n = input.total_len();
    let mut ys = vec![0.0; n];
    let mut ye = vec![0.0; n];
    let abs = &input.tokens[input.abstract_span.clone()];
    for c in concepts {
        let ct = tokenize(c);
        for off in find_all_subsequences(abs, &ct) {
            let start = input.abstract_span.start + off;
            ys[start] = 1.0;
            ye[start + ct.len() - 1] = 1.0;
        }
    }
    (ys, ye)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointerOutput {
    pub p_start: Vec<f64>,
    pub p_end: Vec<f64>,
}

pub struct PointerCache {
    pub encoder: ForwardCache,
    hidden: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointerModel {
    pub config: ExtractorConfig,
    pub vocab: Vocab,
    pub encoder: Encoder,
    /// Projection `W`, (hidden × 2).
    pub w: Array2<f64>,
    /// Per-position bias `B`, (max_len × 2); only the first `len` rows are live.
    pub b: Array2<f64>,
}

impl PointerModel {
    pub fn new<R: Rng>(config: ExtractorConfig, vocab: Vocab, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let encoder = Encoder::new(config.encoder_config(vocab.len()), rng);
        let h = config.hidden_dim;
        Ok(PointerModel {
            w: normal_matrix(h, 2, (1.0 / h as f64).sqrt(), rng),
            b: Array2::zeros((config.max_len, 2)),
            config,
            vocab,
            encoder,
        })
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.zero();
        z
    }

    pub fn prompted_input(&self, topic: &str, input: &InputText) -> Result<PromptedInput> {
        let topic = if self.config.use_prompt { topic } else { "" };
        assemble_prompted_input(topic, input, self.config.max_len)
    }

    pub fn forward(&self, ids: &[usize], mode: Mode<'_>) -> (PointerOutput, PointerCache) {
        let (hidden, enc_cache) = self.encoder.forward(ids, mode);
        let logits = hidden.dot(&self.w) + &self.b.slice(s![..ids.len(), ..]);
        let p_start = softmax(&logits.column(0).to_vec());
        let p_end = softmax(&logits.column(1).to_vec());
        (
            PointerOutput { p_start, p_end },
            PointerCache {
                encoder: enc_cache,
                hidden,
            },
        )
    }

    /// Start/end distributions for an assembled input, in inference mode.
    pub fn forward_pointer(&self, input: &PromptedInput) -> PointerOutput {
        self.forward(&self.vocab.ids(&input.tokens), Mode::Eval).0
    }

    pub fn encoder_cache(&self, input: &PromptedInput) -> ForwardCache {
        self.forward(&self.vocab.ids(&input.tokens), Mode::Eval).1.encoder
    }

    /// Loss of one example with gradients added into `grads`.
    pub fn loss_and_grad(&self, ids: &[usize], y_start: &[f64], y_end: &[f64], mode: Mode<'_>, grads: &mut PointerModel) -> Result<f64> {
        let ts = loss::normalize_target(y_start)?;
        let te = loss::normalize_target(y_end)?;
        let (out, cache) = self.forward(ids, mode);
        let alpha = self.config.alpha;
        let value = alpha * loss::cross_entropy(&out.p_start, &ts) + (1.0 - alpha) * loss::cross_entropy(&out.p_end, &te);
        let len = ids.len();
        let mut d_logits = Array2::zeros((len, 2));
        for i in 0..len {
            d_logits[(i, 0)] = alpha * (out.p_start[i] - ts[i]);
            d_logits[(i, 1)] = (1.0 - alpha) * (out.p_end[i] - te[i]);
        }
        grads.w += &cache.hidden.t().dot(&d_logits);
        {
            let mut live = grads.b.slice_mut(s![..len, ..]);
            live += &d_logits;
        }
        let d_hidden = d_logits.dot(&self.w.t());
        self.encoder.backward(&cache.encoder, &d_hidden, &mut grads.encoder);
        Ok(value)
    }

    pub fn loss(&self, ids: &[usize], y_start: &[f64], y_end: &[f64]) -> Result<f64> {
        let (out, _) = self.forward(ids, Mode::Eval);
        training_loss(&out.p_start, &out.p_end, y_start, y_end, self.config.alpha)
    }

    /// Decodes ranked spans for one assembled input.
    pub fn predict(&self, input: &PromptedInput, threshold: f64) -> Vec<SpanPrediction> {
        let out = self.forward_pointer(input);
        decode_spans(
            &input.tokens,
            &out.p_start,
            &out.p_end,
            input.abstract_span.clone(),
            threshold,
            self.config.max_span_len,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header = ExtractorHeader {
            kind: EXTRACTOR_KIND.into(),
            config: self.config.clone(),
            vocab_hash: self.vocab.hash(),
            vocab: self.vocab.clone(),
        };
        checkpoint::save(path, &header, &self.to_flat())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (header, params): (ExtractorHeader, Vec<f64>) = checkpoint::load(path)?;
        if header.kind != EXTRACTOR_KIND {
            return Err(Error::Checkpoint(format!("expected a {EXTRACTOR_KIND} checkpoint, found {}", header.kind)));
        }
        if header.vocab.hash() != header.vocab_hash {
            return Err(Error::Checkpoint("vocabulary hash mismatch".into()));
        }
        let mut model = PointerModel::new(header.config, header.vocab, &mut ChaCha8Rng::seed_from_u64(0))?;
        model.load_flat(&params)?;
        Ok(model)
    }
}

const EXTRACTOR_KIND: &str = "pointer_extractor";

#[derive(Serialize, Deserialize)]
struct ExtractorHeader {
    kind: String,
    config: ExtractorConfig,
    vocab_hash: String,
    vocab: Vocab,
}

impl Parameters for PointerModel {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64])) {
        self.encoder.visit(f);
        f("pointer.w", slice2(&self.w));
        f("pointer.b", slice2(&self.b));
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.encoder.visit_mut(f);
        f("pointer.w", slice2_mut(&mut self.w));
        f("pointer.b", slice2_mut(&mut self.b));
    }
}

/// Where the prompt of each record comes from.
#[derive(Clone, Copy)]
pub enum PromptSource<'a> {
    /// Topic predicted by the classifier.
    Classifier(&'a TopicClassifier),
    /// Topic of the record's gold concepts in the taxonomy.
    Gold(&'a Taxonomy),
    /// No prompt.
    None,
}

impl PromptSource<'_> {
    pub fn topic_for(&self, record: &EntityRecord) -> Result<Option<String>> {
        match self {
            PromptSource::Classifier(c) => Ok(Some(c.classify_record(record)?.topic_name)),
            PromptSource::Gold(t) => Ok(t.topic_for_record(record).map(|i| t.clusters[i].topic.clone())),
            PromptSource::None => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub entity: String,
    pub topic: Option<String>,
    pub spans: Vec<SpanPrediction>,
}

/// Classify (or look up) the topic, assemble the prompted input, run the pointer head and
/// decode. A model trained without prompts ignores the prompt source.
pub fn extract_concepts(record: &EntityRecord, model: &PointerModel, prompt: PromptSource<'_>, threshold: f64) -> Result<Extraction> {
    let topic = if model.config.use_prompt { prompt.topic_for(record)? } else { None };
    if model.config.use_prompt && topic.is_none() {
        log::warn!("no topic for {:?}; running without a prompt", record.entity);
    }
    let input = build_input(record)?;
    let prompted = assemble_prompted_input(topic.as_deref().unwrap_or(""), &input, model.config.max_len)?;
    Ok(Extraction {
        entity: record.entity.clone(),
        topic,
        spans: model.predict(&prompted, threshold),
    })
}

/// Micro-averaged span-level precision, recall and F1 against gold concepts, comparing
/// normalized text.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub predicted: usize,
    pub gold: usize,
    pub correct: usize,
}

pub fn span_score<'a, I>(pairs: I) -> SpanScore
where
    I: IntoIterator<Item = (&'a [String], Vec<String>)>,
{
    let (mut predicted, mut gold, mut correct) = (0, 0, 0);
    for (gold_concepts, preds) in pairs {
        let g: std::collections::HashSet<String> = gold_concepts.iter().map(|c| normalize(c)).collect();
        let p: std::collections::HashSet<String> = preds.iter().map(|c| normalize(c)).collect();
        predicted += p.len();
        gold += g.len();
        correct += p.intersection(&g).count();
    }
    let precision = if predicted == 0 { 0.0 } else { correct as f64 / predicted as f64 };
    let recall = if gold == 0 { 0.0 } else { correct as f64 / gold as f64 };
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    SpanScore {
        precision,
        recall,
        f1,
        predicted,
        gold,
        correct,
    }
}

struct Prepared {
    gold: Vec<String>,
    tokens: Vec<Token>,
    abstract_span: Range<usize>,
    output: PointerOutput,
}

fn prepare(model: &PointerModel, records: &[EntityRecord], prompt: PromptSource<'_>) -> Result<Vec<Prepared>> {
    records
        .iter()
        .map(|r| {
            let topic = if model.config.use_prompt { prompt.topic_for(r)? } else { None };
            let input = model.prompted_input(topic.as_deref().unwrap_or(""), &build_input(r)?)?;
            Ok(Prepared {
                gold: r.gold_concepts.clone(),
                output: model.forward_pointer(&input),
                abstract_span: input.abstract_span.clone(),
                tokens: input.tokens,
            })
        })
        .collect()
}

fn score_prepared(model: &PointerModel, prepared: &[Prepared], threshold: f64) -> SpanScore {
    span_score(prepared.iter().map(|p| {
        let spans = decode_spans(
            &p.tokens,
            &p.output.p_start,
            &p.output.p_end,
            p.abstract_span.clone(),
            threshold,
            model.config.max_span_len,
        );
        (p.gold.as_slice(), spans.into_iter().map(|s| s.text).collect())
    }))
}

pub fn evaluate_spans(model: &PointerModel, records: &[EntityRecord], prompt: PromptSource<'_>, threshold: f64) -> Result<SpanScore> {
    Ok(score_prepared(model, &prepare(model, records, prompt)?, threshold))
}

/// Threshold grid 0.02, 0.04, …, 1.98.
pub fn default_threshold_grid() -> Vec<f64> {
    (1..100).map(|i| i as f64 * 0.02).collect()
}

/// Picks the threshold maximizing span F1 on `records`. When several consecutive grid
/// points tie, the middle of the first best run is returned.
pub fn tune_threshold(model: &PointerModel, records: &[EntityRecord], prompt: PromptSource<'_>, grid: &[f64]) -> Result<(f64, SpanScore)> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty threshold grid".into()));
    }
    let prepared = prepare(model, records, prompt)?;
    let scores: Vec<SpanScore> = grid.iter().map(|&t| score_prepared(model, &prepared, t)).collect();
    let best = scores.iter().map(|s| s.f1).fold(f64::NEG_INFINITY, f64::max);
    let first = scores.iter().position(|s| s.f1 == best).expect("grid is non-empty");
    let run = scores[first..].iter().take_while(|s| s.f1 == best).count();
    let pick = first + (run - 1) / 2;
    Ok((grid[pick], scores[pick]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorEpoch {
    pub epoch: usize,
    pub mean_loss: f64,
    pub validation_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorReport {
    pub train_examples: usize,
    /// Records skipped because no topic could be assigned for the prompt.
    pub excluded_no_topic: usize,
    /// Records skipped because no gold span survived in the (possibly truncated) abstract.
    pub excluded_no_span: usize,
    pub epochs: Vec<ExtractorEpoch>,
    pub threshold: f64,
    pub validation: Option<SpanScore>,
}

/// Vocabulary over record tokens plus the taxonomy topic names, so every prompt is in-vocabulary.
pub fn build_vocab(records: &[EntityRecord], taxonomy: &Taxonomy, min_count: usize) -> Vocab {
    let topic_tokens: Vec<Vec<Token>> = taxonomy.topic_names().iter().map(|t| tokenize(t)).collect();
    let mut seqs: Vec<&[Token]> = records
        .iter()
        .flat_map(|r| [r.entity_tokens.as_slice(), r.abstract_tokens.as_slice()])
        .collect();
    let repeated: Vec<&[Token]> = std::iter::repeat_n(topic_tokens.iter().map(Vec::as_slice), min_count.max(1))
        .flatten()
        .collect();
    seqs.extend(repeated);
    Vocab::build(seqs, min_count)
}

/// Trains the pointer model on gold-topic prompts with Adam. When a classifier is given it
/// supplies the validation prompts; otherwise the gold topics do.
pub fn train_extractor(
    split: &DatasetSplit,
    taxonomy: &Taxonomy,
    classifier: Option<&TopicClassifier>,
    config: &ExtractorConfig,
) -> Result<(PointerModel, ExtractorReport)> {
    config.validate()?;
    let vocab = build_vocab(&split.train, taxonomy, config.min_token_count);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = PointerModel::new(config.clone(), vocab, &mut rng)?;

    let gold_prompt = if config.use_prompt { PromptSource::Gold(taxonomy) } else { PromptSource::None };
    let mut examples = Vec::new();
    let (mut excluded_no_topic, mut excluded_no_span) = (0, 0);
    for r in &split.train {
        let topic = gold_prompt.topic_for(r)?;
        if config.use_prompt && topic.is_none() {
            excluded_no_topic += 1;
            continue;
        }
        let input = model.prompted_input(topic.as_deref().unwrap_or(""), &build_input(r)?)?;
        let (ys, ye) = gold_targets(&input, &r.gold_concepts);
        if !ys.iter().any(|v| *v > 0.0) {
            excluded_no_span += 1;
            continue;
        }
        examples.push((model.vocab.ids(&input.tokens), ys, ye));
    }
    if excluded_no_topic + excluded_no_span > 0 {
        log::warn!("extractor training skipped {excluded_no_topic} records without topic and {excluded_no_span} without a gold span");
    }

    let val_prompt = match (config.use_prompt, classifier) {
        (false, _) => PromptSource::None,
        (true, Some(c)) => PromptSource::Classifier(c),
        (true, None) => PromptSource::Gold(taxonomy),
    };
    let mut adam = Adam::new(config.learning_rate, model.num_params());
    let mut grads = model.zeros_like();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.zero();
            for &i in batch {
                let (ids, ys, ye) = &examples[i];
                total += model.loss_and_grad(ids, ys, ye, Mode::Train(&mut rng), &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            adam.step(&mut model, &grads);
        }
        if !model.all_finite() {
            return Err(Error::Validation(format!("extractor parameters diverged in epoch {epoch}")));
        }
        let mean_loss = if examples.is_empty() { 0.0 } else { total / examples.len() as f64 };
        let validation_f1 = if split.validation.is_empty() {
            None
        } else {
            Some(evaluate_spans(&model, &split.validation, val_prompt, model.config.threshold)?.f1)
        };
        log::info!("extractor epoch {epoch}: loss {mean_loss:.4}, validation F1 {validation_f1:?}");
        epochs.push(ExtractorEpoch {
            epoch,
            mean_loss,
            validation_f1,
        });
    }

    let mut validation = None;
    if !split.validation.is_empty() {
        if config.tune_threshold {
            let (t, score) = tune_threshold(&model, &split.validation, val_prompt, &default_threshold_grid())?;
            log::info!("tuned threshold {t:.2} (validation F1 {:.4})", score.f1);
            model.config.threshold = t;
            validation = Some(score);
        } else {
            validation = Some(evaluate_spans(&model, &split.validation, val_prompt, model.config.threshold)?);
        }
    }
    let threshold = model.config.threshold;
    Ok((
        model,
        ExtractorReport {
            train_examples: examples.len(),
            excluded_no_topic,
            excluded_no_span,
            epochs,
            threshold,
            validation,
        },
    ))
}

/// Column-wise softmax of `H W + B` computed directly, for cross-checking the model.
pub fn pointer_head(hidden: &Array2<f64>, w: &Array2<f64>, b: &Array2<f64>) -> PointerOutput {
    let logits = hidden.dot(w) + &b.slice(s![..hidden.len_of(Axis(0)), ..]);
    PointerOutput {
        p_start: softmax(&logits.column(0).to_vec()),
        p_end: softmax(&logits.column(1).to_vec()),
    }
}
