//! The `concept` command line: one verb per pipeline stage. Every verb reads the layered
//! [`PipelineConfig`], writes its artifacts atomically, and prints a JSON summary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::causal::{self, DiscreteScm};
use crate::classifier::{train_classifier, TopicClassifier};
use crate::config::PipelineConfig;
use crate::corpus::{self, build_input, DatasetSplit, EntityRecord, InputFormat, RawRecord, SplitManifest};
use crate::error::{Error, Result};
use crate::evaluation::{self, attention, BiasEntity, EntityPrediction, GoldEntry, GoldIndex, Language, SubConcepts};
use crate::extractor::{extract_concepts, train_extractor, EncoderBackend, Extraction, PointerModel, PromptSource};
use crate::io;
use crate::taxonomy::{induce_taxonomy, Taxonomy};

#[derive(Debug, Parser)]
#[command(name = "concept", version, about = "Topic-prompted concept extraction pipeline")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Configuration override as a dotted key, e.g. `extractor.threshold=0.3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Root seed [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory [default: out].
    #[arg(long, global = true)]
    pub outputs: Option<PathBuf>,
    /// Checkpoint directory [default: out/checkpoints].
    #[arg(long, global = true)]
    pub checkpoints: Option<PathBuf>,
    /// Taxonomy file [default: out/taxonomy.json].
    #[arg(long, global = true)]
    pub taxonomy: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus, quarantine bad lines, and write the dataset split.
    Ingest {
        /// Corpus file [default: corpus.jsonl].
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Corpus format [default: jsonl].
        #[arg(long, value_enum)]
        format: Option<InputFormat>,
        /// Number of test records [default: 500].
        #[arg(long)]
        test_size: Option<usize>,
        /// Keep one gold concept per record [default: false].
        #[arg(long)]
        single_gold: bool,
    },
    /// Cluster typical concepts into topics.
    BuildTaxonomy {
        /// Number of typical concepts [default: 100].
        #[arg(long)]
        top_n: Option<usize>,
        /// Overlap coefficient smoothing [default: 1].
        #[arg(long)]
        delta: Option<f64>,
        /// Smallest cluster count tried [default: 3].
        #[arg(long)]
        k_min: Option<usize>,
        /// Largest cluster count tried [default: 30].
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Train the topic classifier.
    TrainClassifier {
        /// Training epochs [default: 2].
        #[arg(long)]
        epochs: Option<usize>,
        /// Adam learning rate [default: 3e-5].
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Mini-batch size [default: 16].
        #[arg(long)]
        batch_size: Option<usize>,
        /// Dropout rate [default: 0.1].
        #[arg(long)]
        dropout: Option<f64>,
    },
    /// Train the span extractor.
    TrainExtractor {
        /// Train without the topic prompt.
        #[arg(long)]
        no_prompt: bool,
        /// Training epochs [default: 2].
        #[arg(long)]
        epochs: Option<usize>,
        /// Adam learning rate [default: 3e-5].
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Mini-batch size [default: 4].
        #[arg(long)]
        batch_size: Option<usize>,
        /// Dropout rate [default: 0.1].
        #[arg(long)]
        dropout: Option<f64>,
        /// Start-loss weight [default: 0.3].
        #[arg(long)]
        alpha: Option<f64>,
        /// Span confidence threshold [default: 0.12].
        #[arg(long)]
        threshold: Option<f64>,
        /// Longest span in tokens [default: 30].
        #[arg(long)]
        max_span_len: Option<usize>,
        /// Encoder backend [default: scratch_tiny].
        #[arg(long, value_enum)]
        encoder: Option<EncoderBackend>,
        /// Pick the threshold maximizing validation F1 [default: false].
        #[arg(long)]
        tune_threshold: bool,
    },
    /// Extract concepts with trained checkpoints.
    Extract {
        /// Use the model trained without the topic prompt.
        #[arg(long)]
        no_prompt: bool,
        /// Records to process, JSONL [default: the test split].
        #[arg(long)]
        input: Option<PathBuf>,
        /// Predictions file [default: <outputs>/predictions.jsonl].
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override the checkpoint's threshold.
        #[arg(long)]
        threshold: Option<f64>,
        /// Also write sequence-start attention weights, JSONL.
        #[arg(long)]
        attention_dump: Option<PathBuf>,
        /// Run the Hearst-pattern baseline instead of the models.
        #[arg(long)]
        hearst: bool,
        /// Pattern language for --hearst [default: en].
        #[arg(long, value_enum)]
        language: Option<Language>,
    },
    /// Score prediction files against oracle labels.
    Evaluate {
        /// Prediction files of one comparison group [default: <outputs>/predictions.jsonl].
        #[arg(long = "predictions")]
        predictions: Vec<PathBuf>,
        /// Oracle labels, JSONL of {entity, existing, new} [default: gold concepts of the records].
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Also write a CSV for manual review.
        #[arg(long)]
        review: bool,
    },
    /// Concept-bias rates for ordered concept pairs.
    BiasMap {
        /// Predictions file [default: <outputs>/predictions.jsonl].
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Pair `A:B`. Repeatable.
        #[arg(long = "pair")]
        pairs: Vec<String>,
        /// Explicit sub-concepts `B=c1|c2`. Repeatable.
        #[arg(long = "sub-concept")]
        sub_concepts: Vec<String>,
    },
    /// Compare frontdoor and backdoor estimates with the interventional truth.
    CausalCheck {
        /// SCM description, JSON.
        #[arg(long)]
        scm: Option<PathBuf>,
        /// Number of random SCMs to check.
        #[arg(long)]
        random: Option<usize>,
    },
}

/// Exit status for an error: 2 for a missing prerequisite, 3 for validation failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::MissingArtifact(_) => 2,
        Error::Validation(_)
        | Error::InvalidArgument(_)
        | Error::UnsupportedConditioning(_)
        | Error::NoGoldSpan
        | Error::AttentionUnavailable
        | Error::Checkpoint(_) => 3,
        Error::Io { .. } | Error::Json(_) => 1,
    }
}

pub fn error_report(e: &Error) -> Value {
    let mut v = json!({
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": exit_code(e),
    });
    if let Error::MissingArtifact(p) = e {
        v["artifact"] = json!(p.display().to_string());
    }
    v
}

fn push<T: std::fmt::Display>(out: &mut Vec<String>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        out.push(format!("{key}={v}"));
    }
}

fn quoted(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

fn enum_str<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("enum serializes")
}

/// Flags become dotted overrides so they pass through the same validation as the file.
fn overrides(cli: &Cli) -> Vec<String> {
    let mut o = cli.set.clone();
    push(&mut o, "seed", cli.seed);
    push(&mut o, "paths.outputs", cli.outputs.as_ref().map(|p| quoted(&p.to_string_lossy())));
    push(&mut o, "paths.checkpoints", cli.checkpoints.as_ref().map(|p| quoted(&p.to_string_lossy())));
    push(&mut o, "paths.taxonomy", cli.taxonomy.as_ref().map(|p| quoted(&p.to_string_lossy())));
    match &cli.command {
        Command::Ingest {
            corpus,
            format,
            test_size,
            single_gold,
        } => {
            push(&mut o, "paths.corpus", corpus.as_ref().map(|p| quoted(&p.to_string_lossy())));
            push(&mut o, "ingest.format", format.as_ref().map(enum_str));
            push(&mut o, "ingest.test_size", *test_size);
            if *single_gold {
                o.push("ingest.single_gold=true".into());
            }
        }
        Command::BuildTaxonomy { top_n, delta, k_min, k_max } => {
            push(&mut o, "taxonomy.top_n", *top_n);
            push(&mut o, "taxonomy.delta", delta.map(toml_float));
            push(&mut o, "taxonomy.k_min", *k_min);
            push(&mut o, "taxonomy.k_max", *k_max);
        }
        Command::TrainClassifier {
            epochs,
            learning_rate,
            batch_size,
            dropout,
        } => {
            push(&mut o, "classifier.epochs", *epochs);
            push(&mut o, "classifier.learning_rate", learning_rate.map(toml_float));
            push(&mut o, "classifier.batch_size", *batch_size);
            push(&mut o, "classifier.dropout", dropout.map(toml_float));
        }
        Command::TrainExtractor {
            epochs,
            learning_rate,
            batch_size,
            dropout,
            alpha,
            threshold,
            max_span_len,
            encoder,
            tune_threshold,
            ..
        } => {
            push(&mut o, "extractor.epochs", *epochs);
            push(&mut o, "extractor.learning_rate", learning_rate.map(toml_float));
            push(&mut o, "extractor.batch_size", *batch_size);
            push(&mut o, "extractor.dropout", dropout.map(toml_float));
            push(&mut o, "extractor.alpha", alpha.map(toml_float));
            push(&mut o, "extractor.threshold", threshold.map(toml_float));
            push(&mut o, "extractor.max_span_len", *max_span_len);
            push(&mut o, "extractor.encoder", encoder.as_ref().map(enum_str));
            if *tune_threshold {
                o.push("extractor.tune_threshold=true".into());
            }
        }
        _ => {}
    }
    o
}

/// TOML needs a decimal point or exponent to read a float.
fn toml_float(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains(['.', 'e', 'E']) || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

/// Runs one verb and returns its JSON summary.
pub fn run<I>(cli: &Cli, env: I) -> Result<Value>
where
    I: IntoIterator<Item = (String, String)>,
{
    let config = PipelineConfig::resolve(cli.config.as_deref(), env, &overrides(cli))?;
    match &cli.command {
        Command::Ingest { .. } => ingest(&config),
        Command::BuildTaxonomy { .. } => build_taxonomy(&config),
        Command::TrainClassifier { .. } => train_classifier_cmd(&config),
        Command::TrainExtractor { no_prompt, .. } => train_extractor_cmd(&config, !no_prompt),
        Command::Extract {
            no_prompt,
            input,
            output,
            threshold,
            attention_dump,
            hearst,
            language,
        } => {
            let opts = ExtractOptions {
                use_prompt: !no_prompt,
                input: input.as_deref(),
                output: output.as_deref(),
                threshold: *threshold,
                attention_dump: attention_dump.as_deref(),
                hearst: *hearst,
                language: language.unwrap_or(config.evaluation.language),
            };
            extract(&config, &opts)
        }
        Command::Evaluate { predictions, gold, review } => evaluate(&config, predictions, gold.as_deref(), *review),
        Command::BiasMap {
            predictions,
            pairs,
            sub_concepts,
        } => bias_map(&config, predictions.as_deref(), pairs, sub_concepts),
        Command::CausalCheck { scm, random } => causal_check(&config, scm.as_deref(), *random),
    }
}

fn load_records(path: &Path) -> Result<Vec<EntityRecord>> {
    let raws: Vec<RawRecord> = io::read_jsonl(path)?;
    raws.into_iter()
        .enumerate()
        .map(|(i, r)| EntityRecord::from_raw(r).map_err(|m| Error::Validation(format!("{} line {}: {m}", path.display(), i + 1))))
        .collect()
}

fn load_split(config: &PipelineConfig) -> Result<(Vec<EntityRecord>, DatasetSplit)> {
    let records = load_records(&config.records_path())?;
    let manifest: SplitManifest = io::read_json(&config.split_path())?;
    let split = DatasetSplit::from_manifest(&manifest, &records)?;
    Ok((records, split))
}

fn load_taxonomy(config: &PipelineConfig) -> Result<Taxonomy> {
    io::read_json(&config.paths.taxonomy)
}

fn ingest(config: &PipelineConfig) -> Result<Value> {
    let mut outcome = corpus::ingest(&config.paths.corpus, config.ingest.format)?;
    if outcome.records.is_empty() {
        return Err(Error::Validation(format!("no valid records in {}", config.paths.corpus.display())));
    }
    if config.ingest.single_gold {
        corpus::apply_single_gold(&mut outcome.records, config.component_seed("single-gold"));
    }
    let split = corpus::make_splits(&outcome.records, config.ingest.test_size, config.split_seed())?;
    io::write_atomic(&config.records_path(), &corpus::serialize_records(&outcome.records)?)?;
    io::write_jsonl(&config.quarantine_path(), &outcome.quarantined)?;
    io::write_json(&config.split_path(), &split.manifest())?;
    Ok(json!({
        "records": outcome.records.len(),
        "quarantined": outcome.quarantined.len(),
        "malformed": outcome.malformed_count(),
        "train": split.train.len(),
        "validation": split.validation.len(),
        "test": split.test.len(),
    }))
}

fn build_taxonomy(config: &PipelineConfig) -> Result<Value> {
    let records = load_records(&config.records_path())?;
    let induced = induce_taxonomy(&records, &config.taxonomy_params()?, &config.label_map()?)?;
    for w in &induced.warnings {
        log::warn!("{w}");
    }
    io::write_json(&config.paths.taxonomy, &induced.taxonomy)?;
    Ok(json!({
        "k": induced.taxonomy.k,
        "coverage": induced.coverage,
        "topics": induced.taxonomy.topic_names(),
        "warnings": induced.warnings,
    }))
}

fn train_classifier_cmd(config: &PipelineConfig) -> Result<Value> {
    let (_, split) = load_split(config)?;
    let taxonomy = load_taxonomy(config)?;
    let (model, report) = train_classifier(&split, &taxonomy, &config.classifier_config())?;
    model.save(&config.classifier_path())?;
    io::write_json(&config.paths.outputs.join("classifier_report.json"), &report)?;
    Ok(serde_json::to_value(&report)?)
}

fn train_extractor_cmd(config: &PipelineConfig, use_prompt: bool) -> Result<Value> {
    let (_, split) = load_split(config)?;
    let taxonomy = load_taxonomy(config)?;
    let clf_path = config.classifier_path();
    let classifier = if use_prompt && clf_path.exists() {
        Some(TopicClassifier::load(&clf_path)?)
    } else {
        None
    };
    let (model, report) = train_extractor(&split, &taxonomy, classifier.as_ref(), &config.extractor_config(use_prompt))?;
    model.save(&config.extractor_path(use_prompt))?;
    let name = if use_prompt { "extractor_report.json" } else { "extractor_no_prompt_report.json" };
    io::write_json(&config.paths.outputs.join(name), &report)?;
    Ok(serde_json::to_value(&report)?)
}

struct ExtractOptions<'a> {
    use_prompt: bool,
    input: Option<&'a Path>,
    output: Option<&'a Path>,
    threshold: Option<f64>,
    attention_dump: Option<&'a Path>,
    hearst: bool,
    language: Language,
}

fn extract(config: &PipelineConfig, opts: &ExtractOptions<'_>) -> Result<Value> {
    let records = match opts.input {
        Some(p) => load_records(p)?,
        None => load_split(config)?.1.test,
    };
    if opts.hearst {
        let preds: Vec<EntityPrediction> = records
            .iter()
            .map(|r| EntityPrediction {
                entity: r.entity.clone(),
                spans: evaluation::hearst_extract(&r.abstract_text, opts.language),
            })
            .collect();
        let out = opts
            .output
            .map(Path::to_path_buf)
            .unwrap_or_else(|| config.paths.outputs.join("predictions_hearst.jsonl"));
        io::write_jsonl(&out, &preds)?;
        return Ok(json!({ "entities": preds.len(), "spans": preds.iter().map(|p| p.spans.len()).sum::<usize>(), "output": out }));
    }

    let model = PointerModel::load(&config.extractor_path(opts.use_prompt))?;
    let classifier = if opts.use_prompt {
        Some(TopicClassifier::load(&config.classifier_path())?)
    } else {
        None
    };
    let prompt = match &classifier {
        Some(c) => PromptSource::Classifier(c),
        None => PromptSource::None,
    };
    let threshold = opts.threshold.unwrap_or(model.config.threshold);
    let mut extractions: Vec<Extraction> = Vec::with_capacity(records.len());
    let mut dump = Vec::new();
    for r in &records {
        let ex = extract_concepts(r, &model, prompt, threshold)?;
        if opts.attention_dump.is_some() {
            let input = model.prompted_input(ex.topic.as_deref().unwrap_or(""), &build_input(r)?)?;
            let weights = evaluation::cls_attention_distribution(&model, &input)?;
            for tw in attention::attention_records(&input, &weights) {
                dump.push(json!({ "entity": r.entity, "token": tw.token, "weight": tw.weight }));
            }
        }
        extractions.push(ex);
    }
    let out = opts
        .output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.predictions_path(opts.use_prompt));
    io::write_jsonl(&out, &extractions)?;
    if let Some(p) = opts.attention_dump {
        io::write_jsonl(p, &dump)?;
    }
    Ok(json!({
        "entities": extractions.len(),
        "spans": extractions.iter().map(|e| e.spans.len()).sum::<usize>(),
        "threshold": threshold,
        "output": out,
    }))
}

fn read_predictions(path: &Path) -> Result<Vec<EntityPrediction>> {
    evaluation::parse_predictions(&io::read_to_string(path)?)
}

fn run_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into())
}

fn evaluate(config: &PipelineConfig, predictions: &[PathBuf], gold: Option<&Path>, review: bool) -> Result<Value> {
    let files: Vec<PathBuf> = if !predictions.is_empty() {
        predictions.to_vec()
    } else if !config.evaluation.comparison_group.is_empty() {
        config.evaluation.comparison_group.clone()
    } else {
        vec![config.predictions_path(true)]
    };
    let entries: Vec<GoldEntry> = match gold {
        Some(p) => io::read_jsonl(p)?,
        None => load_records(&config.records_path())?
            .into_iter()
            .map(|r| GoldEntry {
                entity: r.entity,
                existing: r.gold_concepts,
                new: Vec::new(),
            })
            .collect(),
    };
    let index = GoldIndex::from_entries(&entries);
    let mut runs = Vec::with_capacity(files.len());
    for f in &files {
        runs.push((run_name(f), read_predictions(f)?));
    }
    let scored = evaluation::score_group(&runs, &index);
    let mut summary = BTreeMap::new();
    for s in &scored {
        io::write_json(&config.paths.outputs.join(format!("metrics_{}.json", s.run_name)), s)?;
        summary.insert(s.run_name.clone(), serde_json::to_value(&s.aggregates)?);
    }
    if review {
        io::write_atomic(&config.paths.outputs.join("review.csv"), &evaluation::review_csv(&scored)?)?;
    }
    Ok(serde_json::to_value(summary)?)
}

fn parse_pair(s: &str) -> Result<(String, String)> {
    match s.split_once(':') {
        Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() => Ok((a.trim().to_string(), b.trim().to_string())),
        _ => Err(Error::InvalidArgument(format!("pair {s:?} is not A:B"))),
    }
}

fn bias_map(config: &PipelineConfig, predictions: Option<&Path>, pairs: &[String], sub: &[String]) -> Result<Value> {
    let mut pair_list: Vec<(String, String)> = pairs.iter().map(|p| parse_pair(p)).collect::<Result<_>>()?;
    if pair_list.is_empty() {
        pair_list = config.evaluation.bias_pairs.iter().map(|[a, b]| (a.clone(), b.clone())).collect();
    }
    if pair_list.is_empty() {
        return Err(Error::InvalidArgument("no concept pairs given".into()));
    }
    let mut explicit = config.evaluation.sub_concepts.clone();
    for s in sub {
        let (b, list) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("sub-concept {s:?} is not B=c1|c2")))?;
        explicit.insert(b.trim().to_string(), list.split('|').map(|c| c.trim().to_string()).collect());
    }
    let path = predictions.map(Path::to_path_buf).unwrap_or_else(|| config.predictions_path(true));
    let preds = read_predictions(&path)?;
    let records = load_records(&config.records_path())?;
    let gold: BTreeMap<&str, &Vec<String>> = records.iter().map(|r| (r.entity.as_str(), &r.gold_concepts)).collect();
    let mut entities = Vec::new();
    for p in preds {
        match gold.get(p.entity.as_str()) {
            Some(g) => entities.push(BiasEntity {
                entity: p.entity,
                gold: (*g).clone(),
                predicted: p.spans,
            }),
            None => log::warn!("predicted entity {:?} not among the records", p.entity),
        }
    }
    let needs_taxonomy = pair_list.iter().any(|(_, b)| !explicit.contains_key(b));
    let taxonomy = if needs_taxonomy { Some(load_taxonomy(config)?) } else { None };
    let mut reports = Vec::new();
    for (a, b) in &pair_list {
        let relation = match (explicit.get(b), &taxonomy) {
            (Some(list), _) => SubConcepts::Explicit(list.clone()),
            (None, Some(t)) => SubConcepts::Taxonomy(t),
            (None, None) => unreachable!("taxonomy loaded when needed"),
        };
        reports.extend(evaluation::bias_map(&entities, &[(a.clone(), b.clone())], &relation)?);
    }
    io::write_atomic(&config.paths.outputs.join("bias_map.csv"), &evaluation::bias_map_csv(&reports)?)?;
    io::write_json(&config.paths.outputs.join("bias_map.json"), &reports)?;
    Ok(serde_json::to_value(&reports)?)
}

const CAUSAL_TOL: f64 = 1e-9;

fn fmt_row(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ")
}

fn causal_check(config: &PipelineConfig, scm: Option<&Path>, random: Option<usize>) -> Result<Value> {
    if scm.is_none() && random.is_none() {
        return Err(Error::InvalidArgument("give --scm FILE and/or --random N".into()));
    }
    let mut summary = json!({});
    let mut worst: f64 = 0.0;
    if let Some(p) = scm {
        let model = DiscreteScm::from_json(&io::read_to_string(p)?)?;
        let mut rows = Vec::new();
        for x in 0..model.domains.x {
            let c = causal::compare(&model, x)?;
            println!("x={x} truth      {}", fmt_row(&c.truth));
            println!("x={x} frontdoor  {}", fmt_row(&c.frontdoor));
            println!("x={x} backdoor   {}", fmt_row(&c.backdoor));
            println!("x={x} P(S|X=x)   {}", fmt_row(&c.conditional));
            worst = worst.max(c.frontdoor_deviation).max(c.backdoor_deviation);
            rows.push(c);
        }
        summary["scm"] = serde_json::to_value(&rows)?;
    }
    if let Some(n) = random {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let s = causal::random_check(n, &mut rng)?;
        println!("random SCMs: {}  comparisons: {}", s.scms, s.comparisons);
        println!("max frontdoor deviation: {:.3e}", s.max_frontdoor_deviation);
        println!("max backdoor deviation:  {:.3e}", s.max_backdoor_deviation);
        println!("max confounding gap:     {:.3e}", s.max_conditional_gap);
        worst = worst.max(s.max_frontdoor_deviation).max(s.max_backdoor_deviation);
        summary["random"] = serde_json::to_value(&s)?;
    }
    summary["max_deviation"] = json!(worst);
    io::write_json(&config.paths.outputs.join("causal_report.json"), &summary)?;
    if worst >= CAUSAL_TOL {
        return Err(Error::Validation(format!("estimate deviates from the truth by {worst:e}")));
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_become_overrides() {
        let cli = Cli::parse_from(["concept", "--seed", "7", "train-extractor", "--no-prompt", "--alpha", "1", "--tune-threshold"]);
        let o = overrides(&cli);
        assert!(o.contains(&"seed=7".to_string()));
        assert!(o.contains(&"extractor.alpha=1.0".to_string()));
        assert!(o.contains(&"extractor.tune_threshold=true".to_string()));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::MissingArtifact("x".into())), 2);
        assert_eq!(exit_code(&Error::Validation("x".into())), 3);
        let r = error_report(&Error::MissingArtifact("a/b.ckpt".into()));
        assert_eq!(r["artifact"], "a/b.ckpt");
        assert_eq!(r["error"], "missing_artifact");
    }

    #[test]
    fn pairs_parse() {
        assert_eq!(parse_pair("writer : novel").unwrap(), ("writer".into(), "novel".into()));
        assert!(parse_pair("writer").is_err());
    }
}
