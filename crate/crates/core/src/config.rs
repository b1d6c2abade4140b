//! Pipeline configuration: built-in defaults, then a TOML file, then `CONCEPT_*`
//! environment variables, then command-line overrides.
//!
//! Environment keys use `__` between a section and a field, e.g.
//! `CONCEPT_EXTRACTOR__THRESHOLD=0.3`. Command-line overrides use dotted paths, e.g.
//! `--set extractor.threshold=0.3`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierConfig;
use crate::corpus::InputFormat;
use crate::error::{Error, Result};
use crate::evaluation::Language;
use crate::extractor::ExtractorConfig;
use crate::seed::derive_seed;
use crate::taxonomy::TaxonomyParams;

pub const ENV_PREFIX: &str = "CONCEPT_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    /// Raw corpus read by `ingest`.
    pub corpus: PathBuf,
    pub taxonomy: PathBuf,
    pub checkpoints: PathBuf,
    pub outputs: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            corpus: PathBuf::from("corpus.jsonl"),
            taxonomy: PathBuf::from("out/taxonomy.json"),
            checkpoints: PathBuf::from("out/checkpoints"),
            outputs: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestSettings {
    pub format: InputFormat,
    pub test_size: usize,
    /// Keep one gold concept per record, chosen with the ingest seed.
    pub single_gold: bool,
}

impl Default for IngestSettings {
    fn default() -> Self {
        IngestSettings {
            format: InputFormat::Jsonl,
            test_size: 500,
            single_gold: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaxonomySettings {
    pub top_n: usize,
    pub delta: f64,
    pub k_min: usize,
    pub k_max: usize,
    /// Cluster index (as a string key) to topic name.
    pub labels: BTreeMap<String, String>,
}

impl Default for TaxonomySettings {
    fn default() -> Self {
        let p = TaxonomyParams::default();
        TaxonomySettings {
            top_n: p.top_n,
            delta: p.delta,
            k_min: p.k_min,
            k_max: p.k_max,
            labels: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationSettings {
    /// Prediction files scored together; their new concepts are pooled for relative recall.
    pub comparison_group: Vec<PathBuf>,
    /// Ordered `[A, B]` pairs for the bias map.
    pub bias_pairs: Vec<[String; 2]>,
    /// Explicit sub-concept lists keyed by B; B without an entry uses the taxonomy rule.
    pub sub_concepts: BTreeMap<String, Vec<String>>,
    pub language: Language,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        EvaluationSettings {
            comparison_group: Vec::new(),
            bias_pairs: Vec::new(),
            sub_concepts: BTreeMap::new(),
            language: Language::En,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Root seed. Component seeds are derived from it and override the per-section `seed`.
    pub seed: u64,
    pub paths: Paths,
    pub ingest: IngestSettings,
    pub taxonomy: TaxonomySettings,
    pub classifier: ClassifierConfig,
    pub extractor: ExtractorConfig,
    pub evaluation: EvaluationSettings,
}

fn parse_scalar(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(root: &mut toml::Table, path: &[String], value: toml::Value) -> Result<()> {
    let (last, parents) = path.split_last().ok_or_else(|| Error::InvalidArgument("empty override key".into()))?;
    let mut table = root;
    for p in parents {
        let entry = table.entry(p.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::InvalidArgument(format!("override path crosses non-table key {p:?}")))?;
    }
    table.insert(last.clone(), value);
    Ok(())
}

impl PipelineConfig {
    /// Builds the layered configuration. `file` may be absent; `env` yields `(key, value)`
    /// pairs and `overrides` are `dotted.key=value` strings.
    pub fn resolve<I>(file: Option<&Path>, env: I, overrides: &[String]) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table = match file {
            Some(p) => crate::io::read_to_string(p)?
                .parse::<toml::Table>()
                .map_err(|e| Error::Validation(format!("config {}: {e}", p.display())))?,
            None => toml::Table::new(),
        };
        let mut env_pairs: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        env_pairs.sort();
        for (k, v) in env_pairs {
            let path: Vec<String> = k[ENV_PREFIX.len()..].to_lowercase().split("__").map(String::from).collect();
            set_path(&mut table, &path, parse_scalar(&v))?;
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("override {o:?} is not key=value")))?;
            let path: Vec<String> = k.trim().split('.').map(String::from).collect();
            set_path(&mut table, &path, parse_scalar(v.trim()))?;
        }
        let config: PipelineConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Validation(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.classifier.validate().map_err(to_validation)?;
        self.extractor.validate().map_err(to_validation)?;
        self.taxonomy_params()?;
        if !(self.taxonomy.delta > 0.0) {
            return Err(Error::Validation("taxonomy.delta must be positive".into()));
        }
        if self.taxonomy.k_min < 2 || self.taxonomy.k_min > self.taxonomy.k_max {
            return Err(Error::Validation("taxonomy k range must satisfy 2 <= k_min <= k_max".into()));
        }
        Ok(())
    }

    pub fn component_seed(&self, component: &str) -> u64 {
        derive_seed(self.seed, component)
    }

    pub fn taxonomy_params(&self) -> Result<TaxonomyParams> {
        Ok(TaxonomyParams {
            top_n: self.taxonomy.top_n,
            delta: self.taxonomy.delta,
            k_min: self.taxonomy.k_min,
            k_max: self.taxonomy.k_max,
            seed: self.component_seed("taxonomy"),
        })
    }

    pub fn label_map(&self) -> Result<BTreeMap<usize, String>> {
        self.taxonomy
            .labels
            .iter()
            .map(|(k, v)| {
                k.parse::<usize>()
                    .map(|i| (i, v.clone()))
                    .map_err(|_| Error::Validation(format!("taxonomy label key {k:?} is not a cluster index")))
            })
            .collect()
    }

    pub fn classifier_config(&self) -> ClassifierConfig {
        let mut c = self.classifier.clone();
        c.seed = self.component_seed("classifier");
        c
    }

    pub fn extractor_config(&self, use_prompt: bool) -> ExtractorConfig {
        let mut c = self.extractor.clone();
        c.use_prompt = use_prompt;
        c.seed = self.component_seed(if use_prompt { "extractor" } else { "extractor-no-prompt" });
        c
    }

    pub fn split_seed(&self) -> u64 {
        self.component_seed("split")
    }

    pub fn records_path(&self) -> PathBuf {
        self.paths.outputs.join("records.jsonl")
    }

    pub fn quarantine_path(&self) -> PathBuf {
        self.paths.outputs.join("quarantine.jsonl")
    }

    pub fn split_path(&self) -> PathBuf {
        self.paths.outputs.join("split.json")
    }

    pub fn classifier_path(&self) -> PathBuf {
        self.paths.checkpoints.join("classifier.ckpt")
    }

    pub fn extractor_path(&self, use_prompt: bool) -> PathBuf {
        self.paths
            .checkpoints
            .join(if use_prompt { "extractor.ckpt" } else { "extractor_no_prompt.ckpt" })
    }

    pub fn predictions_path(&self, use_prompt: bool) -> PathBuf {
        self.paths
            .outputs
            .join(if use_prompt { "predictions.jsonl" } else { "predictions_no_prompt.jsonl" })
    }
}

fn to_validation(e: Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::Validation(m),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_training_settings() {
        let c = PipelineConfig::default();
        assert_eq!(c.extractor.learning_rate, 3e-5);
        assert_eq!(c.extractor.dropout, 0.1);
        assert_eq!(c.extractor.alpha, 0.3);
        assert_eq!(c.extractor.threshold, 0.12);
        assert_eq!(c.classifier.learning_rate, 3e-5);
        c.validate().unwrap();
    }

    #[test]
    fn layering_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "seed = 5\n[extractor]\nthreshold = 0.5\nalpha = 0.4\n[taxonomy.labels]\n0 = \"Person\"\n").unwrap();
        let env = vec![
            ("CONCEPT_EXTRACTOR__ALPHA".to_string(), "0.6".to_string()),
            ("CONCEPT_PATHS__OUTPUTS".to_string(), "/tmp/x".to_string()),
            ("OTHER".to_string(), "1".to_string()),
        ];
        let c = PipelineConfig::resolve(Some(&path), env, &["extractor.threshold=0.7".into()]).unwrap();
        assert_eq!(c.seed, 5);
        assert_eq!(c.extractor.threshold, 0.7);
        assert_eq!(c.extractor.alpha, 0.6);
        assert_eq!(c.paths.outputs, PathBuf::from("/tmp/x"));
        assert_eq!(c.label_map().unwrap().get(&0).map(String::as_str), Some("Person"));
    }

    #[test]
    fn invalid_values_fail_validation() {
        let e = PipelineConfig::resolve(None, Vec::new(), &["extractor.alpha=1.5".into()]).unwrap_err();
        assert_eq!(e.kind(), "validation");
        let e = PipelineConfig::resolve(None, Vec::new(), &["extractor.alpha".into()]).unwrap_err();
        assert_eq!(e.kind(), "invalid_argument");
    }

    #[test]
    fn missing_file() {
        let e = PipelineConfig::resolve(Some(Path::new("/nonexistent/c.toml")), Vec::new(), &[]).unwrap_err();
        assert_eq!(e.kind(), "missing_artifact");
    }

    #[test]
    fn seeds_fan_out() {
        let c = PipelineConfig::default();
        assert_ne!(c.classifier_config().seed, c.extractor_config(true).seed);
        assert_ne!(c.extractor_config(true).seed, c.extractor_config(false).seed);
        assert_eq!(c.classifier_config().seed, PipelineConfig::default().classifier_config().seed);
    }
}
