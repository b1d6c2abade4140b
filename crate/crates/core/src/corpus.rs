//! Record ingestion, dataset splits, and extractor input assembly.

use std::collections::HashMap;
use std::ops::Range;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::tokenize::{detokenize, find_subsequence, tokenize, Token};

/// One line of the JSONL corpus format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub entity: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    #[serde(default)]
    pub concepts: Vec<String>,
    #[serde(default)]
    pub topic: Option<String>,
}

/// An entity with its abstract and gold concepts, tokenized and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityRecord {
    pub entity: String,
    pub abstract_text: String,
    pub entity_tokens: Vec<Token>,
    pub abstract_tokens: Vec<Token>,
    pub gold_concepts: Vec<String>,
    pub topic: Option<String>,
}

impl EntityRecord {
    /// Validates a raw record. The returned error string is the quarantine reason.
    pub fn from_raw(raw: RawRecord) -> std::result::Result<Self, String> {
        let entity_tokens = tokenize(&raw.entity);
        let abstract_tokens = tokenize(&raw.abstract_text);
        if entity_tokens.is_empty() {
            return Err("empty entity".into());
        }
        if abstract_tokens.is_empty() {
            return Err("empty abstract".into());
        }
        let mut gold: Vec<String> = Vec::new();
        for c in raw.concepts {
            let c = c.trim().to_string();
            let ct = tokenize(&c);
            if ct.is_empty() || find_subsequence(&abstract_tokens, &ct).is_none() {
                return Err("concept not in abstract".into());
            }
            if !gold.contains(&c) {
                gold.push(c);
            }
        }
        Ok(EntityRecord {
            entity: raw.entity,
            abstract_text: raw.abstract_text,
            entity_tokens,
            abstract_tokens,
            gold_concepts: gold,
            topic: raw.topic,
        })
    }

    pub fn to_raw(&self) -> RawRecord {
        RawRecord {
            entity: self.entity.clone(),
            abstract_text: self.abstract_text.clone(),
            concepts: self.gold_concepts.clone(),
            topic: self.topic.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Tsv,
}

/// A quarantined line: the original object (when it parsed) plus the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarantineEntry {
    pub line: usize,
    #[serde(flatten)]
    pub record: Option<RawRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutcome {
    pub records: Vec<EntityRecord>,
    pub quarantined: Vec<QuarantineEntry>,
}

impl IngestOutcome {
    pub fn malformed_count(&self) -> usize {
        self.quarantined.iter().filter(|q| q.record.is_none()).count()
    }
}

fn parse_tsv_line(line: &str) -> std::result::Result<RawRecord, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() < 2 {
        return Err(format!("malformed: expected at least 2 tab-separated columns, got {}", cols.len()));
    }
    let concepts = cols
        .get(2)
        .map(|c| c.split('|').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect())
        .unwrap_or_default();
    let topic = cols.get(3).map(|t| t.trim()).filter(|t| !t.is_empty()).map(String::from);
    Ok(RawRecord {
        entity: cols[0].to_string(),
        abstract_text: cols[1].to_string(),
        concepts,
        topic,
    })
}

/// Parses and validates every line of a corpus file. Line-level problems are collected
/// in the quarantine list; only an unreadable file is fatal.
pub fn ingest(path: &Path, format: InputFormat) -> Result<IngestOutcome> {
    let text = io::read_to_string(path)?;
    Ok(ingest_str(&text, format))
}

pub fn ingest_str(text: &str, format: InputFormat) -> IngestOutcome {
    let mut out = IngestOutcome::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = match format {
            InputFormat::Jsonl => serde_json::from_str::<RawRecord>(line).map_err(|e| format!("malformed: {e}")),
            InputFormat::Tsv => parse_tsv_line(line),
        };
        match parsed {
            Err(reason) => out.quarantined.push(QuarantineEntry {
                line: i + 1,
                record: None,
                raw: Some(line.to_string()),
                reason,
            }),
            Ok(raw) => match EntityRecord::from_raw(raw.clone()) {
                Ok(r) => out.records.push(r),
                Err(reason) => out.quarantined.push(QuarantineEntry {
                    line: i + 1,
                    record: Some(raw),
                    raw: None,
                    reason,
                }),
            },
        }
    }
    out
}

pub fn serialize_records(records: &[EntityRecord]) -> Result<Vec<u8>> {
    let raws: Vec<RawRecord> = records.iter().map(EntityRecord::to_raw).collect();
    io::to_jsonl(&raws)
}

/// Keeps one randomly chosen gold concept per record, mirroring single-label annotation.
pub fn apply_single_gold(records: &mut [EntityRecord], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for r in records.iter_mut() {
        if r.gold_concepts.len() > 1 {
            let keep = r.gold_concepts.choose(&mut rng).cloned().unwrap();
            r.gold_concepts = vec![keep];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<EntityRecord>,
    pub validation: Vec<EntityRecord>,
    pub test: Vec<EntityRecord>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl DatasetSplit {
    pub fn manifest(&self) -> SplitManifest {
        let ids = |v: &[EntityRecord]| v.iter().map(|r| r.entity.clone()).collect();
        SplitManifest {
            seed: self.seed,
            train: ids(&self.train),
            validation: ids(&self.validation),
            test: ids(&self.test),
        }
    }

    /// Rebuilds a split from a manifest and the full record set.
    pub fn from_manifest(manifest: &SplitManifest, records: &[EntityRecord]) -> Result<Self> {
        let mut by_name: HashMap<&str, Vec<&EntityRecord>> = HashMap::new();
        for r in records {
            by_name.entry(r.entity.as_str()).or_default().push(r);
        }
        let mut pick = |names: &[String]| -> Result<Vec<EntityRecord>> {
            let mut out = Vec::new();
            for n in names {
                let group = by_name
                    .remove(n.as_str())
                    .ok_or_else(|| Error::Validation(format!("manifest entity {n:?} not found in corpus")))?;
                out.extend(group.into_iter().cloned());
            }
            Ok(out)
        };
        Ok(DatasetSplit {
            train: pick(&manifest.train)?,
            validation: pick(&manifest.validation)?,
            test: pick(&manifest.test)?,
            seed: manifest.seed,
        })
    }
}

/// Shuffles entity groups with `seed`, takes `test_size` records for test, then splits the
/// remainder 9:1 into train/validation with rounding toward train. Records sharing an entity
/// name always land in the same split.
pub fn make_splits(records: &[EntityRecord], test_size: usize, seed: u64) -> Result<DatasetSplit> {
    if test_size >= records.len() {
        return Err(Error::InvalidArgument(format!(
            "test_size {test_size} must be smaller than the number of records ({})",
            records.len()
        )));
    }
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<&EntityRecord>> = HashMap::new();
    for r in records {
        let g = groups.entry(r.entity.as_str()).or_default();
        if g.is_empty() {
            order.push(r.entity.as_str());
        }
        g.push(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let rest_len = records.len() - test_size;
    let val_target = rest_len / 10;
    let mut split = DatasetSplit {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
        seed,
    };
    for name in order {
        let group = &groups[name];
        let dest = if split.test.len() < test_size {
            &mut split.test
        } else if split.validation.len() < val_target {
            &mut split.validation
        } else {
            &mut split.train
        };
        dest.extend(group.iter().map(|r| (*r).clone()));
    }
    Ok(split)
}

/// Entity tokens followed by abstract tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct InputText {
    pub tokens: Vec<Token>,
    pub entity_span: Range<usize>,
    pub abstract_span: Range<usize>,
}

impl InputText {
    pub fn entity_tokens(&self) -> &[Token] {
        &self.tokens[self.entity_span.clone()]
    }

    pub fn abstract_tokens(&self) -> &[Token] {
        &self.tokens[self.abstract_span.clone()]
    }

    pub fn entity_text(&self) -> String {
        detokenize(self.entity_tokens())
    }

    pub fn abstract_text(&self) -> String {
        detokenize(self.abstract_tokens())
    }
}

pub fn build_input(record: &EntityRecord) -> Result<InputText> {
    if record.entity_tokens.is_empty() {
        return Err(Error::Validation("entity name is empty".into()));
    }
    if record.abstract_tokens.is_empty() {
        return Err(Error::Validation("abstract is empty".into()));
    }
    let e = record.entity_tokens.len();
    let mut tokens = record.entity_tokens.clone();
    tokens.extend(record.abstract_tokens.iter().cloned());
    let n = tokens.len();
    Ok(InputText {
        tokens,
        entity_span: 0..e,
        abstract_span: e..n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(entity: &str, abs: &str, concepts: &[&str]) -> EntityRecord {
        EntityRecord::from_raw(RawRecord {
            entity: entity.into(),
            abstract_text: abs.into(),
            concepts: concepts.iter().map(|s| s.to_string()).collect(),
            topic: None,
        })
        .unwrap()
    }

    #[test]
    fn ingest_single_line() {
        let line = r#"{"entity":"Louisa May Alcott","abstract":"Louisa May Alcott was an American novelist, short story writer and poet.","concepts":["writer"]}"#;
        let out = ingest_str(line, InputFormat::Jsonl);
        assert_eq!(out.records.len(), 1);
        assert!(out.quarantined.is_empty());
        assert_eq!(out.records[0].gold_concepts, vec!["writer"]);
    }

    #[test]
    fn ingest_empty_file() {
        let out = ingest_str("", InputFormat::Jsonl);
        assert!(out.records.is_empty());
        assert!(out.quarantined.is_empty());
    }

    #[test]
    fn concept_missing_from_abstract_is_quarantined() {
        let line = r#"{"entity":"A","abstract":"A is a town.","concepts":["river"],"topic":null}"#;
        let out = ingest_str(line, InputFormat::Jsonl);
        assert!(out.records.is_empty());
        assert_eq!(out.quarantined[0].reason, "concept not in abstract");
        let json = serde_json::to_value(&out.quarantined[0]).unwrap();
        assert_eq!(json["entity"], "A");
        assert_eq!(json["reason"], "concept not in abstract");
    }

    #[test]
    fn malformed_line_is_collected_not_fatal() {
        let text = "{not json}\n{\"entity\":\"B\",\"abstract\":\"B is a river.\",\"concepts\":[\"river\"]}\n";
        let out = ingest_str(text, InputFormat::Jsonl);
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.malformed_count(), 1);
        assert_eq!(out.quarantined[0].line, 1);
    }

    #[test]
    fn tsv_format() {
        let text = "Paris\tParis is a city in France.\tcity|France\tLocation\n";
        let out = ingest_str(text, InputFormat::Tsv);
        assert_eq!(out.records[0].gold_concepts, vec!["city", "France"]);
        assert_eq!(out.records[0].topic.as_deref(), Some("Location"));
    }

    #[test]
    fn unreadable_file_is_fatal() {
        assert!(ingest(Path::new("/definitely/not/here.jsonl"), InputFormat::Jsonl).is_err());
    }

    fn many(n: usize) -> Vec<EntityRecord> {
        (0..n).map(|i| rec(&format!("e{i}"), "x is a thing .", &["thing"])).collect()
    }

    #[test]
    fn split_sizes() {
        let s = make_splits(&many(100_500), 500, 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (90_000, 10_000, 500));
        let s = make_splits(&many(11), 1, 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (9, 1, 1));
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let recs = many(57);
        let a = make_splits(&recs, 7, 42).unwrap();
        let b = make_splits(&recs, 7, 42).unwrap();
        assert_eq!(a, b);
        let mut names: Vec<String> = a.train.iter().chain(&a.validation).chain(&a.test).map(|r| r.entity.clone()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 57);
        let back = DatasetSplit::from_manifest(&a.manifest(), &recs).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn split_rejects_oversized_test() {
        assert!(make_splits(&many(3), 3, 0).is_err());
    }

    #[test]
    fn build_input_layout() {
        let abs: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
        let r = rec("Louisa May Alcott", &abs.join(" "), &[]);
        let x = build_input(&r).unwrap();
        assert_eq!(x.tokens.len(), 43);
        assert_eq!(x.entity_span, 0..3);
        assert_eq!(x.abstract_span, 3..43);
        assert_eq!(x.abstract_tokens(), r.abstract_tokens.as_slice());
        assert_eq!(x.entity_text(), "Louisa May Alcott");
        assert_eq!(x.abstract_text(), abs.join(" "));
    }

    #[test]
    fn build_input_rejects_empty_entity() {
        let mut r = rec("A", "A is a town.", &[]);
        r.entity_tokens.clear();
        assert!(build_input(&r).is_err());
    }

    #[test]
    fn ingest_is_idempotent() {
        let text = "{\"entity\":\"A\",\"abstract\":\"A is a small town.\",\"concepts\":[\"small town\",\"town\"],\"topic\":\"Location\"}\n";
        let first = ingest_str(text, InputFormat::Jsonl).records;
        let again = ingest_str(std::str::from_utf8(&serialize_records(&first).unwrap()).unwrap(), InputFormat::Jsonl).records;
        assert_eq!(first, again);
    }
}
