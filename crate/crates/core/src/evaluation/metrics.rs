//! Run scoring against oracle gold labels: EC/NC/wrong labels, precision, relative
//! recall over a comparison group, and the mean length of new concepts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::tokenize::{normalize, tokenize};

/// Predicted spans for one entity, as written by `extract`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityPrediction {
    pub entity: String,
    pub spans: Vec<String>,
}

/// Reads prediction JSON Lines. A span may be a plain string or an object with a `text`
/// field, so both extractor output and baseline output parse.
pub fn parse_predictions(text: &str) -> Result<Vec<EntityPrediction>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Span {
        Text(String),
        Full { text: String },
    }
    #[derive(Deserialize)]
    struct Line {
        entity: String,
        #[serde(default)]
        spans: Vec<Span>,
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let l: Line = serde_json::from_str(line)
            .map_err(|e| crate::error::Error::Validation(format!("predictions line {}: {e}", i + 1)))?;
        out.push(EntityPrediction {
            entity: l.entity,
            spans: l
                .spans
                .into_iter()
                .map(|s| match s {
                    Span::Text(t) | Span::Full { text: t } => t,
                })
                .collect(),
        });
    }
    Ok(out)
}

/// Oracle labels for one entity: concepts already in the graph and valid new ones.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GoldEntry {
    pub entity: String,
    #[serde(default)]
    pub existing: Vec<String>,
    #[serde(default)]
    pub new: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanLabel {
    Existing,
    New,
    Wrong,
}

impl SpanLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SpanLabel::Existing => "EC",
            SpanLabel::New => "NC",
            SpanLabel::Wrong => "wrong",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSpan {
    pub text: String,
    pub label: SpanLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityScore {
    pub entity: String,
    pub spans: Vec<LabeledSpan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub predictions: usize,
    pub ec_count: usize,
    pub nc_count: usize,
    pub wrong_count: usize,
    pub pooled_nc_total: usize,
    pub len_nc: Option<f64>,
    pub precision: Option<f64>,
    pub recall_r: Option<f64>,
    pub f1_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRun {
    pub run_name: String,
    pub per_entity: Vec<EntityScore>,
    pub aggregates: Aggregates,
}

/// Gold sets keyed by entity, with concept strings normalized.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoldIndex {
    existing: BTreeMap<String, BTreeSet<String>>,
    new: BTreeMap<String, BTreeSet<String>>,
}

impl GoldIndex {
    pub fn from_entries(entries: &[GoldEntry]) -> Self {
        let mut idx = GoldIndex::default();
        for e in entries {
            idx.existing.entry(e.entity.clone()).or_default().extend(e.existing.iter().map(|c| normalize(c)));
            idx.new.entry(e.entity.clone()).or_default().extend(e.new.iter().map(|c| normalize(c)));
        }
        idx
    }

    pub fn label(&self, entity: &str, span: &str) -> SpanLabel {
        let s = normalize(span);
        if self.existing.get(entity).is_some_and(|set| set.contains(&s)) {
            SpanLabel::Existing
        } else if self.new.get(entity).is_some_and(|set| set.contains(&s)) {
            SpanLabel::New
        } else {
            SpanLabel::Wrong
        }
    }
}

/// Distinct normalized spans per entity, in first-seen order.
fn distinct_spans(pred: &EntityPrediction) -> Vec<String> {
    let mut seen = BTreeSet::new();
    pred.spans
        .iter()
        .filter(|s| seen.insert(normalize(s)))
        .cloned()
        .collect()
}

/// Correct new concepts of one run, keyed by entity.
fn new_concepts(predictions: &[EntityPrediction], gold: &GoldIndex) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for p in predictions {
        for s in distinct_spans(p) {
            if gold.label(&p.entity, &s) == SpanLabel::New {
                out.insert((p.entity.clone(), normalize(&s)));
            }
        }
    }
    out
}

/// Number of distinct correct new concepts found by any run in the comparison group.
pub fn pooled_nc_total(runs: &[&[EntityPrediction]], gold: &GoldIndex) -> usize {
    let mut all = BTreeSet::new();
    for r in runs {
        all.extend(new_concepts(r, gold));
    }
    all.len()
}

pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

/// Labels every distinct predicted span of every entity and aggregates.
/// Precision is undefined without predictions and relative recall is undefined when the
/// pooled NC total is zero; both are then `None`.
pub fn score_run(run_name: &str, predictions: &[EntityPrediction], gold: &GoldIndex, pooled_nc_total: usize) -> ScoredRun {
    let mut per_entity = Vec::with_capacity(predictions.len());
    let (mut ec, mut nc, mut wrong) = (0usize, 0usize, 0usize);
    let mut nc_tokens = 0usize;
    for p in predictions {
        let spans: Vec<LabeledSpan> = distinct_spans(p)
            .into_iter()
            .map(|text| {
                let label = gold.label(&p.entity, &text);
                match label {
                    SpanLabel::Existing => ec += 1,
                    SpanLabel::New => {
                        nc += 1;
                        nc_tokens += tokenize(&text).len();
                    }
                    SpanLabel::Wrong => wrong += 1,
                }
                LabeledSpan { text, label }
            })
            .collect();
        per_entity.push(EntityScore {
            entity: p.entity.clone(),
            spans,
        });
    }
    let total = ec + nc + wrong;
    let precision = (total > 0).then(|| (ec + nc) as f64 / total as f64);
    let recall_r = (pooled_nc_total > 0).then(|| nc as f64 / pooled_nc_total as f64);
    let f1_r = match (precision, recall_r) {
        (Some(p), Some(r)) => Some(harmonic_mean(p, r)),
        _ => None,
    };
    ScoredRun {
        run_name: run_name.to_string(),
        per_entity,
        aggregates: Aggregates {
            predictions: total,
            ec_count: ec,
            nc_count: nc,
            wrong_count: wrong,
            pooled_nc_total,
            len_nc: (nc > 0).then(|| nc_tokens as f64 / nc as f64),
            precision,
            recall_r,
            f1_r,
        },
    }
}

/// Scores every run of one comparison group against a shared pooled NC total.
pub fn score_group(runs: &[(String, Vec<EntityPrediction>)], gold: &GoldIndex) -> Vec<ScoredRun> {
    let slices: Vec<&[EntityPrediction]> = runs.iter().map(|(_, p)| p.as_slice()).collect();
    let pooled = pooled_nc_total(&slices, gold);
    runs.iter().map(|(name, p)| score_run(name, p, gold, pooled)).collect()
}

/// CSV for manual review: one row per labelled span with an empty `human_label` column.
pub fn review_csv(runs: &[ScoredRun]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["run", "entity", "span", "oracle_label", "human_label"]).map_err(csv_err)?;
    for run in runs {
        for e in &run.per_entity {
            for s in &e.spans {
                w.write_record([run.run_name.as_str(), e.entity.as_str(), s.text.as_str(), s.label.as_str(), ""])
                    .map_err(csv_err)?;
            }
        }
    }
    w.into_inner().map_err(|e| crate::error::Error::Validation(e.to_string()))
}

pub(crate) fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Validation(format!("csv: {e}"))
}
