//! Concept-bias rate: how often entities of concept A receive a span of concept B (or
//! one of B's sub-concepts) that is not among their own gold concepts.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taxonomy::Taxonomy;
use crate::tokenize::{find_subsequence, normalize, tokenize};

use super::metrics::csv_err;

/// An evaluated entity with its gold concepts and predicted spans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasEntity {
    pub entity: String,
    pub gold: Vec<String>,
    pub predicted: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub concept_a: String,
    pub concept_b: String,
    pub biased_entities: usize,
    pub total_entities: usize,
    pub rate: f64,
}

/// Which spans count as B. `Taxonomy` accepts B itself and any concept in B's cluster
/// that contains B as a token subsequence; `Explicit` accepts B and the listed concepts.
#[derive(Debug, Clone)]
pub enum SubConcepts<'a> {
    Taxonomy(&'a Taxonomy),
    Explicit(Vec<String>),
}

impl SubConcepts<'_> {
    pub fn matches(&self, concept_b: &str, candidate: &str) -> bool {
        let b = normalize(concept_b);
        let c = normalize(candidate);
        if b == c {
            return true;
        }
        match self {
            SubConcepts::Explicit(list) => list.iter().any(|x| normalize(x) == c),
            SubConcepts::Taxonomy(tax) => {
                let Some(cluster) = tax.clusters.iter().find(|cl| cl.concepts.iter().any(|x| normalize(x) == b)) else {
                    return false;
                };
                cluster.concepts.iter().any(|x| normalize(x) == c) && find_subsequence(&tokenize(&c), &tokenize(&b)).is_some()
            }
        }
    }
}

pub fn is_biased(entity: &BiasEntity, concept_b: &str, relation: &SubConcepts<'_>) -> bool {
    let gold: BTreeSet<String> = entity.gold.iter().map(|g| normalize(g)).collect();
    entity
        .predicted
        .iter()
        .any(|s| relation.matches(concept_b, s) && !gold.contains(&normalize(s)))
}

/// Every entity must carry `concept_a` among its gold concepts.
pub fn bias_rate(entities: &[BiasEntity], concept_a: &str, concept_b: &str, relation: &SubConcepts<'_>) -> Result<BiasReport> {
    if entities.is_empty() {
        return Err(Error::InvalidArgument(format!("no entities of concept {concept_a:?}")));
    }
    let a = normalize(concept_a);
    if let Some(e) = entities.iter().find(|e| !e.gold.iter().any(|g| normalize(g) == a)) {
        return Err(Error::Validation(format!("entity {:?} lacks gold concept {concept_a:?}", e.entity)));
    }
    let biased = entities.iter().filter(|e| is_biased(e, concept_b, relation)).count();
    Ok(BiasReport {
        concept_a: concept_a.to_string(),
        concept_b: concept_b.to_string(),
        biased_entities: biased,
        total_entities: entities.len(),
        rate: biased as f64 / entities.len() as f64,
    })
}

/// Bias rates for each requested ordered pair. The entities of A are those with A among
/// their gold concepts; pairs without any are skipped with a warning.
pub fn bias_map(entities: &[BiasEntity], pairs: &[(String, String)], relation: &SubConcepts<'_>) -> Result<Vec<BiasReport>> {
    let mut out = Vec::new();
    for (a, b) in pairs {
        let na = normalize(a);
        let of_a: Vec<BiasEntity> = entities
            .iter()
            .filter(|e| e.gold.iter().any(|g| normalize(g) == na))
            .cloned()
            .collect();
        if of_a.is_empty() {
            log::warn!("no entities of concept {a:?}; skipping pair ({a:?}, {b:?})");
            continue;
        }
        out.push(bias_rate(&of_a, a, b, relation)?);
    }
    Ok(out)
}

pub fn bias_map_csv(reports: &[BiasReport]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["concept_a", "concept_b", "rate"]).map_err(csv_err)?;
    for r in reports {
        w.write_record([r.concept_a.as_str(), r.concept_b.as_str(), &r.rate.to_string()])
            .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Validation(e.to_string()))
}
