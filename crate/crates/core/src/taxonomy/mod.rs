//! Topic taxonomy induction.
//!
//! Typical concepts (the concepts with the most entities) are compared by the overlap
//! coefficient of their entity sets, grouped by spectral clustering, and the cluster
//! count is chosen automatically. Each cluster becomes a named topic whose name later
//! serves as the prompt for the extractor.

pub mod selection;
pub mod similarity;
pub mod spectral;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::EntityRecord;
use crate::error::{Error, Result};
pub use selection::{select_cluster_count, CountSelection, SelectionScore};
pub use similarity::{build_similarity_matrix, overlap_coefficient, SimilarityMatrix};
pub use spectral::{spectral_cluster, ClusterAssignment};

/// The seventeen topic names used for the reference taxonomy.
pub const REFERENCE_TOPICS: [&str; 17] = [
    "Person",
    "Book",
    "Location",
    "Film and TV",
    "Language",
    "Game",
    "Creature",
    "Food",
    "Website",
    "Music",
    "Software",
    "Folklore",
    "Organization",
    "History",
    "Disease",
    "Technology",
    "Medicine",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptNode {
    pub name: String,
    pub entity_set: BTreeSet<String>,
}

impl ConceptNode {
    pub fn entity_count(&self) -> usize {
        self.entity_set.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypicalConcepts {
    pub nodes: Vec<ConceptNode>,
    /// Fraction of concept-bearing entities that carry at least one typical concept.
    pub coverage: f64,
    pub warning: Option<String>,
}

/// Picks the `top_n` concepts with the most entities (ties broken lexicographically).
pub fn select_typical_concepts(records: &[EntityRecord], top_n: usize) -> TypicalConcepts {
    let mut ents: HashMap<&str, BTreeSet<String>> = HashMap::new();
    for r in records {
        for c in &r.gold_concepts {
            ents.entry(c.as_str()).or_default().insert(r.entity.clone());
        }
    }
    let mut nodes: Vec<ConceptNode> = ents
        .into_iter()
        .map(|(name, entity_set)| ConceptNode {
            name: name.to_string(),
            entity_set,
        })
        .collect();
    nodes.sort_by(|a, b| b.entity_count().cmp(&a.entity_count()).then_with(|| a.name.cmp(&b.name)));

    let warning = (nodes.len() < top_n).then(|| {
        let w = format!("only {} distinct concepts available (requested {top_n})", nodes.len());
        log::warn!("{w}");
        w
    });
    nodes.truncate(top_n);

    let with_concepts: HashSet<&str> = records
        .iter()
        .filter(|r| !r.gold_concepts.is_empty())
        .map(|r| r.entity.as_str())
        .collect();
    let covered: HashSet<&str> = nodes
        .iter()
        .flat_map(|n| n.entity_set.iter().map(String::as_str))
        .collect();
    let coverage = if with_concepts.is_empty() {
        0.0
    } else {
        covered.len() as f64 / with_concepts.len() as f64
    };
    TypicalConcepts {
        nodes,
        coverage,
        warning,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCluster {
    pub topic: String,
    pub concepts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub k: usize,
    pub delta: f64,
    pub clusters: Vec<TopicCluster>,
    #[serde(default)]
    pub selection_scores: Vec<SelectionScore>,
}

impl Taxonomy {
    pub fn topic_names(&self) -> Vec<String> {
        self.clusters.iter().map(|c| c.topic.clone()).collect()
    }

    pub fn topic_index(&self, topic: &str) -> Option<usize> {
        self.clusters.iter().position(|c| c.topic == topic)
    }

    pub fn topic_of_concept(&self, concept: &str) -> Option<&str> {
        self.clusters
            .iter()
            .find(|c| c.concepts.iter().any(|x| x == concept))
            .map(|c| c.topic.as_str())
    }

    /// Topic supervision for a record: its explicit topic when it names a cluster,
    /// otherwise the cluster of its first gold concept found in the taxonomy.
    pub fn topic_for_record(&self, record: &EntityRecord) -> Option<usize> {
        if let Some(t) = &record.topic {
            if let Some(i) = self.topic_index(t) {
                return Some(i);
            }
        }
        record
            .gold_concepts
            .iter()
            .find_map(|c| self.topic_of_concept(c))
            .and_then(|t| self.topic_index(t))
    }

    pub fn cluster_of_concept(&self, concept: &str) -> Option<&TopicCluster> {
        self.clusters.iter().find(|c| c.concepts.iter().any(|x| x == concept))
    }
}

/// Names each cluster from `label_map`; clusters without a label become `topic_<index>`.
pub fn assign_topic_labels(
    concept_names: &[String],
    assignment: &[usize],
    k: usize,
    label_map: &BTreeMap<usize, String>,
    delta: f64,
    selection_scores: Vec<SelectionScore>,
) -> Result<Taxonomy> {
    if concept_names.len() != assignment.len() {
        return Err(Error::InvalidArgument("assignment length differs from concept count".into()));
    }
    let mut clusters: Vec<TopicCluster> = (0..k)
        .map(|i| TopicCluster {
            topic: label_map.get(&i).cloned().unwrap_or_else(|| format!("topic_{i}")),
            concepts: Vec::new(),
        })
        .collect();
    let mut seen = HashSet::new();
    for c in &clusters {
        if !seen.insert(c.topic.as_str()) {
            return Err(Error::Validation(format!("duplicate topic name {:?}", c.topic)));
        }
    }
    for (name, &label) in concept_names.iter().zip(assignment) {
        if label >= k {
            return Err(Error::InvalidArgument(format!("cluster index {label} >= k = {k}")));
        }
        clusters[label].concepts.push(name.clone());
    }
    Ok(Taxonomy {
        k,
        delta,
        clusters,
        selection_scores,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaxonomyParams {
    pub top_n: usize,
    pub delta: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub seed: u64,
}

impl Default for TaxonomyParams {
    fn default() -> Self {
        TaxonomyParams {
            top_n: 100,
            delta: 1.0,
            k_min: 3,
            k_max: 30,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InducedTaxonomy {
    pub taxonomy: Taxonomy,
    pub coverage: f64,
    pub warnings: Vec<String>,
}

/// Full induction: typical concepts, similarity, cluster-count selection, final clustering, naming.
/// The k range is clipped to the number of typical concepts.
pub fn induce_taxonomy(
    records: &[EntityRecord],
    params: &TaxonomyParams,
    label_map: &BTreeMap<usize, String>,
) -> Result<InducedTaxonomy> {
    let typical = select_typical_concepts(records, params.top_n);
    let mut warnings: Vec<String> = typical.warning.iter().cloned().collect();
    let n = typical.nodes.len();
    if n < 2 {
        return Err(Error::Validation(format!("need at least 2 typical concepts, found {n}")));
    }
    let k_max = params.k_max.min(n);
    let k_min = params.k_min.clamp(2, k_max);
    let matrix = build_similarity_matrix(&typical.nodes, params.delta);
    let sel = select_cluster_count(&matrix, k_min, k_max, params.seed)?;
    warnings.extend(sel.warnings);
    let assignment = spectral_cluster(&matrix, sel.k_star, params.seed)?;
    let taxonomy = assign_topic_labels(
        &matrix.names(),
        &assignment.labels,
        sel.k_star,
        label_map,
        params.delta,
        sel.scores,
    )?;
    Ok(InducedTaxonomy {
        taxonomy,
        coverage: typical.coverage,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RawRecord;

    fn rec(entity: &str, concepts: &[&str]) -> EntityRecord {
        let abs = format!("{entity} is {}", concepts.join(" and "));
        EntityRecord::from_raw(RawRecord {
            entity: entity.into(),
            abstract_text: abs,
            concepts: concepts.iter().map(|s| s.to_string()).collect(),
            topic: None,
        })
        .unwrap()
    }

    #[test]
    fn typical_concepts_by_count() {
        let mut records = Vec::new();
        for i in 0..5 {
            records.push(rec(&format!("a{i}"), &["a"]));
        }
        for i in 0..3 {
            records.push(rec(&format!("b{i}"), &["b"]));
        }
        records.push(rec("c0", &["c"]));
        let t = select_typical_concepts(&records, 2);
        let names: Vec<_> = t.nodes.iter().map(|n| n.name.as_str()).collect();
        assert_eq!(names, ["a", "b"]);
        assert!((t.coverage - 8.0 / 9.0).abs() < 1e-12);
        assert!(t.warning.is_none());
    }

    #[test]
    fn underfull_concepts_warn() {
        let records = vec![rec("x", &["a"]), rec("y", &["b"]), rec("z", &["c"])];
        let t = select_typical_concepts(&records, 100);
        assert_eq!(t.nodes.len(), 3);
        assert!(t.warning.is_some());
        assert_eq!(t.coverage, 1.0);
    }

    #[test]
    fn reference_names() {
        let names: Vec<String> = (0..17).map(|i| format!("c{i}")).collect();
        let assignment: Vec<usize> = (0..17).collect();
        let labels: BTreeMap<usize, String> = REFERENCE_TOPICS.iter().enumerate().map(|(i, t)| (i, t.to_string())).collect();
        let tax = assign_topic_labels(&names, &assignment, 17, &labels, 1.0, vec![]).unwrap();
        assert_eq!(tax.topic_names(), REFERENCE_TOPICS.map(String::from).to_vec());
        assert_eq!(tax.topic_of_concept("c3"), Some("Film and TV"));
    }

    #[test]
    fn default_names_and_duplicates() {
        let tax = assign_topic_labels(&["a".into()], &[0], 1, &BTreeMap::new(), 1.0, vec![]).unwrap();
        assert_eq!(tax.clusters[0].topic, "topic_0");

        let labels = BTreeMap::from([(0, "Person".to_string()), (1, "Person".to_string())]);
        let err = assign_topic_labels(&["a".into(), "b".into()], &[0, 1], 2, &labels, 1.0, vec![]).unwrap_err();
        assert_eq!(err.kind(), "validation");
    }

    #[test]
    fn taxonomy_json_shape() {
        let tax = assign_topic_labels(&["a".into(), "b".into()], &[0, 1], 2, &BTreeMap::new(), 1.0, vec![SelectionScore { k: 2, sc: 0.5, chi: 3.0, sum_norm: 1.0 }]).unwrap();
        let v = serde_json::to_value(&tax).unwrap();
        assert_eq!(v["k"], 2);
        assert_eq!(v["clusters"][1]["topic"], "topic_1");
        assert_eq!(v["selection_scores"][0]["sum_norm"], 1.0);
    }
}
