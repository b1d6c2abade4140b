use std::collections::BTreeSet;

use nalgebra::DMatrix;

use super::ConceptNode;

/// `|a ∩ b| / (min(|a|, |b|) + delta)`.
///
/// Strictly below 1 for any `delta > 0`, and 0 when either set is empty.
pub fn overlap_coefficient<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>, delta: f64) -> f64 {
    debug_assert!(delta > 0.0);
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let inter = small.iter().filter(|e| large.contains(e)).count();
    inter as f64 / (small.len() as f64 + delta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub concepts: Vec<ConceptNode>,
    pub values: DMatrix<f64>,
    pub delta: f64,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    /// Wraps a precomputed affinity matrix (used for planted-partition fixtures).
    pub fn from_values(names: Vec<String>, values: DMatrix<f64>) -> Self {
        assert_eq!(values.nrows(), names.len());
        assert_eq!(values.ncols(), names.len());
        let concepts = names
            .into_iter()
            .map(|name| ConceptNode {
                name,
                entity_set: BTreeSet::new(),
            })
            .collect();
        SimilarityMatrix {
            concepts,
            values,
            delta: 1.0,
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.concepts.iter().map(|c| c.name.clone()).collect()
    }
}

pub fn build_similarity_matrix(nodes: &[ConceptNode], delta: f64) -> SimilarityMatrix {
    let n = nodes.len();
    let mut values = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = overlap_coefficient(&nodes[i].entity_set, &nodes[j].entity_set, delta);
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    SimilarityMatrix {
        concepts: nodes.to_vec(),
        values,
        delta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(items: &[u32]) -> BTreeSet<u32> {
        items.iter().copied().collect()
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(overlap_coefficient(&set(&[1, 2]), &set(&[1, 2]), 1.0), 2.0 / 3.0);
        assert_eq!(overlap_coefficient(&set(&[1, 2]), &set(&[3, 4, 5]), 1.0), 0.0);
        assert_eq!(overlap_coefficient(&set(&[1, 2]), &set(&[3]), 0.01), 0.0);
        assert_eq!(overlap_coefficient(&set(&[1, 2, 3]), &set(&[2, 3, 4, 5]), 1.0), 0.5);
        assert_eq!(overlap_coefficient(&set(&[]), &set(&[]), 1.0), 0.0);
    }

    fn node(name: &str, ents: &[&str]) -> ConceptNode {
        ConceptNode {
            name: name.into(),
            entity_set: ents.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn identical_nodes() {
        let m = build_similarity_matrix(&[node("a", &["x", "y", "z"]), node("b", &["x", "y", "z"])], 1.0);
        assert_eq!(m.values[(0, 1)], 3.0 / 4.0);
        assert_eq!(m.values[(0, 0)], 3.0 / 4.0);
    }

    #[test]
    fn disjoint_nodes() {
        let m = build_similarity_matrix(&[node("a", &["x"]), node("b", &["y"]), node("c", &["z", "w"])], 1.0);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(m.values[(i, j)], 0.0);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in proptest::collection::btree_set(0u32..40, 0..20),
                                 b in proptest::collection::btree_set(0u32..40, 0..20),
                                 delta in 0.001f64..5.0) {
            let ab = overlap_coefficient(&a, &b, delta);
            prop_assert_eq!(ab, overlap_coefficient(&b, &a, delta));
            prop_assert!((0.0..1.0).contains(&ab));
        }

        #[test]
        fn monotone_in_intersection(a in proptest::collection::btree_set(0u32..30, 1..15),
                                    b_extra in proptest::collection::btree_set(50u32..80, 1..15),
                                    delta in 0.01f64..3.0) {
            // Swap one element of b outside a for one inside: sizes fixed, intersection +1.
            let mut b = b_extra.clone();
            let before = overlap_coefficient(&a, &b, delta);
            let first_out = *b.iter().next().unwrap();
            b.remove(&first_out);
            b.insert(*a.iter().next().unwrap());
            prop_assert!(overlap_coefficient(&a, &b, delta) >= before);
        }
    }
}
