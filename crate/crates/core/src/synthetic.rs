//! Templated synthetic corpus with four topics, marked gold spans, and a planted
//! writer/novel co-occurrence.
//!
//! Most abstracts follow topic-specific templates in which the concept slot is easy to
//! locate. A shared frame, `"{E} is linked to the {person} and the {book} of {year} ."`,
//! appears in a fraction of Person records (gold: the person concept, planted distractor:
//! the book concept) and in a larger fraction of Book records (gold: the book concept), so
//! the frame on its own leans towards the book concept. Inside that frame only the topic
//! tells the two roles apart, and the topic is carried by the entity name alone.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{EntityRecord, RawRecord};
use crate::taxonomy::{Taxonomy, TopicCluster};

pub const TOPICS: [&str; 4] = ["Person", "Book", "Location", "Food"];

/// Concept assigned to every entity of the planted topic.
pub const BIAS_SOURCE: &str = "writer";
/// Concept planted as a distractor.
pub const BIAS_TARGET: &str = "novel";

const FIRST: [&str; 16] = [
    "Mara", "Tobin", "Elsa", "Rurik", "Ines", "Calder", "Wren", "Oskar", "Lenna", "Bastian", "Greta", "Anselm", "Ilse", "Corwin", "Delphine", "Jory",
];
const LAST: [&str; 16] = [
    "Ellison", "Varga", "Holm", "Achterberg", "Quill", "Marlowe", "Stroud", "Keane", "Lindqvist", "Orsini", "Falk", "Brandt", "Sayer", "Pell", "Tarrant", "Vance",
];
const BOOK_A: [&str; 16] = [
    "Silent", "Crimson", "Hollow", "Gilded", "Broken", "Distant", "Frozen", "Hidden", "Burning", "Quiet", "Bitter", "Wandering", "Pale", "Endless", "Sunken", "Velvet",
];
const BOOK_B: [&str; 16] = [
    "Harbor", "Orchard", "Lantern", "Meridian", "Tapestry", "Compass", "Archive", "Garden", "Citadel", "Mirror", "Voyage", "Sparrow", "Ledger", "Tide", "Chorus", "Threshold",
];
const LOC_A: [&str; 16] = [
    "Ardon", "Belmere", "Calvast", "Dornholm", "Esker", "Farrow", "Glenmoor", "Hask", "Iverne", "Jarlsby", "Kestrel", "Lowmarch", "Mirrin", "Norwick", "Oskel", "Pellan",
];
const LOC_B: [&str; 16] = [
    "Ford", "Haven", "Crossing", "Reach", "Hollow", "Bay", "Gate", "Vale", "Point", "Wick", "Bridge", "Marsh", "Field", "Cove", "Rise", "Ferry",
];
const FOOD_A: [&str; 16] = [
    "Spiced", "Smoked", "Braised", "Glazed", "Pickled", "Roasted", "Salted", "Honeyed", "Peppered", "Stewed", "Charred", "Crisp", "Sour", "Sweet", "Fermented", "Steamed",
];
const FOOD_B: [&str; 16] = [
    "Kelp", "Barley", "Lentil", "Quince", "Turnip", "Mussel", "Chestnut", "Millet", "Fennel", "Sorrel", "Plum", "Parsnip", "Saffron", "Walnut", "Leek", "Radish",
];

const PLACES: [&str; 8] = ["Boston", "Lyon", "Dublin", "Porto", "Oslo", "Quebec", "Krakow", "Geneva"];
const REGIONS: [&str; 6] = ["the north", "the south", "the coast", "the highlands", "the delta", "the plains"];
const INGREDIENTS: [&str; 6] = ["rice", "butter", "garlic", "cream", "beans", "onions"];

const PERSON_MOD: [&str; 3] = ["American", "British", "French"];
const BOOK_MOD: [&str; 3] = ["crime", "historical", "gothic"];
const LOC_HEAD: &str = "city";
const LOC_MOD: [&str; 3] = ["port", "capital", "border"];
const FOOD_HEAD: &str = "dish";
const FOOD_MOD: [&str; 3] = ["rice", "festive", "peasant"];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub records: Vec<EntityRecord>,
    /// Entities whose abstract contains the planted distractor.
    pub planted: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub records_per_topic: usize,
    /// Fraction of Person records written in the shared frame (the planted records).
    pub shared_fraction: f64,
    /// Fraction of Book records written in the shared frame.
    pub mirror_fraction: f64,
    /// Fraction of the remaining records whose concept carries a modifier, giving nested gold spans.
    pub nested_fraction: f64,
    /// Number of name parts drawn from each pool; smaller pools repeat name tokens more often.
    pub name_pool: usize,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            records_per_topic: 50,
            shared_fraction: 0.3,
            mirror_fraction: 0.7,
            nested_fraction: 0.3,
            name_pool: 8,
            seed: 0,
        }
    }
}

fn heads(topic: usize) -> (&'static str, &'static [&'static str]) {
    match topic {
        0 => (BIAS_SOURCE, &PERSON_MOD),
        1 => (BIAS_TARGET, &BOOK_MOD),
        2 => (LOC_HEAD, &LOC_MOD),
        _ => (FOOD_HEAD, &FOOD_MOD),
    }
}

/// The four-topic taxonomy matching the generator's concept inventory.
pub fn taxonomy() -> Taxonomy {
    let clusters = (0..4)
        .map(|t| {
            let (head, mods) = heads(t);
            let mut concepts = vec![head.to_string()];
            concepts.extend(mods.iter().map(|m| format!("{m} {head}")));
            TopicCluster {
                topic: TOPICS[t].to_string(),
                concepts,
            }
        })
        .collect();
    Taxonomy {
        k: 4,
        delta: 1.0,
        clusters,
        selection_scores: Vec::new(),
    }
}

struct Generator {
    rng: ChaCha8Rng,
    used: HashSet<String>,
    pool: usize,
    unique: bool,
}

impl Generator {
    fn pick<'a>(&mut self, pool: &[&'a str]) -> &'a str {
        pool.choose(&mut self.rng).copied().expect("non-empty pool")
    }

    fn name(&mut self, topic: usize) -> String {
        let (a, b): (&[&str], &[&str]) = match topic {
            0 => (&FIRST, &LAST),
            1 => (&BOOK_A, &BOOK_B),
            2 => (&LOC_A, &LOC_B),
            _ => (&FOOD_A, &FOOD_B),
        };
        let k = self.pool.clamp(1, a.len());
        for _ in 0..10_000 {
            let n = format!("{} {}", self.pick(&a[..k]), self.pick(&b[..k]));
            if !self.unique || self.used.insert(n.clone()) {
                return n;
            }
        }
        panic!("entity name pool exhausted");
    }

    fn year(&mut self) -> String {
        self.rng.random_range(1850..2000).to_string()
    }

    fn concept(&mut self, topic: usize, nested: bool) -> (String, Vec<String>) {
        let (head, mods) = heads(topic);
        if nested {
            let full = format!("{} {head}", self.pick(mods));
            (full.clone(), vec![full, head.to_string()])
        } else {
            (head.to_string(), vec![head.to_string()])
        }
    }

    fn plain(&mut self, topic: usize, nested: bool) -> RawRecord {
        let e = self.name(topic);
        let (c, gold) = self.concept(topic, nested);
        let place = self.pick(&PLACES);
        let region = self.pick(&REGIONS);
        let year = self.year();
        let variant = self.rng.random_range(0..3);
        let text = match (topic, variant) {
            (0, 0) => format!("{e} was a {c} born in {place} in {year} ."),
            (0, 1) => format!("{e} is a {c} who lived in {place} for many years ."),
            (0, _) => format!("Born in {place} in {year} , {e} became a {c} ."),
            (1, 0) => format!("{e} is a {c} published in {year} ."),
            (1, 1) => format!("{e} is a {c} set in {place} ."),
            (1, _) => format!("First printed in {year} , {e} is a {c} ."),
            (2, 0) => format!("{e} is a {c} in {region} ."),
            (2, 1) => format!("{e} is a {c} founded in {year} near {place} ."),
            (2, _) => format!("Located in {region} , {e} is a {c} ."),
            (_, 0) => format!("{e} is a {c} from {region} ."),
            (_, 1) => format!("{e} is a {c} made with {} .", self.pick(&INGREDIENTS)),
            (_, _) => format!("Served in {region} , {e} is a {c} ."),
        };
        RawRecord {
            entity: e,
            abstract_text: text,
            concepts: gold,
            topic: Some(TOPICS[topic].to_string()),
        }
    }

    /// The shared frame. Person gold is the first slot, Book gold the second.
    fn shared(&mut self, topic: usize) -> RawRecord {
        let e = self.name(topic);
        let year = self.year();
        let book = if self.rng.random_bool(0.5) {
            BIAS_TARGET.to_string()
        } else {
            format!("{} {BIAS_TARGET}", self.pick(&BOOK_MOD))
        };
        let text = format!("{e} is linked to the {BIAS_SOURCE} and the {book} of {year} .");
        let gold = if topic == 0 { BIAS_SOURCE.to_string() } else { book };
        RawRecord {
            entity: e,
            abstract_text: text,
            concepts: vec![gold],
            topic: Some(TOPICS[topic].to_string()),
        }
    }
}

fn to_record(raw: RawRecord) -> EntityRecord {
    EntityRecord::from_raw(raw).expect("templates place every concept in the abstract")
}

/// Generates `4 * records_per_topic` records. Within Person and Book, the first
/// `round(shared_fraction * records_per_topic)` records use the shared frame; the output is
/// then shuffled.
pub fn generate(params: &SyntheticParams) -> SyntheticCorpus {
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        used: HashSet::new(),
        pool: params.name_pool,
        unique: true,
    };
    let count = |f: f64| (f * params.records_per_topic as f64).round() as usize;
    let n_shared = [count(params.shared_fraction), count(params.mirror_fraction)];
    let mut records = Vec::new();
    let mut planted = BTreeSet::new();
    for topic in 0..4 {
        for i in 0..params.records_per_topic {
            let raw = if topic <= 1 && i < n_shared[topic] {
                let r = g.shared(topic);
                if topic == 0 {
                    planted.insert(r.entity.clone());
                }
                r
            } else {
                let nested = g.rng.random_bool(params.nested_fraction);
                g.plain(topic, nested)
            };
            records.push(to_record(raw));
        }
    }
    use rand::seq::SliceRandom;
    records.shuffle(&mut g.rng);
    SyntheticCorpus { records, planted }
}

/// Fresh Person records for bias measurement: `planted` of them use the shared frame.
/// Names are drawn from the same pools as [`generate`] and may repeat.
pub fn bias_probe(total: usize, planted: usize, params: &SyntheticParams, seed: u64) -> SyntheticCorpus {
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(seed),
        used: HashSet::new(),
        pool: params.name_pool,
        unique: false,
    };
    let mut records = Vec::with_capacity(total);
    let mut marked = BTreeSet::new();
    for i in 0..total {
        let raw = if i < planted {
            let r = g.shared(0);
            marked.insert(r.entity.clone());
            r
        } else {
            let nested = g.rng.random_bool(0.3);
            g.plain(0, nested)
        };
        records.push(to_record(raw));
    }
    SyntheticCorpus {
        records,
        planted: marked,
    }
}

/// Number of records per explicit topic.
pub fn topic_counts(records: &[EntityRecord]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for r in records {
        if let Some(t) = &r.topic {
            *out.entry(t.clone()).or_default() += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let p = SyntheticParams::default();
        let a = generate(&p);
        assert_eq!(a.records.len(), 200);
        assert_eq!(a.planted.len(), 15);
        assert_eq!(a, generate(&p));
        for c in topic_counts(&a.records).values() {
            assert_eq!(*c, 50);
        }
        let names: HashSet<_> = a.records.iter().map(|r| &r.entity).collect();
        assert_eq!(names.len(), 200);
    }

    #[test]
    fn planted_records_carry_both_concepts() {
        let a = generate(&SyntheticParams::default());
        for r in a.records.iter().filter(|r| a.planted.contains(&r.entity)) {
            assert_eq!(r.gold_concepts, vec![BIAS_SOURCE.to_string()]);
            assert!(r.abstract_text.contains(BIAS_TARGET));
        }
    }

    #[test]
    fn gold_concepts_lie_in_taxonomy() {
        let tax = taxonomy();
        let a = generate(&SyntheticParams::default());
        for r in &a.records {
            for c in &r.gold_concepts {
                assert_eq!(tax.topic_of_concept(c), r.topic.as_deref(), "{c}");
            }
        }
    }

    #[test]
    fn probe_shape() {
        let probe = bias_probe(100, 30, &SyntheticParams::default(), 9);
        assert_eq!(probe.records.len(), 100);
        assert_eq!(probe.records.iter().filter(|r| r.abstract_text.contains(BIAS_TARGET)).count(), 30);
        assert!(probe.records.iter().all(|r| r.topic.as_deref() == Some("Person")));
    }
}
