#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use qinterp_core::kbstore::{AliasSource, EntityId, KnowledgeSnapshot, SnapshotBuilder, SnapshotSources};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn load_fixture(name: &str) -> KnowledgeSnapshot {
    SnapshotSources::in_dir(&fixture(name)).load().expect("fixture loads")
}

pub fn id(s: &str) -> EntityId {
    EntityId::new(s).unwrap()
}

/// Raw tables of a generated knowledge base, kept for oracles.
#[derive(Debug, Clone, Default)]
pub struct RandomKb {
    pub aliases: Vec<(String, String)>,
    pub anchors: BTreeMap<String, BTreeMap<String, u64>>,
    pub ngrams: BTreeMap<String, u64>,
    pub vectors: BTreeMap<String, Vec<f32>>,
}

pub const VOCAB: [&str; 7] = ["red", "fox", "river", "stone", "bay", "north", "oak"];

fn phrase(rng: &mut impl Rng, max_len: usize) -> String {
    let len = rng.gen_range(1..=max_len);
    (0..len).map(|_| *VOCAB.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

pub fn random_query(rng: &mut impl Rng, max_terms: usize) -> String {
    phrase(rng, max_terms)
}

impl RandomKb {
    /// A tiny knowledge base: at most 5 entities per anchor (3 for
    /// single-word anchors), random n-grams and partial embeddings.
    pub fn generate(rng: &mut impl Rng) -> Self {
        let mut kb = RandomKb::default();
        let entities: Vec<String> = (0..rng.gen_range(2..10)).map(|i| format!("E{i}")).collect();
        let mut surfaces = BTreeSet::new();
        for _ in 0..rng.gen_range(3..14) {
            surfaces.insert(phrase(rng, 3));
        }
        for s in &surfaces {
            let cap = if s.contains(' ') { 5 } else { 3 };
            let k = rng.gen_range(1..=cap.min(entities.len()));
            let chosen: Vec<&String> = entities.choose_multiple(rng, k).collect();
            for e in &chosen {
                kb.aliases.push((s.clone(), (*e).clone()));
            }
            if rng.gen_bool(0.8) {
                let stats = kb.anchors.entry(s.clone()).or_default();
                for e in chosen {
                    // zero counts exercise the positive-commonness rule
                    stats.insert(e.clone(), rng.gen_range(0..50));
                }
                if stats.values().all(|&c| c == 0) {
                    *stats.values_mut().next().unwrap() = 1;
                }
            }
        }
        for _ in 0..rng.gen_range(0..12) {
            let len = rng.gen_range(2..=4);
            let g = (0..len).map(|_| *VOCAB.choose(rng).unwrap()).collect::<Vec<_>>().join(" ");
            kb.ngrams.insert(g, rng.gen_range(1..100_000));
        }
        let dim = 3;
        let vector = |rng: &mut dyn rand::RngCore| -> Vec<f32> {
            (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
        };
        for e in &entities {
            if rng.gen_bool(0.8) {
                kb.vectors.insert(format!("ENTITY/{e}"), vector(rng));
            }
        }
        for w in VOCAB {
            if rng.gen_bool(0.7) {
                kb.vectors.insert(w.to_string(), vector(rng));
            }
        }
        kb
    }

    pub fn build(&self) -> KnowledgeSnapshot {
        let mut b = SnapshotBuilder::new();
        for (s, e) in &self.aliases {
            b.add_alias(s, id(e), AliasSource::Title).unwrap();
        }
        for (s, stats) in &self.anchors {
            for (e, c) in stats {
                b.add_anchor(s, id(e), *c).unwrap();
            }
        }
        for (g, f) in &self.ngrams {
            b.add_ngram(g, *f).unwrap();
        }
        for (k, v) in &self.vectors {
            b.add_embedding(k, v.clone()).unwrap();
        }
        b.build()
    }

    pub fn entity_count(&self) -> usize {
        self.aliases.iter().map(|(_, e)| e).collect::<BTreeSet<_>>().len()
    }
}
