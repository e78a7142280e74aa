//! Immutable knowledge-base snapshot: alias store with a fuzzy index, anchor
//! statistics for commonness, n-gram frequencies and word/entity embeddings.
//!
//! A snapshot is assembled with [`SnapshotBuilder`] (directly or through
//! [`ingest_snapshot`] from tab-separated files), persisted with
//! [`KnowledgeSnapshot::save`] and reopened with [`KnowledgeSnapshot::open`].
//! Nothing mutates it afterwards, so it can be shared freely across threads.

mod fuzzy;
mod ingest;
mod persist;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::normalize;

pub use fuzzy::TrigramIndex;
pub use ingest::{ingest_snapshot, SnapshotSources};
pub use persist::Manifest;

/// Prefix marking entity keys in the embedding table.
pub const ENTITY_PREFIX: &str = "ENTITY/";

/// Fuzzy lookup depth used when nothing else is configured.
pub const DEFAULT_FUZZY_DEPTH: usize = 150;

/// Canonical knowledge-base page identifier, e.g. `The_New_York_Times`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EntityId(Arc<str>);

impl EntityId {
    pub fn new(id: &str) -> Result<Self> {
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::InvalidEntityId(id.to_string()));
        }
        Ok(Self(Arc::from(id)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Key of this entity in the embedding table.
    pub fn embedding_key(&self) -> String {
        format!("{ENTITY_PREFIX}{}", self.0)
    }
}

impl TryFrom<String> for EntityId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Self::new(&value)
    }
}

impl From<EntityId> for String {
    fn from(id: EntityId) -> Self {
        id.0.to_string()
    }
}

impl FromStr for EntityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(s)
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// Where an alias comes from. The declaration order is the lookup order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AliasSource {
    Title,
    Redirect,
    Disambiguation,
}

impl AliasSource {
    /// Titles and redirects get the boosted segment weight.
    pub fn is_title_like(self) -> bool {
        matches!(self, AliasSource::Title | AliasSource::Redirect)
    }
}

impl FromStr for AliasSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "title" => Ok(Self::Title),
            "redirect" => Ok(Self::Redirect),
            "disambiguation" => Ok(Self::Disambiguation),
            other => Err(format!("unknown alias source `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasRecord {
    pub surface: String,
    pub entity: EntityId,
    pub source: AliasSource,
}

/// Anchor-text statistics for one normalized anchor string.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnchorStats {
    total: u64,
    /// Sorted by entity for binary search.
    counts: Vec<(EntityId, u64)>,
}

impl AnchorStats {
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, entity: &EntityId) -> u64 {
        self.counts
            .binary_search_by(|(e, _)| e.cmp(entity))
            .map(|i| self.counts[i].1)
            .unwrap_or(0)
    }

    pub fn entities(&self) -> impl Iterator<Item = (&EntityId, u64)> {
        self.counts.iter().map(|(e, c)| (e, *c))
    }
}

#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

impl EmbeddingTable {
    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&[f32]> {
        let row = *self.index.get(key)?;
        Some(&self.data[row * self.dim..(row + 1) * self.dim])
    }
}

#[derive(Debug, Clone)]
struct SurfaceEntry {
    /// Ordered by source kind, then entity id.
    entities: Vec<(EntityId, AliasSource)>,
    title_like: bool,
}

/// Canonical, order-independent content of a snapshot. This is what gets
/// persisted; the lookup structures are derived from it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub(crate) struct SnapshotContent {
    pub aliases: BTreeMap<(String, EntityId), AliasSource>,
    pub anchors: BTreeMap<String, BTreeMap<EntityId, u64>>,
    pub ngrams: BTreeMap<String, u64>,
    pub dimension: usize,
    pub embeddings: BTreeMap<String, Vec<f32>>,
}

/// Accumulates knowledge-base records and produces a [`KnowledgeSnapshot`].
///
/// Surfaces, anchors, n-grams and word keys are normalized on insertion.
/// Duplicate records are merged; conflicting anchor or n-gram counts are
/// rejected.
#[derive(Debug, Default)]
pub struct SnapshotBuilder {
    content: SnapshotContent,
}

impl SnapshotBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_alias(&mut self, surface: &str, entity: EntityId, source: AliasSource) -> Result<()> {
        let surface = normalize(surface);
        if surface.is_empty() {
            return Err(Error::EmptySurface);
        }
        // A pair listed under several sources keeps the strongest one.
        self.content
            .aliases
            .entry((surface, entity))
            .and_modify(|s| *s = (*s).min(source))
            .or_insert(source);
        Ok(())
    }

    pub fn add_anchor(&mut self, anchor: &str, entity: EntityId, count: u64) -> Result<()> {
        let anchor = normalize(anchor);
        if anchor.is_empty() {
            return Err(Error::EmptySurface);
        }
        let counts = self.content.anchors.entry(anchor.clone()).or_default();
        match counts.get(&entity) {
            Some(&existing) if existing != count => Err(Error::ConflictingAnchor {
                anchor,
                entity: entity.to_string(),
                first: existing,
                second: count,
            }),
            Some(_) => Ok(()),
            None => {
                counts.insert(entity, count);
                Ok(())
            }
        }
    }

    pub fn add_ngram(&mut self, ngram: &str, frequency: u64) -> Result<()> {
        let ngram = normalize(ngram);
        if ngram.is_empty() {
            return Err(Error::EmptySurface);
        }
        match self.content.ngrams.get(&ngram) {
            Some(&existing) if existing != frequency => Err(Error::ConflictingNgram {
                ngram,
                first: existing,
                second: frequency,
            }),
            _ => {
                self.content.ngrams.insert(ngram, frequency);
                Ok(())
            }
        }
    }

    /// Adds a vector under `key`: either `ENTITY/<id>` or a bare word.
    pub fn add_embedding(&mut self, key: &str, vector: Vec<f32>) -> Result<()> {
        if vector.is_empty() {
            return Err(Error::InvalidEmbedding(format!("`{key}` has no components")));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidEmbedding(format!("`{key}` has a non-finite component")));
        }
        if self.content.embeddings.is_empty() {
            self.content.dimension = vector.len();
        } else if vector.len() != self.content.dimension {
            return Err(Error::InvalidEmbedding(format!(
                "`{key}` has {} components, expected {}",
                vector.len(),
                self.content.dimension
            )));
        }
        let key = match key.strip_prefix(ENTITY_PREFIX) {
            Some(id) => EntityId::new(id)?.embedding_key(),
            None => normalize(key),
        };
        if key.is_empty() {
            return Err(Error::InvalidEmbedding("empty key".into()));
        }
        self.content.embeddings.insert(key, vector);
        Ok(())
    }

    pub fn build(self) -> KnowledgeSnapshot {
        KnowledgeSnapshot::from_content(self.content)
    }
}

/// Read-only bundle of every store the pipeline consults.
#[derive(Debug, Clone)]
pub struct KnowledgeSnapshot {
    surfaces: HashMap<String, SurfaceEntry>,
    fuzzy: TrigramIndex,
    anchors: HashMap<String, AnchorStats>,
    ngrams: HashMap<String, u64>,
    embeddings: EmbeddingTable,
    content: Arc<SnapshotContent>,
}

impl KnowledgeSnapshot {
    pub(crate) fn from_content(content: SnapshotContent) -> Self {
        let mut surfaces: HashMap<String, SurfaceEntry> = HashMap::new();
        for ((surface, entity), source) in &content.aliases {
            let entry = surfaces.entry(surface.clone()).or_insert_with(|| SurfaceEntry {
                entities: Vec::new(),
                title_like: false,
            });
            entry.entities.push((entity.clone(), *source));
            entry.title_like |= source.is_title_like();
        }
        for entry in surfaces.values_mut() {
            entry.entities.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        }

        let fuzzy = TrigramIndex::build(content.aliases.keys().map(|(s, _)| s.as_str()));

        let anchors = content
            .anchors
            .iter()
            .map(|(anchor, counts)| {
                let counts: Vec<(EntityId, u64)> =
                    counts.iter().map(|(e, c)| (e.clone(), *c)).collect();
                let total = counts.iter().map(|(_, c)| c).sum();
                (anchor.clone(), AnchorStats { total, counts })
            })
            .collect();

        let ngrams = content.ngrams.iter().map(|(k, v)| (k.clone(), *v)).collect();

        let mut embeddings = EmbeddingTable {
            dim: content.dimension,
            index: HashMap::with_capacity(content.embeddings.len()),
            data: Vec::with_capacity(content.embeddings.len() * content.dimension),
        };
        for (row, (key, vector)) in content.embeddings.iter().enumerate() {
            embeddings.index.insert(key.clone(), row);
            embeddings.data.extend_from_slice(vector);
        }

        Self {
            surfaces,
            fuzzy,
            anchors,
            ngrams,
            embeddings,
            content: Arc::new(content),
        }
    }

    pub(crate) fn content(&self) -> &SnapshotContent {
        &self.content
    }

    /// Entities whose alias equals `surface`: titles, then redirects, then
    /// disambiguation members, each group ordered by id.
    pub fn exact_lookup(&self, surface: &str) -> Vec<EntityId> {
        self.surfaces
            .get(surface)
            .map(|e| e.entities.iter().map(|(id, _)| id.clone()).collect())
            .unwrap_or_default()
    }

    /// Alias records for `surface` in lookup order.
    pub fn aliases_of(&self, surface: &str) -> &[(EntityId, AliasSource)] {
        self.surfaces.get(surface).map(|e| e.entities.as_slice()).unwrap_or(&[])
    }

    /// True when `surface` is the title or a redirect of some entity.
    pub fn is_title_or_redirect(&self, surface: &str) -> bool {
        self.surfaces.get(surface).is_some_and(|e| e.title_like)
    }

    /// Up to `depth` entities whose alias surfaces are lexically close to
    /// `surface`, scored by trigram cosine. Entities of an exactly matching
    /// surface come first with score 1.0; the rest follow by score, then id.
    pub fn fuzzy_lookup(&self, surface: &str, depth: usize) -> Result<Vec<(EntityId, f64)>> {
        if surface.trim().is_empty() {
            return Err(Error::EmptySurface);
        }
        let mut out: Vec<(EntityId, f64)> = self
            .exact_lookup(surface)
            .into_iter()
            .map(|e| (e, 1.0))
            .collect();
        if out.len() >= depth {
            out.truncate(depth);
            return Ok(out);
        }

        let mut best: HashMap<&EntityId, f64> = HashMap::new();
        for (surface_id, score) in self.fuzzy.search(surface) {
            let hit = self.fuzzy.surface(surface_id);
            if hit == surface {
                continue;
            }
            for (entity, _) in self.aliases_of(hit) {
                let slot = best.entry(entity).or_insert(0.0);
                if score > *slot {
                    *slot = score;
                }
            }
        }
        let mut rest: Vec<(&EntityId, f64)> = best
            .into_iter()
            .filter(|(e, _)| !out.iter().any(|(x, _)| x == *e))
            .collect();
        rest.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        out.extend(rest.into_iter().take(depth - out.len()).map(|(e, s)| (e.clone(), s)));
        Ok(out)
    }

    /// Frequency of a normalized n-gram; `None` when the table has no entry,
    /// which is distinct from a stored frequency of zero.
    pub fn ngram_frequency(&self, ngram: &str) -> Option<u64> {
        self.ngrams.get(ngram).copied()
    }

    pub fn anchor_stats(&self, mention: &str) -> Option<&AnchorStats> {
        self.anchors.get(mention)
    }

    /// Share of the anchor occurrences of `mention` that link to `entity`.
    pub fn commonness(&self, mention: &str, entity: &EntityId) -> Result<f64> {
        let stats = self
            .anchors
            .get(mention)
            .ok_or_else(|| Error::UnknownAnchor(mention.to_string()))?;
        if stats.total == 0 {
            return Ok(0.0);
        }
        Ok(stats.count(entity) as f64 / stats.total as f64)
    }

    /// Vector for a bare word or an `ENTITY/`-prefixed key.
    pub fn embedding_of(&self, key: &str) -> Option<&[f32]> {
        self.embeddings.get(key)
    }

    pub fn entity_embedding(&self, entity: &EntityId) -> Option<&[f32]> {
        self.embeddings.get(&entity.embedding_key())
    }

    pub fn embeddings(&self) -> &EmbeddingTable {
        &self.embeddings
    }

    pub fn surface_count(&self) -> usize {
        self.surfaces.len()
    }

    pub fn alias_count(&self) -> usize {
        self.content.aliases.len()
    }

    pub fn anchor_count(&self) -> usize {
        self.anchors.len()
    }

    pub fn ngram_count(&self) -> usize {
        self.ngrams.len()
    }

    /// Every ingested alias record, ordered by surface then entity.
    pub fn alias_records(&self) -> impl Iterator<Item = AliasRecord> + '_ {
        self.content.aliases.iter().map(|((surface, entity), source)| AliasRecord {
            surface: surface.clone(),
            entity: entity.clone(),
            source: *source,
        })
    }
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (f64::from(*x), f64::from(*y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    const WORDS: [&str; 6] = ["new", "york", "times", "square", "dance", "apollo"];

    fn surface() -> impl Strategy<Value = String> {
        prop::collection::vec(0usize..WORDS.len(), 1..4).prop_map(|ix| {
            ix.into_iter().map(|i| WORDS[i]).collect::<Vec<_>>().join(" ")
        })
    }

    fn entity() -> impl Strategy<Value = EntityId> {
        (0usize..8).prop_map(|i| EntityId::new(&format!("E{i}")).unwrap())
    }

    fn source() -> impl Strategy<Value = AliasSource> {
        prop_oneof![
            Just(AliasSource::Title),
            Just(AliasSource::Redirect),
            Just(AliasSource::Disambiguation)
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn aliases_survive_save_and_open(rows in prop::collection::vec((surface(), entity(), source()), 0..20)) {
            let mut b = SnapshotBuilder::new();
            for (s, e, src) in &rows {
                b.add_alias(s, e.clone(), *src).unwrap();
            }
            let kb = b.build();
            let dir = tempfile::tempdir().unwrap();
            kb.save(dir.path()).unwrap();
            let back = KnowledgeSnapshot::open(dir.path()).unwrap();
            for (s, e, _) in &rows {
                prop_assert!(back.exact_lookup(s).contains(e));
            }
            prop_assert_eq!(back.alias_records().collect::<Vec<_>>(), kb.alias_records().collect::<Vec<_>>());
        }

        #[test]
        fn commonness_sums_to_one(counts in prop::collection::btree_map(0usize..8, 1u64..1000, 1..8)) {
            let mut b = SnapshotBuilder::new();
            for (e, c) in &counts {
                b.add_anchor("apollo", EntityId::new(&format!("E{e}")).unwrap(), *c).unwrap();
            }
            let kb = b.build();
            let sum: f64 = counts
                .keys()
                .map(|e| kb.commonness("apollo", &EntityId::new(&format!("E{e}")).unwrap()).unwrap())
                .sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }

        #[test]
        fn fuzzy_respects_depth(rows in prop::collection::vec((surface(), entity()), 1..30),
                                query in surface(), depth in 0usize..10) {
            let mut b = SnapshotBuilder::new();
            for (s, e) in &rows {
                b.add_alias(s, e.clone(), AliasSource::Title).unwrap();
            }
            let kb = b.build();
            let hits = kb.fuzzy_lookup(&query, depth).unwrap();
            prop_assert!(hits.len() <= depth);
            prop_assert!(hits.windows(2).all(|w| w[0].1 >= w[1].1 || w[0].1 == 1.0));
            let ids: std::collections::HashSet<_> = hits.iter().map(|(e, _)| e).collect();
            prop_assert_eq!(ids.len(), hits.len());
        }
    }
}
