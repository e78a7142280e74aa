//! Combination and ranking: fill skeletons with candidate entities and rank
//! the resulting interpretations by commonness, relatedness and context.
//!
//! For an interpretation `I` with linked entities `e`, each at mention `m`:
//!
//! ```text
//! score(I) = 1/|{e in I}| * sum_e ( alpha*CMN(e) + beta*REL(e) + gamma*CXT(e) )
//! ```
//!
//! * `CMN(e)`: commonness of `e` for its mention.
//! * `REL(e)`: mean embedding cosine of `e` with the other linked entities.
//! * `CXT(e)`: mean embedding cosine of `e` with the unlinked segments, each
//!   represented by the mean of its word vectors.
//!
//! Missing vectors contribute 0; an interpretation without links scores 0.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::kbstore::{EntityId, KnowledgeSnapshot};
use crate::linker::{elapsed_ms, link_phase, CandidateSet};
use crate::segmentation::{tokenize, Query, ScoredSegmentation, Segment, Segmentation, SkeletonSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for ScoringWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
        }
    }
}

impl ScoringWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let w = Self { alpha, beta, gamma };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// A segment of an interpretation, linked to an entity or kept as a phrase.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct LinkedSegment {
    pub segment: Segment,
    pub link: Option<EntityId>,
}

/// Score components of one linked part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityScore {
    pub part: usize,
    pub entity: EntityId,
    pub cmn: f64,
    pub rel: f64,
    pub cxt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interpretation {
    pub parts: Vec<LinkedSegment>,
    pub score: f64,
    pub components: Vec<EntityScore>,
    /// Rank of the skeleton this interpretation fills.
    pub skeleton_rank: usize,
}

impl Interpretation {
    pub fn unscored(parts: Vec<LinkedSegment>, skeleton_rank: usize) -> Self {
        Self {
            parts,
            score: 0.0,
            components: Vec::new(),
            skeleton_rank,
        }
    }

    /// Linked parts as `(part index, entity)`.
    pub fn linked(&self) -> impl Iterator<Item = (usize, &EntityId)> {
        self.parts
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.link.as_ref().map(|e| (i, e)))
    }

    pub fn linked_count(&self) -> usize {
        self.parts.iter().filter(|p| p.link.is_some()).count()
    }

    /// Identity of the interpretation: segment spans and their links.
    pub fn structure_key(&self) -> Vec<(usize, usize, Option<&EntityId>)> {
        self.parts
            .iter()
            .map(|p| (p.segment.start, p.segment.end, p.link.as_ref()))
            .collect()
    }

    pub fn segment_texts(&self) -> Vec<&str> {
        self.parts.iter().map(|p| p.segment.text.as_str()).collect()
    }

    pub fn segmentation_string(&self) -> String {
        self.segment_texts().join(" | ")
    }
}

impl fmt::Display for Interpretation {
    /// Linked parts print as their entity, unlinked ones as their text.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            match &p.link {
                Some(e) => write!(f, "{e}")?,
                None => f.write_str(&p.segment.text)?,
            }
        }
        Ok(())
    }
}

/// Entities for `segment` with positive commonness, best first (ties by id).
pub fn segment_options(
    kb: &KnowledgeSnapshot,
    candidates: &CandidateSet,
    segment: &Segment,
) -> Vec<(EntityId, f64)> {
    let mut seen = HashSet::new();
    let mut options: Vec<(EntityId, f64)> = candidates
        .get(segment)
        .iter()
        .filter(|c| seen.insert(&c.entity))
        .filter_map(|c| match kb.commonness(&segment.text, &c.entity) {
            Ok(cmn) if cmn > 0.0 => Some((c.entity.clone(), cmn)),
            _ => None,
        })
        .collect();
    options.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    options
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilledSkeleton {
    pub interpretations: Vec<Interpretation>,
    /// Set when the options were pruned to respect the combination cap.
    pub truncated: bool,
}

/// Cartesian product of each segment's options: its positive-commonness
/// entities plus leaving it unlinked.
///
/// When the product would exceed `cap`, the globally weakest entity options
/// are dropped until it fits.
pub fn fill_skeleton(
    skeleton: &Segmentation,
    candidates: &CandidateSet,
    kb: &KnowledgeSnapshot,
    cap: usize,
) -> FilledSkeleton {
    let mut options: Vec<Vec<(EntityId, f64)>> = skeleton
        .segments()
        .iter()
        .map(|s| segment_options(kb, candidates, s))
        .collect();

    let product = |opts: &[Vec<(EntityId, f64)>]| {
        opts.iter().fold(1usize, |acc, o| acc.saturating_mul(o.len() + 1))
    };
    let mut truncated = false;
    while product(&options) > cap.max(1) {
        let weakest = options
            .iter()
            .enumerate()
            .filter_map(|(i, o)| o.last().map(|(_, c)| (i, *c)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .expect("product above 1 implies an entity option");
        options[weakest].pop();
        truncated = true;
    }

    let segments = skeleton.segments();
    let total = product(&options);
    let mut out = Vec::with_capacity(total);
    let mut choice = vec![0usize; segments.len()];
    loop {
        let parts = segments
            .iter()
            .zip(&choice)
            .zip(&options)
            .map(|((seg, &c), opts)| LinkedSegment {
                segment: seg.clone(),
                link: opts.get(c).map(|(e, _)| e.clone()),
            })
            .collect();
        out.push(Interpretation::unscored(parts, 0));

        // Odometer: the last segment varies fastest.
        let mut pos = segments.len();
        loop {
            if pos == 0 {
                return FilledSkeleton {
                    interpretations: out,
                    truncated,
                };
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] <= options[pos].len() {
                break;
            }
            choice[pos] = 0;
        }
    }
}

fn cosine64(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

/// Per-query cache of commonness values and embedding vectors.
struct Scorer<'a> {
    kb: &'a KnowledgeSnapshot,
    entities: HashMap<EntityId, Option<Vec<f64>>>,
    phrases: HashMap<(usize, usize), Option<Vec<f64>>>,
    commonness: HashMap<(usize, usize, EntityId), f64>,
}

impl<'a> Scorer<'a> {
    fn new(kb: &'a KnowledgeSnapshot) -> Self {
        Self {
            kb,
            entities: HashMap::new(),
            phrases: HashMap::new(),
            commonness: HashMap::new(),
        }
    }

    fn entity_vector(&mut self, entity: &EntityId) -> Option<&Vec<f64>> {
        let kb = self.kb;
        self.entities
            .entry(entity.clone())
            .or_insert_with(|| {
                kb.entity_embedding(entity)
                    .map(|v| v.iter().map(|&x| f64::from(x)).collect())
            })
            .as_ref()
    }

    /// Mean of the word vectors of `segment`; `None` if no word has one.
    fn phrase_vector(&mut self, segment: &Segment) -> Option<&Vec<f64>> {
        let kb = self.kb;
        self.phrases
            .entry((segment.start, segment.end))
            .or_insert_with(|| {
                let mut sum = vec![0.0; kb.embeddings().dimension()];
                let mut found = 0usize;
                for word in segment.words() {
                    if let Some(v) = kb.embedding_of(word) {
                        for (s, x) in sum.iter_mut().zip(v) {
                            *s += f64::from(*x);
                        }
                        found += 1;
                    }
                }
                (found > 0).then(|| sum.into_iter().map(|s| s / found as f64).collect())
            })
            .as_ref()
    }

    fn commonness(&mut self, segment: &Segment, entity: &EntityId) -> f64 {
        let kb = self.kb;
        *self
            .commonness
            .entry((segment.start, segment.end, entity.clone()))
            .or_insert_with(|| kb.commonness(&segment.text, entity).unwrap_or(0.0))
    }

    fn relatedness(&mut self, part: usize, interp: &Interpretation) -> f64 {
        let Some(entity) = interp.parts[part].link.as_ref() else {
            return 0.0;
        };
        let others: Vec<&EntityId> = interp
            .linked()
            .filter(|(i, _)| *i != part)
            .map(|(_, e)| e)
            .collect();
        if others.is_empty() {
            return 0.0;
        }
        let Some(v) = self.entity_vector(entity).cloned() else {
            return 0.0;
        };
        let sum: f64 = others
            .iter()
            .map(|o| self.entity_vector(o).map_or(0.0, |w| cosine64(&v, w)))
            .sum();
        sum / others.len() as f64
    }

    fn context(&mut self, part: usize, interp: &Interpretation) -> f64 {
        let Some(entity) = interp.parts[part].link.as_ref() else {
            return 0.0;
        };
        let unlinked: Vec<&Segment> = interp
            .parts
            .iter()
            .filter(|p| p.link.is_none())
            .map(|p| &p.segment)
            .collect();
        if unlinked.is_empty() {
            return 0.0;
        }
        let Some(v) = self.entity_vector(entity).cloned() else {
            return 0.0;
        };
        let sum: f64 = unlinked
            .iter()
            .map(|s| self.phrase_vector(s).map_or(0.0, |w| cosine64(&v, w)))
            .sum();
        sum / unlinked.len() as f64
    }

    fn score(&mut self, interp: &mut Interpretation, weights: &ScoringWeights) -> f64 {
        let mut components = Vec::new();
        for (part, entity) in interp.linked() {
            let cmn = self.commonness(&interp.parts[part].segment, entity);
            let rel = self.relatedness(part, interp);
            let cxt = self.context(part, interp);
            components.push(EntityScore {
                part,
                entity: entity.clone(),
                cmn,
                rel,
                cxt,
            });
        }
        let score = if components.is_empty() {
            0.0
        } else {
            components
                .iter()
                .map(|c| weights.alpha * c.cmn + weights.beta * c.rel + weights.gamma * c.cxt)
                .sum::<f64>()
                / components.len() as f64
        };
        interp.components = components;
        interp.score = score;
        score
    }
}

/// Mean cosine of the entity linked at `part` with the other linked
/// entities; 0 without other links.
pub fn relatedness(kb: &KnowledgeSnapshot, part: usize, interp: &Interpretation) -> f64 {
    Scorer::new(kb).relatedness(part, interp)
}

/// Mean cosine of the entity linked at `part` with the unlinked segments;
/// 0 without unlinked segments.
pub fn context(kb: &KnowledgeSnapshot, part: usize, interp: &Interpretation) -> f64 {
    Scorer::new(kb).context(part, interp)
}

/// Scores `interp` in place (filling its components) and returns the score.
pub fn score_interpretation(
    kb: &KnowledgeSnapshot,
    interp: &mut Interpretation,
    weights: &ScoringWeights,
) -> f64 {
    Scorer::new(kb).score(interp, weights)
}

/// Final ranking: score descending, then more links first, then structure.
pub fn interpretation_order(a: &Interpretation, b: &Interpretation) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| b.linked_count().cmp(&a.linked_count()))
        .then_with(|| a.structure_key().cmp(&b.structure_key()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub segmentation_ms: f64,
    pub linking_ms: f64,
    pub combination_ms: f64,
    pub total_ms: f64,
}

/// Everything produced for one query.
#[derive(Debug, Clone)]
pub struct InterpretationRun {
    pub query: Query,
    pub ranked_segmentations: Vec<ScoredSegmentation>,
    pub skeletons: SkeletonSet,
    pub candidates: CandidateSet,
    /// Ranked, deduplicated, cut to `top_k` when configured.
    pub interpretations: Vec<Interpretation>,
    /// Interpretations generated before the `top_k` cut.
    pub pool_size: usize,
    pub truncated: bool,
    pub timings: PhaseTimings,
}

/// Runs the full pipeline on a raw query string.
pub fn interpret(kb: &KnowledgeSnapshot, raw_query: &str, config: &EngineConfig) -> Result<InterpretationRun> {
    let start = Instant::now();
    let query = tokenize(raw_query)?;
    interpret_query(kb, query, config, start)
}

fn interpret_query(
    kb: &KnowledgeSnapshot,
    query: Query,
    config: &EngineConfig,
    start: Instant,
) -> Result<InterpretationRun> {
    config.validate()?;
    if query.len() > config.max_terms {
        return Err(Error::QueryTooLong {
            terms: query.len(),
            max: config.max_terms,
        });
    }
    let phase = link_phase(kb, &query, config)?;

    let combination = Instant::now();
    let fill = |skeleton: &ScoredSegmentation| {
        let mut filled = fill_skeleton(
            &skeleton.segmentation,
            &phase.candidates,
            kb,
            config.max_combinations,
        );
        let mut scorer = Scorer::new(kb);
        for interp in &mut filled.interpretations {
            interp.skeleton_rank = skeleton.rank;
            scorer.score(interp, &config.weights);
        }
        filled
    };
    let filled: Vec<FilledSkeleton> = if config.parallel && phase.skeletons.retained.len() > 1 {
        phase.skeletons.retained.par_iter().map(fill).collect()
    } else {
        phase.skeletons.retained.iter().map(fill).collect()
    };

    let truncated = filled.iter().any(|f| f.truncated);
    let mut seen = HashSet::new();
    let mut interpretations: Vec<Interpretation> = Vec::new();
    for interp in filled.into_iter().flat_map(|f| f.interpretations) {
        let key: Vec<(usize, usize, Option<EntityId>)> = interp
            .structure_key()
            .into_iter()
            .map(|(s, e, l)| (s, e, l.cloned()))
            .collect();
        if seen.insert(key) {
            interpretations.push(interp);
        }
    }
    interpretations.sort_by(interpretation_order);
    let pool_size = interpretations.len();
    if let Some(k) = config.top_k {
        interpretations.truncate(k);
    }
    let combination_ms = elapsed_ms(combination);

    Ok(InterpretationRun {
        timings: PhaseTimings {
            segmentation_ms: phase.segmentation_ms,
            linking_ms: phase.linking_ms,
            combination_ms,
            total_ms: elapsed_ms(start),
        },
        query,
        ranked_segmentations: phase.ranked,
        skeletons: phase.skeletons,
        candidates: phase.candidates,
        interpretations,
        pool_size,
        truncated,
    })
}
