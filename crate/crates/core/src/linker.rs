//! Recall-oriented candidate linking over every segment of a query, run
//! alongside segmentation.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::config::{EngineConfig, SegmentationMode};
use crate::error::Result;
use crate::kbstore::{EntityId, KnowledgeSnapshot};
use crate::segmentation::{
    filter_skeletons, no_segmentation, rank_segmentations, FilterDecision, Query, ScoredSegmentation,
    Segment, SkeletonSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Exact,
    Fuzzy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub segment: Segment,
    pub entity: EntityId,
    pub match_kind: MatchKind,
    /// 1.0 for exact matches, trigram cosine in (0, 1] for fuzzy ones.
    pub lexical_score: f64,
}

/// Candidates for every segment of a query, keyed by `(start, end)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSet {
    by_span: BTreeMap<(usize, usize), Vec<Candidate>>,
}

impl CandidateSet {
    pub fn get(&self, segment: &Segment) -> &[Candidate] {
        self.get_span(segment.start, segment.end)
    }

    pub fn get_span(&self, start: usize, end: usize) -> &[Candidate] {
        self.by_span.get(&(start, end)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Number of segments covered (including those without candidates).
    pub fn len(&self) -> usize {
        self.by_span.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_span.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &[Candidate])> {
        self.by_span.iter().map(|(k, v)| (*k, v.as_slice()))
    }
}

/// Links all `n(n+1)/2` segments: exact alias matches first, then up to
/// `depth` fuzzy matches not already found exactly.
pub fn candidate_entities(kb: &KnowledgeSnapshot, query: &Query, depth: usize) -> CandidateSet {
    let mut by_span = BTreeMap::new();
    for segment in query.all_segments() {
        let mut list: Vec<Candidate> = kb
            .exact_lookup(&segment.text)
            .into_iter()
            .map(|entity| Candidate {
                segment: segment.clone(),
                entity,
                match_kind: MatchKind::Exact,
                lexical_score: 1.0,
            })
            .collect();
        if depth > 0 {
            // Segments are never empty, so the lookup cannot fail.
            let fuzzy = kb.fuzzy_lookup(&segment.text, depth).unwrap_or_default();
            for (entity, score) in fuzzy {
                if list.iter().any(|c| c.entity == entity) {
                    continue;
                }
                list.push(Candidate {
                    segment: segment.clone(),
                    entity,
                    match_kind: MatchKind::Fuzzy,
                    lexical_score: score,
                });
            }
        }
        by_span.insert((segment.start, segment.end), list);
    }
    CandidateSet { by_span }
}

/// Output of the first two (concurrent) pipeline phases.
#[derive(Debug, Clone)]
pub struct LinkPhase {
    pub ranked: Vec<ScoredSegmentation>,
    pub skeletons: SkeletonSet,
    pub candidates: CandidateSet,
    pub segmentation_ms: f64,
    pub linking_ms: f64,
}

/// Runs skeleton selection and candidate linking over the same query,
/// concurrently when `config.parallel` is set. The result does not depend on
/// the execution order.
pub fn link_phase(kb: &KnowledgeSnapshot, query: &Query, config: &EngineConfig) -> Result<LinkPhase> {
    let segment = || -> Result<(Vec<ScoredSegmentation>, SkeletonSet, f64)> {
        let start = Instant::now();
        let (ranked, skeletons) = match config.segmentation {
            SegmentationMode::None => {
                crate::segmentation::enumerate_segmentations(query, config.max_terms)?;
                let only = no_segmentation(query);
                let skeletons = SkeletonSet {
                    retained: vec![only.clone()],
                    decisions: vec![FilterDecision::Fallback],
                    threshold: config.threshold,
                };
                (vec![only], skeletons)
            }
            mode => {
                let ranked = rank_segmentations(kb, query, mode.weighting(), config.max_terms)?;
                let skeletons = filter_skeletons(&ranked, config.threshold);
                (ranked, skeletons)
            }
        };
        Ok((ranked, skeletons, elapsed_ms(start)))
    };
    let link = || {
        let start = Instant::now();
        let candidates = candidate_entities(kb, query, config.depth);
        (candidates, elapsed_ms(start))
    };

    let (seg, (candidates, linking_ms)) = if config.parallel {
        rayon::join(segment, link)
    } else {
        (segment(), link())
    };
    let (ranked, skeletons, segmentation_ms) = seg?;
    Ok(LinkPhase {
        ranked,
        skeletons,
        candidates,
        segmentation_ms,
        linking_ms,
    })
}

pub(crate) fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1000.0
}
