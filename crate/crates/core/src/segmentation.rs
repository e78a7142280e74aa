//! Query segmentation: enumerate every way to cut a query into contiguous
//! segments, score the cuts by n-gram statistics, and keep the promising
//! ones as skeletons for the combination phase.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kbstore::KnowledgeSnapshot;
use crate::text::normalize;

pub const DEFAULT_MAX_TERMS: usize = 16;
pub const DEFAULT_THRESHOLD: f64 = 0.66;

/// A normalized keyword query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    raw: String,
    terms: Vec<String>,
}

impl Query {
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Normalized query text (terms joined by single spaces).
    pub fn text(&self) -> String {
        self.terms.join(" ")
    }

    pub fn segment(&self, start: usize, end: usize) -> Segment {
        assert!(start <= end && end < self.terms.len(), "segment out of range");
        Segment {
            start,
            end,
            text: self.terms[start..=end].join(" "),
        }
    }

    /// Every contiguous segment, ordered by start then end.
    pub fn all_segments(&self) -> Vec<Segment> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for start in 0..n {
            for end in start..n {
                out.push(self.segment(start, end));
            }
        }
        out
    }
}

/// Normalizes `raw` and splits it on whitespace.
pub fn tokenize(raw: &str) -> Result<Query> {
    let normalized = normalize(raw);
    if normalized.is_empty() {
        return Err(Error::EmptyQuery);
    }
    Ok(Query {
        raw: raw.to_string(),
        terms: normalized.split(' ').map(str::to_string).collect(),
    })
}

/// Contiguous term range `start..=end` of a query.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

impl Segment {
    /// Length in terms.
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.text.split(' ')
    }
}

/// Ordered, disjoint segments covering the whole query.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Segmentation {
    segments: Vec<Segment>,
}

impl Segmentation {
    /// Builds the segmentation whose segment lengths are `lengths`.
    pub fn from_lengths(query: &Query, lengths: &[usize]) -> Result<Self> {
        if lengths.iter().sum::<usize>() != query.len() || lengths.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "segment lengths {lengths:?} do not cover a {}-term query",
                query.len()
            )));
        }
        let mut start = 0;
        let segments = lengths
            .iter()
            .map(|&len| {
                let seg = query.segment(start, start + len - 1);
                start += len;
                seg
            })
            .collect();
        Ok(Self { segments })
    }

    /// Bit `i` of `cuts` set means a boundary after term `i`.
    fn from_cuts(query: &Query, cuts: u64) -> Self {
        let n = query.len();
        let mut segments = Vec::new();
        let mut start = 0;
        for i in 0..n {
            if i == n - 1 || cuts & (1 << i) != 0 {
                segments.push(query.segment(start, i));
                start = i + 1;
            }
        }
        Self { segments }
    }

    /// Every term its own segment.
    pub fn single_terms(query: &Query) -> Self {
        Self {
            segments: (0..query.len()).map(|i| query.segment(i, i)).collect(),
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Checks coverage, order and text of every segment against `query`.
    pub fn is_valid_for(&self, query: &Query) -> bool {
        let mut next = 0;
        for seg in &self.segments {
            if seg.start != next || seg.end < seg.start || seg.end >= query.len() {
                return false;
            }
            if seg.text != query.terms[seg.start..=seg.end].join(" ") {
                return false;
            }
            next = seg.end + 1;
        }
        next == query.len() && !self.segments.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.segments.iter().map(|s| s.text.as_str()).collect()
    }
}

impl fmt::Display for Segmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.segments.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            f.write_str(&seg.text)?;
        }
        Ok(())
    }
}

/// All `2^(n-1)` segmentations of `query`.
pub fn enumerate_segmentations(query: &Query, max_terms: usize) -> Result<Vec<Segmentation>> {
    let n = query.len();
    if n > max_terms || n > 63 {
        return Err(Error::QueryTooLong {
            terms: n,
            max: max_terms.min(63),
        });
    }
    let count = 1u64 << (n - 1);
    Ok((0..count).map(|cuts| Segmentation::from_cuts(query, cuts)).collect())
}

/// Per-segment weight used to score segmentations. `None` marks a segment
/// without a known frequency, which forces the segmentation score to -1.
pub trait SegmentWeighting: Send + Sync + fmt::Debug {
    fn weight(&self, kb: &KnowledgeSnapshot, segment: &Segment) -> Option<f64>;
}

/// Frequency weighting with a boost for knowledge-base titles and redirects.
///
/// Single-term segments weigh 0. A multi-term title or redirect weighs
/// `(1 + f) * |s|` where `f` is the largest frequency of a word bigram inside
/// it (0 if none is known). Any other multi-term segment weighs its own
/// n-gram frequency times `|s|`, or is absent.
#[derive(Debug, Clone, Copy, Default)]
pub struct TitleAwareWeighting;

impl SegmentWeighting for TitleAwareWeighting {
    fn weight(&self, kb: &KnowledgeSnapshot, segment: &Segment) -> Option<f64> {
        let len = segment.len();
        if len == 1 {
            return Some(0.0);
        }
        if kb.is_title_or_redirect(&segment.text) {
            let words: Vec<&str> = segment.words().collect();
            let best = words
                .windows(2)
                .filter_map(|w| kb.ngram_frequency(&format!("{} {}", w[0], w[1])))
                .max()
                .unwrap_or(0);
            return Some((best as f64 + 1.0) * len as f64);
        }
        kb.ngram_frequency(&segment.text).map(|f| f as f64 * len as f64)
    }
}

/// Plain frequency weighting: `f(s) * |s|` for every multi-term segment.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrequencyWeighting;

impl SegmentWeighting for FrequencyWeighting {
    fn weight(&self, kb: &KnowledgeSnapshot, segment: &Segment) -> Option<f64> {
        if segment.len() == 1 {
            return Some(0.0);
        }
        kb.ngram_frequency(&segment.text)
            .map(|f| f as f64 * segment.len() as f64)
    }
}

/// Weight of `segment` under the default [`TitleAwareWeighting`].
pub fn segment_weight(kb: &KnowledgeSnapshot, segment: &Segment) -> Option<f64> {
    TitleAwareWeighting.weight(kb, segment)
}

/// A segmentation with its segment weights, score and (1-based) rank.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSegmentation {
    pub segmentation: Segmentation,
    pub weights: Vec<Option<f64>>,
    pub score: f64,
    pub rank: usize,
}

impl ScoredSegmentation {
    fn from_weights(segmentation: Segmentation, weights: Vec<Option<f64>>) -> Self {
        let score = score_from_weights(&weights);
        Self {
            segmentation,
            weights,
            score,
            rank: 0,
        }
    }

    /// Segment with the largest weight, leftmost on ties.
    pub fn heaviest_segment(&self) -> &Segment {
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if w.unwrap_or(f64::NEG_INFINITY) > self.weights[best].unwrap_or(f64::NEG_INFINITY) {
                best = i;
            }
        }
        &self.segmentation.segments[best]
    }
}

fn score_from_weights(weights: &[Option<f64>]) -> f64 {
    weights
        .iter()
        .try_fold(0.0, |acc, w| w.map(|w| acc + w))
        .unwrap_or(-1.0)
}

/// Scores a segmentation under `weighting`.
pub fn score_with(
    weighting: &dyn SegmentWeighting,
    kb: &KnowledgeSnapshot,
    segmentation: &Segmentation,
) -> ScoredSegmentation {
    let weights = segmentation
        .segments
        .iter()
        .map(|s| weighting.weight(kb, s))
        .collect();
    ScoredSegmentation::from_weights(segmentation.clone(), weights)
}

/// Sum of segment weights under the default weighting; -1 when some
/// multi-term segment has no known frequency.
pub fn score_segmentation(kb: &KnowledgeSnapshot, segmentation: &Segmentation) -> f64 {
    score_with(&TitleAwareWeighting, kb, segmentation).score
}

/// Ranking order: higher score first; on equal scores the finer
/// segmentation first, then segment texts lexicographically.
fn ranking_order(a: &ScoredSegmentation, b: &ScoredSegmentation) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| b.segmentation.len().cmp(&a.segmentation.len()))
        .then_with(|| a.segmentation.texts().cmp(&b.segmentation.texts()))
}

/// Scores and ranks every segmentation of `query`.
pub fn rank_segmentations(
    kb: &KnowledgeSnapshot,
    query: &Query,
    weighting: &dyn SegmentWeighting,
    max_terms: usize,
) -> Result<Vec<ScoredSegmentation>> {
    let all = enumerate_segmentations(query, max_terms)?;
    let n = query.len();
    // Each of the n(n+1)/2 segment weights is looked up once.
    let mut table = vec![None; n * n];
    for seg in query.all_segments() {
        table[seg.start * n + seg.end] = weighting.weight(kb, &seg);
    }
    let mut scored: Vec<ScoredSegmentation> = all
        .into_iter()
        .map(|s| {
            let weights = s.segments.iter().map(|seg| table[seg.start * n + seg.end]).collect();
            ScoredSegmentation::from_weights(s, weights)
        })
        .collect();
    scored.sort_by(ranking_order);
    for (i, s) in scored.iter_mut().enumerate() {
        s.rank = i + 1;
    }
    Ok(scored)
}

/// Why a ranked segmentation was kept or dropped by [`filter_skeletons`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum FilterDecision {
    /// Kept; `ratio` is the score ratio to the previous kept segmentation.
    Retained { ratio: Option<f64> },
    /// Kept only because no segmentation scored above zero.
    Fallback,
    /// Heaviest segment already appears in a kept segmentation.
    Contained { segment: String },
    /// Score ratio to the previous kept segmentation fell below the threshold.
    BelowRatio { ratio: f64 },
    /// Score is not positive.
    NonPositive,
    /// Ranked below a ratio failure.
    Cut,
}

impl FilterDecision {
    pub fn is_retained(&self) -> bool {
        matches!(self, Self::Retained { .. } | Self::Fallback)
    }
}

/// Segmentations forwarded to the combination phase.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSet {
    pub retained: Vec<ScoredSegmentation>,
    /// One entry per input segmentation, in ranked order.
    pub decisions: Vec<FilterDecision>,
    pub threshold: f64,
}

/// Applies the two skeleton filters to a ranked list.
///
/// Walking down the ranking, a segmentation is dropped when its heaviest
/// segment already occurs in a kept segmentation. Otherwise its score is
/// compared with the last kept one; the first ratio below `threshold` ends
/// retention. Non-positive scores are never kept, except that a query with no
/// positive segmentation keeps its all-single-term segmentation.
pub fn filter_skeletons(ranked: &[ScoredSegmentation], threshold: f64) -> SkeletonSet {
    debug_assert!(threshold > 0.0 && threshold <= 1.0);
    let mut retained: Vec<ScoredSegmentation> = Vec::new();
    let mut decisions = Vec::with_capacity(ranked.len());
    let mut cut = false;

    for candidate in ranked {
        if cut {
            decisions.push(FilterDecision::Cut);
            continue;
        }
        if candidate.score <= 0.0 {
            decisions.push(FilterDecision::NonPositive);
            continue;
        }
        let heaviest = candidate.heaviest_segment();
        let contained = retained.iter().any(|r| {
            r.segmentation.segments.iter().any(|s| s.text == heaviest.text)
        });
        if contained {
            decisions.push(FilterDecision::Contained {
                segment: heaviest.text.clone(),
            });
            continue;
        }
        let ratio = retained.last().map(|last| candidate.score / last.score);
        if let Some(r) = ratio {
            if r < threshold {
                decisions.push(FilterDecision::BelowRatio { ratio: r });
                cut = true;
                continue;
            }
        }
        decisions.push(FilterDecision::Retained { ratio });
        retained.push(candidate.clone());
    }

    if retained.is_empty() && !ranked.is_empty() {
        let n_terms = ranked[0].segmentation.segments.last().map_or(0, |s| s.end + 1);
        let idx = ranked
            .iter()
            .position(|s| s.segmentation.len() == n_terms)
            .unwrap_or(0);
        decisions[idx] = FilterDecision::Fallback;
        retained.push(ranked[idx].clone());
    }

    SkeletonSet {
        retained,
        decisions,
        threshold,
    }
}

/// The baseline that skips segmentation: each term is its own segment.
pub fn no_segmentation(query: &Query) -> ScoredSegmentation {
    let segmentation = Segmentation::single_terms(query);
    let weights = vec![Some(0.0); segmentation.len()];
    let mut scored = ScoredSegmentation::from_weights(segmentation, weights);
    scored.rank = 1;
    scored
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kbstore::{AliasSource, EntityId, SnapshotBuilder};

    fn q(s: &str) -> Query {
        tokenize(s).unwrap()
    }

    fn kb() -> KnowledgeSnapshot {
        let mut b = SnapshotBuilder::new();
        let id = |s: &str| EntityId::new(s).unwrap();
        b.add_alias("new york", id("New_York_City"), AliasSource::Title).unwrap();
        b.add_alias("new york times", id("The_New_York_Times"), AliasSource::Title).unwrap();
        b.add_alias("square dance", id("Square_Dance"), AliasSource::Title).unwrap();
        b.add_alias("salsa verde", id("Salsa_Verde"), AliasSource::Disambiguation).unwrap();
        b.add_ngram("new york", 165_400_000).unwrap();
        b.add_ngram("square dance", 210_440).unwrap();
        b.add_ngram("salsa verde", 5_000).unwrap();
        b.build()
    }

    #[test]
    fn tokenize_normalizes() {
        assert_eq!(q("New York  Times").terms(), ["new", "york", "times"]);
        assert_eq!(q("a").len(), 1);
        assert_eq!(q("new york times square dance").len(), 5);
        assert!(matches!(tokenize("   "), Err(Error::EmptyQuery)));
    }

    #[test]
    fn enumeration_counts() {
        for (text, count) in [("a", 1), ("a b c", 4), ("a b c d e", 16)] {
            let all = enumerate_segmentations(&q(text), DEFAULT_MAX_TERMS).unwrap();
            assert_eq!(all.len(), count);
            let unique: std::collections::HashSet<_> = all.iter().collect();
            assert_eq!(unique.len(), count);
            assert!(all.iter().all(|s| s.is_valid_for(&q(text))));
        }
    }

    #[test]
    fn enumeration_rejects_long_queries() {
        let long = vec!["w"; 17].join(" ");
        assert!(matches!(
            enumerate_segmentations(&q(&long), DEFAULT_MAX_TERMS),
            Err(Error::QueryTooLong { terms: 17, max: 16 })
        ));
    }

    #[test]
    fn weights() {
        let kb = kb();
        let query = q("new york times square dance");
        assert_eq!(segment_weight(&kb, &query.segment(0, 2)), Some(496_200_003.0));
        assert_eq!(segment_weight(&kb, &query.segment(3, 4)), Some(420_882.0));
        assert_eq!(segment_weight(&kb, &query.segment(4, 4)), Some(0.0));
        assert_eq!(segment_weight(&kb, &query.segment(1, 2)), None);
    }

    #[test]
    fn title_without_bigram_frequency_weighs_its_length() {
        let mut b = SnapshotBuilder::new();
        b.add_alias("foo bar baz", EntityId::new("Foo").unwrap(), AliasSource::Redirect).unwrap();
        let kb = b.build();
        let query = q("foo bar baz");
        assert_eq!(segment_weight(&kb, &query.segment(0, 2)), Some(3.0));
    }

    #[test]
    fn disambiguation_surface_uses_plain_frequency() {
        let kb = kb();
        let query = q("salsa verde");
        assert_eq!(segment_weight(&kb, &query.segment(0, 1)), Some(10_000.0));
    }

    #[test]
    fn frequency_weighting_ignores_titles() {
        let kb = kb();
        let query = q("new york times");
        assert_eq!(FrequencyWeighting.weight(&kb, &query.segment(0, 2)), None);
        assert_eq!(FrequencyWeighting.weight(&kb, &query.segment(0, 1)), Some(330_800_000.0));
    }

    #[test]
    fn scoring_rules() {
        let kb = kb();
        let query = q("new york times square dance");
        let s = |lengths: &[usize]| Segmentation::from_lengths(&query, lengths).unwrap();
        assert_eq!(score_segmentation(&kb, &s(&[3, 2])), 496_620_885.0);
        assert_eq!(score_segmentation(&kb, &s(&[1, 1, 1, 1, 1])), 0.0);
        assert_eq!(score_segmentation(&kb, &s(&[1, 4])), -1.0);
    }

    #[test]
    fn ranking_is_total_and_stable() {
        let kb = kb();
        let query = q("new york times square dance");
        let a = rank_segmentations(&kb, &query, &TitleAwareWeighting, 16).unwrap();
        let b = rank_segmentations(&kb, &query, &TitleAwareWeighting, 16).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].segmentation.to_string(), "new york times | square dance");
        assert!(a.windows(2).all(|w| ranking_order(&w[0], &w[1]) == Ordering::Less));
        assert_eq!(a.iter().map(|s| s.rank).collect::<Vec<_>>(), (1..=16).collect::<Vec<_>>());
    }

    #[test]
    fn single_term_query_has_one_zero_segmentation() {
        let kb = kb();
        let ranked = rank_segmentations(&kb, &q("dance"), &TitleAwareWeighting, 16).unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].score, 0.0);
        let skeletons = filter_skeletons(&ranked, DEFAULT_THRESHOLD);
        assert_eq!(skeletons.retained.len(), 1);
        assert_eq!(skeletons.decisions, vec![FilterDecision::Fallback]);
    }

    #[test]
    fn unseen_query_falls_back_to_single_terms() {
        let kb = kb();
        let query = q("zzqx qqzx wwqz");
        let ranked = rank_segmentations(&kb, &query, &TitleAwareWeighting, 16).unwrap();
        let skeletons = filter_skeletons(&ranked, DEFAULT_THRESHOLD);
        assert_eq!(skeletons.retained.len(), 1);
        assert_eq!(skeletons.retained[0].segmentation, Segmentation::single_terms(&query));
    }

    #[test]
    fn no_segmentation_baseline() {
        let query = q("new york times square dance");
        let s = no_segmentation(&query);
        assert_eq!(s.segmentation.len(), 5);
        assert_eq!(s.score, 0.0);
        let one = q("dance");
        assert_eq!(no_segmentation(&one).segmentation, enumerate_segmentations(&one, 16).unwrap()[0]);
    }

    #[test]
    fn heaviest_segment_prefers_leftmost_on_ties() {
        let query = q("a b c d");
        let seg = Segmentation::from_lengths(&query, &[2, 2]).unwrap();
        let scored = ScoredSegmentation::from_weights(seg, vec![Some(5.0), Some(5.0)]);
        assert_eq!(scored.heaviest_segment().text, "a b");
    }
}
