//! Entity-level and interpretation-level effectiveness metrics, and a
//! single-interpretation baseline.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{EntityKind, GroundTruthInterpretation, GroundTruthRecord};
use crate::error::{Error, Result};
use crate::interpreter::{segment_options, score_interpretation, Interpretation, LinkedSegment, ScoringWeights};
use crate::kbstore::KnowledgeSnapshot;
use crate::linker::LinkPhase;
use crate::records::{InterpretationRecord, RunRecord};
use crate::segmentation::{Query, Segmentation};

/// Raw counts behind one query's entity metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EntityCounts {
    pub hits: usize,
    pub predicted: usize,
    pub gold: usize,
    pub hit_relevance: u64,
    pub gold_relevance: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntityScores {
    pub prec: f64,
    pub rec: f64,
    pub rec_star: f64,
}

fn ratio_or(num: f64, den: f64, empty: f64) -> f64 {
    if den == 0.0 {
        empty
    } else {
        num / den
    }
}

impl EntityCounts {
    /// Piecewise precision / recall / weighted recall. Both sets empty is a
    /// perfect score; an empty side otherwise scores 0.
    pub fn scores(&self) -> EntityScores {
        let both_empty = self.predicted == 0 && self.gold == 0;
        let empty = if both_empty { 1.0 } else { 0.0 };
        EntityScores {
            prec: ratio_or(self.hits as f64, self.predicted as f64, empty),
            rec: ratio_or(self.hits as f64, self.gold as f64, empty),
            rec_star: ratio_or(self.hit_relevance as f64, self.gold_relevance as f64, empty),
        }
    }
}

/// `predicted` is E', `gold` maps each entity of E to its relevance.
pub fn entity_metrics(predicted: &BTreeSet<String>, gold: &BTreeMap<String, u8>) -> EntityCounts {
    let mut counts = EntityCounts {
        predicted: predicted.len(),
        gold: gold.len(),
        gold_relevance: gold.values().map(|&r| u64::from(r)).sum(),
        ..Default::default()
    };
    for e in predicted {
        if let Some(&rel) = gold.get(e) {
            counts.hits += 1;
            counts.hit_relevance += u64::from(rel);
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityQueryResult {
    pub query_id: String,
    pub counts: EntityCounts,
    pub scores: EntityScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityEvalResult {
    pub micro: EntityScores,
    #[serde(rename = "macro")]
    pub macro_: EntityScores,
    pub per_query: Vec<EntityQueryResult>,
}

/// Micro (pooled counts) and macro (mean of per-query values) averages.
pub fn aggregate(per_query: Vec<EntityQueryResult>) -> Result<EntityEvalResult> {
    if per_query.is_empty() {
        return Err(Error::EmptyRun);
    }
    let mut pooled = EntityCounts::default();
    let (mut p, mut r, mut rs) = (0.0, 0.0, 0.0);
    for q in &per_query {
        pooled.hits += q.counts.hits;
        pooled.predicted += q.counts.predicted;
        pooled.gold += q.counts.gold;
        pooled.hit_relevance += q.counts.hit_relevance;
        pooled.gold_relevance += q.counts.gold_relevance;
        p += q.scores.prec;
        r += q.scores.rec;
        rs += q.scores.rec_star;
    }
    let n = per_query.len() as f64;
    Ok(EntityEvalResult {
        micro: pooled.scores(),
        macro_: EntityScores {
            prec: p / n,
            rec: r / n,
            rec_star: rs / n,
        },
        per_query,
    })
}

/// Entity evaluation of a run: E' is every entity linked by any returned
/// interpretation (after `top_k`), E the explicit gold entities.
pub fn evaluate_entities(
    run: &[RunRecord],
    corpus: &[GroundTruthRecord],
    top_k: Option<usize>,
) -> Result<EntityEvalResult> {
    let by_id = index_corpus(corpus);
    check_run_ids(run)?;
    let mut per_query = Vec::with_capacity(run.len());
    for rec in run {
        let gt = by_id
            .get(rec.query_id.as_str())
            .ok_or_else(|| Error::UnknownQuery(rec.query_id.clone()))?;
        let predicted: BTreeSet<String> = cut(&rec.interpretations, top_k)
            .iter()
            .flat_map(|i| i.links.iter().flatten().cloned())
            .collect();
        let mut gold: BTreeMap<String, u8> = BTreeMap::new();
        for e in gt.entities.iter().filter(|e| e.kind == EntityKind::Explicit) {
            let rel = gold.entry(e.entity.clone()).or_insert(0);
            *rel = (*rel).max(e.relevance);
        }
        let counts = entity_metrics(&predicted, &gold);
        per_query.push(EntityQueryResult {
            query_id: rec.query_id.clone(),
            counts,
            scores: counts.scores(),
        });
    }
    aggregate(per_query)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    None,
    Partial,
    Complete,
}

/// An interpretation reduced to `(segment text, link)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterpretationView<'a> {
    pub parts: Vec<(&'a str, Option<&'a str>)>,
}

impl<'a> InterpretationView<'a> {
    fn linked_multiset(&self) -> Vec<&'a str> {
        let mut linked: Vec<&str> = self.parts.iter().filter_map(|(_, l)| *l).collect();
        linked.sort_unstable();
        linked
    }
}

impl<'a> From<&'a InterpretationRecord> for InterpretationView<'a> {
    fn from(r: &'a InterpretationRecord) -> Self {
        Self {
            parts: r
                .parts
                .iter()
                .enumerate()
                .map(|(i, t)| (t.as_str(), r.links.get(i).and_then(|l| l.as_deref())))
                .collect(),
        }
    }
}

impl<'a> From<&'a GroundTruthInterpretation> for InterpretationView<'a> {
    fn from(g: &'a GroundTruthInterpretation) -> Self {
        Self {
            parts: g.parts.iter().map(|p| (p.text.as_str(), p.entity.as_deref())).collect(),
        }
    }
}

impl<'a> From<&'a Interpretation> for InterpretationView<'a> {
    fn from(i: &'a Interpretation) -> Self {
        Self {
            parts: i
                .parts
                .iter()
                .map(|p| (p.segment.text.as_str(), p.link.as_ref().map(|e| e.as_str())))
                .collect(),
        }
    }
}

/// Complete: same segments with the same links. Partial: same multiset of
/// linked entities.
pub fn match_interpretation(predicted: &InterpretationView<'_>, gold: &InterpretationView<'_>) -> MatchKind {
    if predicted.parts == gold.parts {
        MatchKind::Complete
    } else if predicted.linked_multiset() == gold.linked_multiset() {
        MatchKind::Partial
    } else {
        MatchKind::None
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct InterpScores {
    pub recall: f64,
    pub weighted_recall: f64,
    pub precision: f64,
    pub f1: f64,
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryInterpResult {
    pub query_id: String,
    pub gold_classes: usize,
    pub predictions: usize,
    pub partial: InterpScores,
    pub complete: InterpScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpEvalResult {
    pub partial: InterpScores,
    pub complete: InterpScores,
    pub evaluated: usize,
    /// Run queries without any gold interpretation at `min_grade`.
    pub skipped: usize,
    pub mean_latency_ms: Option<f64>,
    pub per_query: Vec<QueryInterpResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpEvalConfig {
    pub min_grade: u8,
    /// Only the first `top_k` interpretations of each query are scored.
    pub top_k: Option<usize>,
}

impl Default for InterpEvalConfig {
    fn default() -> Self {
        Self {
            min_grade: 2,
            top_k: None,
        }
    }
}

fn cut(interps: &[InterpretationRecord], top_k: Option<usize>) -> &[InterpretationRecord] {
    &interps[..top_k.map_or(interps.len(), |k| k.min(interps.len()))]
}

fn index_corpus(corpus: &[GroundTruthRecord]) -> HashMap<&str, &GroundTruthRecord> {
    corpus.iter().map(|r| (r.id.as_str(), r)).collect()
}

fn check_run_ids(run: &[RunRecord]) -> Result<()> {
    if run.is_empty() {
        return Err(Error::EmptyRun);
    }
    let mut seen = HashSet::new();
    for rec in run {
        if !seen.insert(rec.query_id.as_str()) {
            return Err(Error::Schema {
                id: rec.query_id.clone(),
                field: "query_id".into(),
                message: "appears more than once in the run".into(),
            });
        }
    }
    Ok(())
}

/// Gold interpretations at or above `min_grade`, grouped by equivalence
/// class (in class order), each with the best member grade.
fn gold_classes(record: &GroundTruthRecord, min_grade: u8) -> Vec<(u8, Vec<&GroundTruthInterpretation>)> {
    let mut classes: BTreeMap<i64, (u8, Vec<&GroundTruthInterpretation>)> = BTreeMap::new();
    for g in record.interpretations.iter().filter(|g| g.grade >= min_grade) {
        let entry = classes.entry(g.equivalence_class).or_insert((0, Vec::new()));
        entry.0 = entry.0.max(g.grade);
        entry.1.push(g);
    }
    classes.into_values().collect()
}

fn score_query(
    predictions: &[InterpretationRecord],
    classes: &[(u8, Vec<&GroundTruthInterpretation>)],
    at_least: MatchKind,
) -> InterpScores {
    let views: Vec<InterpretationView<'_>> = predictions.iter().map(Into::into).collect();
    let gold: Vec<Vec<InterpretationView<'_>>> = classes
        .iter()
        .map(|(_, members)| members.iter().map(|&g| g.into()).collect())
        .collect();
    let hit = |p: &InterpretationView<'_>, c: &[InterpretationView<'_>]| {
        c.iter().any(|g| match_interpretation(p, g) >= at_least)
    };

    let mut matched_classes = 0usize;
    let (mut matched_grade, mut total_grade) = (0u64, 0u64);
    for ((grade, _), members) in classes.iter().zip(&gold) {
        total_grade += u64::from(*grade);
        if views.iter().any(|p| hit(p, members)) {
            matched_classes += 1;
            matched_grade += u64::from(*grade);
        }
    }
    let matched_predictions = views.iter().filter(|p| gold.iter().any(|c| hit(p, c))).count();

    let recall = ratio_or(matched_classes as f64, classes.len() as f64, 0.0);
    let precision = ratio_or(matched_predictions as f64, views.len() as f64, 0.0);
    InterpScores {
        recall,
        weighted_recall: ratio_or(matched_grade as f64, total_grade as f64, 0.0),
        precision,
        f1: f1(precision, recall),
    }
}

/// Interpretation-level recall, weighted recall, precision and F1 under
/// partial and complete matching, averaged over the evaluated queries.
pub fn interpretation_metrics(
    run: &[RunRecord],
    corpus: &[GroundTruthRecord],
    config: &InterpEvalConfig,
) -> Result<InterpEvalResult> {
    check_run_ids(run)?;
    let by_id = index_corpus(corpus);
    let mut per_query = Vec::new();
    let mut skipped = 0;
    let mut latencies = Vec::new();
    for rec in run {
        let gt = by_id
            .get(rec.query_id.as_str())
            .ok_or_else(|| Error::UnknownQuery(rec.query_id.clone()))?;
        let classes = gold_classes(gt, config.min_grade);
        if classes.is_empty() {
            skipped += 1;
            continue;
        }
        let predictions = cut(&rec.interpretations, config.top_k);
        per_query.push(QueryInterpResult {
            query_id: rec.query_id.clone(),
            gold_classes: classes.len(),
            predictions: predictions.len(),
            partial: score_query(predictions, &classes, MatchKind::Partial),
            complete: score_query(predictions, &classes, MatchKind::Complete),
        });
        latencies.extend(rec.latency_ms);
    }
    if per_query.is_empty() {
        return Err(Error::EmptyRun);
    }

    let mean = |f: fn(&QueryInterpResult) -> InterpScores| {
        let n = per_query.len() as f64;
        let mut acc = InterpScores::default();
        for q in &per_query {
            let s = f(q);
            acc.recall += s.recall;
            acc.weighted_recall += s.weighted_recall;
            acc.precision += s.precision;
            acc.f1 += s.f1;
        }
        InterpScores {
            recall: acc.recall / n,
            weighted_recall: acc.weighted_recall / n,
            precision: acc.precision / n,
            f1: acc.f1 / n,
        }
    };
    Ok(InterpEvalResult {
        partial: mean(|q| q.partial),
        complete: mean(|q| q.complete),
        evaluated: per_query.len(),
        skipped,
        mean_latency_ms: (!latencies.is_empty())
            .then(|| latencies.iter().sum::<f64>() / latencies.len() as f64),
        per_query,
    })
}

/// One interpretation: the top-ranked skeleton with every segment linked to
/// its most common candidate, if it has one.
pub fn baseline_top1(
    kb: &KnowledgeSnapshot,
    query: &Query,
    phase: &LinkPhase,
    weights: &ScoringWeights,
) -> Interpretation {
    let (segmentation, rank) = match phase.skeletons.retained.first() {
        Some(top) => (top.segmentation.clone(), top.rank),
        None => (Segmentation::single_terms(query), 1),
    };
    let parts = segmentation
        .segments()
        .iter()
        .map(|s| LinkedSegment {
            segment: s.clone(),
            link: segment_options(kb, &phase.candidates, s).into_iter().next().map(|(e, _)| e),
        })
        .collect();
    let mut interp = Interpretation::unscored(parts, rank);
    score_interpretation(kb, &mut interp, weights);
    interp
}
