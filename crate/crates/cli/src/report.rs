//! Human-readable tables for `--pretty`.

use std::io::{self, Write};

use qinterp_core::evaluation::{EntityEvalResult, InterpEvalResult, InterpScores};
use qinterp_core::records::InterpretResponse;
use qinterp_core::segmentation::{FilterDecision, ScoredSegmentation, SkeletonSet};

use crate::commands::{BenchReport, LinkLine};

fn decision_text(d: &FilterDecision) -> String {
    match d {
        FilterDecision::Retained { ratio: Some(r) } => format!("kept  {r:.3}"),
        FilterDecision::Retained { ratio: None } => "kept".into(),
        FilterDecision::Fallback => "kept (fallback)".into(),
        FilterDecision::Contained { segment } => format!("drop  `{segment}` already kept"),
        FilterDecision::BelowRatio { ratio } => format!("drop  {ratio:.3}"),
        FilterDecision::NonPositive => "drop  score".into(),
        FilterDecision::Cut => "drop".into(),
    }
}

pub fn segmentations(out: &mut dyn Write, ranked: &[ScoredSegmentation], skeletons: &SkeletonSet) -> io::Result<()> {
    let width = ranked.iter().map(|s| s.segmentation.to_string().len()).max().unwrap_or(0).max(12);
    writeln!(out, "{:>4}  {:<width$}  {:>16}  filter", "rank", "segmentation", "score")?;
    for (s, d) in ranked.iter().zip(&skeletons.decisions) {
        writeln!(
            out,
            "{:>4}  {:<width$}  {:>16}  {}",
            s.rank,
            s.segmentation.to_string(),
            s.score,
            decision_text(d)
        )?;
    }
    Ok(())
}

pub fn candidates(out: &mut dyn Write, lines: &[LinkLine]) -> io::Result<()> {
    for line in lines {
        writeln!(out, "{} [{}..{}]", line.segment, line.start, line.end)?;
        if line.candidates.is_empty() {
            writeln!(out, "    (none)")?;
        }
        for c in &line.candidates {
            let cmn = c.commonness.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
            writeln!(out, "    {:<40} {:>5?} {:>6.3}  cmn {cmn}", c.entity, c.match_kind, c.lexical_score)?;
        }
    }
    Ok(())
}

pub fn interpretations(out: &mut dyn Write, response: &InterpretResponse) -> io::Result<()> {
    writeln!(out, "{}", response.query)?;
    for (i, interp) in response.interpretations.iter().enumerate() {
        let shown: Vec<String> = interp
            .parts
            .iter()
            .zip(&interp.links)
            .map(|(p, l)| match l {
                Some(e) => format!("{p} -> {e}"),
                None => p.clone(),
            })
            .collect();
        writeln!(out, "{:>4}  {:>8.4}  {}", i + 1, interp.score, shown.join(" | "))?;
    }
    let t = &response.timings;
    writeln!(
        out,
        "      segmentation {:.3} ms, linking {:.3} ms, combination {:.3} ms, total {:.3} ms{}",
        t.segmentation_ms,
        t.linking_ms,
        t.combination_ms,
        t.total_ms,
        if response.truncated { " (truncated)" } else { "" }
    )
}

fn score_row(out: &mut dyn Write, label: &str, s: &InterpScores) -> io::Result<()> {
    writeln!(
        out,
        "{label:<10} {:>7.3} {:>7.3} {:>7.3} {:>7.3}",
        s.recall, s.weighted_recall, s.precision, s.f1
    )
}

pub fn evaluation(out: &mut dyn Write, entity: &EntityEvalResult, interp: &InterpEvalResult, per_query: bool) -> io::Result<()> {
    writeln!(out, "entities ({} queries)", entity.per_query.len())?;
    writeln!(out, "{:<10} {:>7} {:>7} {:>7}", "", "P", "R", "R*")?;
    for (label, s) in [("micro", &entity.micro), ("macro", &entity.macro_)] {
        writeln!(out, "{label:<10} {:>7.3} {:>7.3} {:>7.3}", s.prec, s.rec, s.rec_star)?;
    }
    writeln!(out)?;
    writeln!(out, "interpretations ({} queries, {} without gold skipped)", interp.evaluated, interp.skipped)?;
    writeln!(out, "{:<10} {:>7} {:>7} {:>7} {:>7}", "", "R", "R*", "P", "F1")?;
    score_row(out, "partial", &interp.partial)?;
    score_row(out, "complete", &interp.complete)?;
    if let Some(ms) = interp.mean_latency_ms {
        writeln!(out, "mean latency {ms:.3} ms/query")?;
    }
    if per_query {
        writeln!(out)?;
        for q in &interp.per_query {
            writeln!(
                out,
                "{:<12} partial R {:.3} P {:.3}  complete R {:.3} P {:.3}",
                q.query_id, q.partial.recall, q.partial.precision, q.complete.recall, q.complete.precision
            )?;
        }
    }
    Ok(())
}

pub fn bench(out: &mut dyn Write, report: &BenchReport) -> io::Result<()> {
    writeln!(
        out,
        "{} queries x {} repetitions ({} samples)",
        report.queries, report.repetitions, report.samples
    )?;
    writeln!(out, "mean {:.3} ms   p50 {:.3} ms   p95 {:.3} ms   max {:.3} ms", report.mean_ms, report.p50_ms, report.p95_ms, report.max_ms)?;
    let p = &report.phases;
    writeln!(
        out,
        "phases: segmentation {:.3} ms, linking {:.3} ms, combination {:.3} ms",
        p.segmentation_ms, p.linking_ms, p.combination_ms
    )
}
