use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use qinterp_core::config::EngineConfig;
use qinterp_core::corpus::{load_corpus, split_corpus, write_split, SplitConfig};
use qinterp_core::evaluation::{baseline_top1, evaluate_entities, interpretation_metrics, InterpEvalConfig};
use qinterp_core::interpreter::{interpret, PhaseTimings};
use qinterp_core::kbstore::{ingest_snapshot, KnowledgeSnapshot, SnapshotSources};
use qinterp_core::linker::{link_phase, MatchKind};
use qinterp_core::records::{read_jsonl, InterpretResponse, InterpretationRecord, RunRecord};
use qinterp_core::segmentation::{tokenize, FilterDecision};
use serde::Serialize;

use crate::args::{BenchArgs, EngineArgs, EvaluateArgs, IngestArgs, InterpretArgs, QueryArgs, SplitArgs};
use crate::report;

/// Opens a binary snapshot, or loads source files when no manifest exists.
pub fn load_kb(path: &Path) -> Result<KnowledgeSnapshot> {
    let kb = if path.join("manifest.json").is_file() {
        KnowledgeSnapshot::open(path)?
    } else if path.is_dir() {
        SnapshotSources::in_dir(path).load()?
    } else {
        bail!(qinterp_core::Error::Snapshot {
            path: path.to_path_buf(),
            message: "not a directory".into(),
        });
    };
    tracing::debug!(aliases = kb.alias_count(), anchors = kb.anchor_count(), "snapshot loaded");
    Ok(kb)
}

fn engine(args: &EngineArgs) -> Result<(KnowledgeSnapshot, EngineConfig)> {
    let config = args.config()?;
    let kb = load_kb(&args.kb).with_context(|| format!("loading knowledge base {}", args.kb.display()))?;
    Ok((kb, config))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn json_line<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn ingest(args: &IngestArgs, pretty: bool) -> Result<()> {
    let kb = ingest_snapshot(&SnapshotSources::in_dir(&args.source), &args.out)?;
    let manifest = KnowledgeSnapshot::read_manifest(&args.out)?;
    let mut out = sink(None)?;
    if pretty {
        writeln!(out, "snapshot written to {}", args.out.display())?;
        writeln!(out, "  surfaces    {}", kb.surface_count())?;
        writeln!(out, "  aliases     {}", kb.alias_count())?;
        writeln!(out, "  anchors     {}", kb.anchor_count())?;
        writeln!(out, "  n-grams     {}", kb.ngram_count())?;
        writeln!(out, "  embeddings  {} x {}", kb.embeddings().len(), kb.embeddings().dimension())?;
    } else {
        json_line(&mut *out, &manifest)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SegmentLine<'a> {
    rank: usize,
    segmentation: String,
    score: f64,
    weights: &'a [Option<f64>],
    retained: bool,
    #[serde(flatten)]
    decision: &'a FilterDecision,
}

pub fn segment(args: &QueryArgs, pretty: bool) -> Result<()> {
    let (kb, config) = engine(&args.engine)?;
    let query = tokenize(&args.query)?;
    let phase = link_phase(&kb, &query, &config)?;
    let mut out = sink(None)?;
    if pretty {
        report::segmentations(&mut *out, &phase.ranked, &phase.skeletons)?;
    } else {
        for (s, decision) in phase.ranked.iter().zip(&phase.skeletons.decisions) {
            json_line(
                &mut *out,
                &SegmentLine {
                    rank: s.rank,
                    segmentation: s.segmentation.to_string(),
                    score: s.score,
                    weights: &s.weights,
                    retained: decision.is_retained(),
                    decision,
                },
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
pub struct CandidateLine {
    pub entity: String,
    #[serde(rename = "match")]
    pub match_kind: MatchKind,
    pub lexical_score: f64,
    pub commonness: Option<f64>,
}

#[derive(Serialize)]
pub struct LinkLine {
    pub segment: String,
    pub start: usize,
    pub end: usize,
    pub candidates: Vec<CandidateLine>,
}

pub fn link(args: &QueryArgs, pretty: bool) -> Result<()> {
    let (kb, config) = engine(&args.engine)?;
    let query = tokenize(&args.query)?;
    let phase = link_phase(&kb, &query, &config)?;
    let lines: Vec<LinkLine> = phase
        .candidates
        .iter()
        .map(|((start, end), cands)| {
            let segment = query.segment(start, end).text;
            LinkLine {
                candidates: cands
                    .iter()
                    .map(|c| CandidateLine {
                        entity: c.entity.to_string(),
                        match_kind: c.match_kind,
                        lexical_score: c.lexical_score,
                        commonness: kb.commonness(&segment, &c.entity).ok(),
                    })
                    .collect(),
                segment,
                start,
                end,
            }
        })
        .collect();
    let mut out = sink(None)?;
    if pretty {
        report::candidates(&mut *out, &lines)?;
    } else {
        for line in &lines {
            json_line(&mut *out, line)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Interpretations for one query, as served by the CLI and the service.
pub fn respond(kb: &KnowledgeSnapshot, raw: &str, config: &EngineConfig, baseline: bool) -> qinterp_core::Result<InterpretResponse> {
    if !baseline {
        return interpret(kb, raw, config).map(|run| InterpretResponse::from(&run));
    }
    let start = Instant::now();
    let query = tokenize(raw)?;
    if query.len() > config.max_terms {
        return Err(qinterp_core::Error::QueryTooLong {
            terms: query.len(),
            max: config.max_terms,
        });
    }
    let phase = link_phase(kb, &query, config)?;
    let combination = Instant::now();
    let top = baseline_top1(kb, &query, &phase, &config.weights);
    let combination_ms = combination.elapsed().as_secs_f64() * 1000.0;
    Ok(InterpretResponse {
        query: query.text(),
        interpretations: vec![InterpretationRecord::from(&top)],
        timings: PhaseTimings {
            segmentation_ms: phase.segmentation_ms,
            linking_ms: phase.linking_ms,
            combination_ms,
            total_ms: start.elapsed().as_secs_f64() * 1000.0,
        },
        truncated: false,
    })
}

pub fn interpret_cmd(args: &InterpretArgs, pretty: bool) -> Result<()> {
    let (kb, config) = engine(&args.engine)?;
    let mut out = sink(args.output.as_deref())?;

    if let Some(corpus_path) = &args.batch {
        let corpus = load_corpus(corpus_path)?;
        for record in &corpus {
            let response = respond(&kb, &record.query, &config, args.baseline)
                .with_context(|| format!("query {}", record.id))?;
            let run = RunRecord {
                query_id: record.id.clone(),
                interpretations: response.interpretations,
                latency_ms: Some(response.timings.total_ms),
            };
            json_line(&mut *out, &run)?;
        }
        tracing::info!(queries = corpus.len(), "run written");
    } else {
        let queries: Vec<String> = match (&args.query, &args.queries) {
            (Some(q), _) => vec![q.clone()],
            (None, Some(file)) => read_queries(file)?,
            (None, None) => unreachable!("clap requires a query source"),
        };
        for q in &queries {
            let response = respond(&kb, q, &config, args.baseline).with_context(|| format!("query `{q}`"))?;
            if pretty {
                report::interpretations(&mut *out, &response)?;
            } else {
                json_line(&mut *out, &response)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn read_queries(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let queries: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    if queries.is_empty() {
        bail!("{} contains no queries", path.display());
    }
    Ok(queries)
}

#[derive(Serialize)]
struct EvaluationReport {
    entity: qinterp_core::evaluation::EntityEvalResult,
    interpretation: qinterp_core::evaluation::InterpEvalResult,
}

pub fn evaluate(args: &EvaluateArgs, pretty: bool) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let run: Vec<RunRecord> = read_jsonl(&args.run)?;
    let mut entity = evaluate_entities(&run, &corpus, args.top_k)?;
    let config = InterpEvalConfig {
        min_grade: args.min_grade,
        top_k: args.top_k,
    };
    let mut interpretation = interpretation_metrics(&run, &corpus, &config)?;
    if interpretation.skipped > 0 {
        tracing::warn!(skipped = interpretation.skipped, min_grade = args.min_grade, "queries without gold interpretations");
    }
    let mut out = sink(None)?;
    if pretty {
        report::evaluation(&mut *out, &entity, &interpretation, args.per_query)?;
    } else {
        if !args.per_query {
            entity.per_query.clear();
            interpretation.per_query.clear();
        }
        json_line(&mut *out, &EvaluationReport { entity, interpretation })?;
    }
    out.flush()?;
    Ok(())
}

pub fn split(args: &SplitArgs, pretty: bool) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let config = SplitConfig {
        ratio: args.ratio,
        error_threshold: args.error_threshold,
        seed: args.seed,
        max_iters: args.max_iters,
        ..Default::default()
    };
    let split = split_corpus(&corpus, &config)?;
    if !split.converged {
        tracing::warn!(error = split.error, threshold = args.error_threshold, "error threshold not reached");
    }
    write_split(&args.out, &split)?;
    let mut out = sink(None)?;
    if pretty {
        writeln!(out, "train  {:>6}  ({:.1}%)", split.train.len(), split.train_share() * 100.0)?;
        writeln!(out, "test   {:>6}", split.test.len())?;
        writeln!(out, "error  {:.4}  after {} iterations{}", split.error, split.iterations, if split.converged { "" } else { " (not converged)" })?;
    } else {
        json_line(
            &mut *out,
            &serde_json::json!({
                "train": split.train.len(),
                "test": split.test.len(),
                "error": split.error,
                "iterations": split.iterations,
                "converged": split.converged,
                "seed": split.seed,
                "out": args.out,
            }),
        )?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct BenchQuery {
    pub query: String,
    pub interpretations: usize,
    pub top: Option<String>,
    pub mean_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub queries: usize,
    pub repetitions: u32,
    pub samples: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
    pub phases: PhaseTimings,
    pub per_query: Vec<BenchQuery>,
}

/// Nearest-rank percentile of sorted samples.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn run_bench(kb: &KnowledgeSnapshot, config: &EngineConfig, queries: &[String], repetitions: u32, warmup: bool) -> Result<BenchReport> {
    if warmup {
        for q in queries {
            interpret(kb, q, config)?;
        }
    }
    let mut samples = Vec::with_capacity(queries.len() * repetitions as usize);
    let mut phases = PhaseTimings::default();
    let mut per_query = Vec::with_capacity(queries.len());
    for q in queries {
        let mut sum = 0.0;
        let mut last = None;
        for _ in 0..repetitions {
            let start = Instant::now();
            let run = interpret(kb, q, config).with_context(|| format!("query `{q}`"))?;
            let ms = start.elapsed().as_secs_f64() * 1000.0;
            sum += ms;
            samples.push(ms);
            phases.segmentation_ms += run.timings.segmentation_ms;
            phases.linking_ms += run.timings.linking_ms;
            phases.combination_ms += run.timings.combination_ms;
            phases.total_ms += run.timings.total_ms;
            last = Some(run);
        }
        let run = last.expect("at least one repetition");
        per_query.push(BenchQuery {
            query: run.query.text(),
            interpretations: run.interpretations.len(),
            top: run.interpretations.first().map(|i| i.to_string()),
            mean_ms: sum / f64::from(repetitions),
        });
    }
    let n = samples.len() as f64;
    phases.segmentation_ms /= n;
    phases.linking_ms /= n;
    phases.combination_ms /= n;
    phases.total_ms /= n;
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(BenchReport {
        queries: queries.len(),
        repetitions,
        samples: samples.len(),
        mean_ms: samples.iter().sum::<f64>() / n,
        p50_ms: percentile(&sorted, 50.0),
        p95_ms: percentile(&sorted, 95.0),
        max_ms: sorted.last().copied().unwrap_or(0.0),
        phases,
        per_query,
    })
}

pub fn bench(args: &BenchArgs, pretty: bool) -> Result<()> {
    let (kb, config) = engine(&args.engine)?;
    let queries = read_queries(&args.queries)?;
    let report = run_bench(&kb, &config, &queries, args.repetitions, !args.no_warmup)?;
    let mut out = sink(None)?;
    if pretty {
        report::bench(&mut *out, &report)?;
    } else {
        json_line(&mut *out, &report)?;
    }
    out.flush()?;
    Ok(())
}
