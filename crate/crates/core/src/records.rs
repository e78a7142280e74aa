//! Serialized forms shared by the CLI, the service and the evaluator.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interpreter::{Interpretation, InterpretationRun, PhaseTimings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub part: usize,
    pub entity: String,
    pub cmn: f64,
    pub rel: f64,
    pub cxt: f64,
}

/// One interpretation: segment texts in query order and a link per segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationRecord {
    pub parts: Vec<String>,
    pub links: Vec<Option<String>>,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skeleton_rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<ComponentRecord>,
}

impl From<&Interpretation> for InterpretationRecord {
    fn from(interp: &Interpretation) -> Self {
        Self {
            parts: interp.parts.iter().map(|p| p.segment.text.clone()).collect(),
            links: interp
                .parts
                .iter()
                .map(|p| p.link.as_ref().map(|e| e.as_str().to_string()))
                .collect(),
            score: interp.score,
            skeleton_rank: Some(interp.skeleton_rank),
            components: interp
                .components
                .iter()
                .map(|c| ComponentRecord {
                    part: c.part,
                    entity: c.entity.as_str().to_string(),
                    cmn: c.cmn,
                    rel: c.rel,
                    cxt: c.cxt,
                })
                .collect(),
        }
    }
}

/// Body of an interpret response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretResponse {
    pub query: String,
    pub interpretations: Vec<InterpretationRecord>,
    pub timings: PhaseTimings,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

impl From<&InterpretationRun> for InterpretResponse {
    fn from(run: &InterpretationRun) -> Self {
        Self {
            query: run.query.text(),
            interpretations: run.interpretations.iter().map(Into::into).collect(),
            timings: run.timings,
            truncated: run.truncated,
        }
    }
}

/// One line of a run file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub query_id: String,
    pub interpretations: Vec<InterpretationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<f64>,
}

/// Reads a line-delimited JSON file; blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    parse_jsonl(reader, path)
}

pub(crate) fn parse_jsonl<T: DeserializeOwned>(reader: impl BufRead, origin: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            file: PathBuf::from(origin),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
