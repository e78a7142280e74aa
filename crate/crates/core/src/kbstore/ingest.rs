//! Parsers for the tab-separated ingestion files.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use super::{AliasSource, EntityId, KnowledgeSnapshot, SnapshotBuilder};
use crate::error::{Error, Result};

/// Input files of an ingestion run.
///
/// * `aliases.tsv`: `surface<TAB>entity_id<TAB>title|redirect|disambiguation`
/// * `anchors.tsv`: `anchor<TAB>entity_id<TAB>count`
/// * `ngrams.tsv`: `ngram<TAB>frequency`
/// * `embeddings.txt`: header `N D`, then `key<TAB>v1 v2 ... vD`
#[derive(Debug, Clone)]
pub struct SnapshotSources {
    pub aliases: PathBuf,
    pub anchors: PathBuf,
    pub ngrams: PathBuf,
    pub embeddings: PathBuf,
}

impl SnapshotSources {
    /// The four files under their conventional names inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            aliases: dir.join("aliases.tsv"),
            anchors: dir.join("anchors.tsv"),
            ngrams: dir.join("ngrams.tsv"),
            embeddings: dir.join("embeddings.txt"),
        }
    }

    /// Parses every file into a snapshot without persisting it.
    pub fn load(&self) -> Result<KnowledgeSnapshot> {
        let mut builder = SnapshotBuilder::new();
        read_aliases(&self.aliases, &mut builder)?;
        read_anchors(&self.anchors, &mut builder)?;
        read_ngrams(&self.ngrams, &mut builder)?;
        read_embeddings(&self.embeddings, &mut builder)?;
        Ok(builder.build())
    }
}

/// Parses the source files, writes the snapshot directory to `out` and
/// returns the in-memory snapshot.
pub fn ingest_snapshot(sources: &SnapshotSources, out: &Path) -> Result<KnowledgeSnapshot> {
    let snapshot = sources.load()?;
    snapshot.save(out)?;
    Ok(snapshot)
}

struct LineReader {
    path: PathBuf,
    inner: std::io::Lines<BufReader<File>>,
    line_no: usize,
}

impl LineReader {
    fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::Malformed {
            file: path.to_path_buf(),
            line: 0,
            message: format!("cannot open: {e}"),
        })?;
        Ok(Self {
            path: path.to_path_buf(),
            inner: BufReader::new(file).lines(),
            line_no: 0,
        })
    }

    /// Next non-blank line with its trailing `\r` removed.
    fn next_line(&mut self) -> Result<Option<String>> {
        for line in self.inner.by_ref() {
            self.line_no += 1;
            let mut line = line?;
            if line.ends_with('\r') {
                line.pop();
            }
            if !line.trim().is_empty() {
                return Ok(Some(line));
            }
        }
        Ok(None)
    }

    fn malformed(&self, message: impl Into<String>) -> Error {
        Error::Malformed {
            file: self.path.clone(),
            line: self.line_no,
            message: message.into(),
        }
    }

    fn fields<'a>(&self, line: &'a str, expected: usize) -> Result<Vec<&'a str>> {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != expected {
            return Err(self.malformed(format!(
                "expected {expected} tab-separated fields, found {}",
                fields.len()
            )));
        }
        Ok(fields)
    }

    fn entity(&self, raw: &str) -> Result<EntityId> {
        EntityId::new(raw.trim()).map_err(|e| self.malformed(e.to_string()))
    }

    fn count(&self, raw: &str, what: &str) -> Result<u64> {
        raw.trim()
            .parse()
            .map_err(|_| self.malformed(format!("invalid {what} `{raw}`")))
    }

    /// Wraps a builder error with this file's location, keeping anchor and
    /// n-gram conflicts as their own variants.
    fn locate(&self, err: Error) -> Error {
        match err {
            e @ (Error::ConflictingAnchor { .. } | Error::ConflictingNgram { .. }) => e,
            e => self.malformed(e.to_string()),
        }
    }
}

fn read_aliases(path: &Path, builder: &mut SnapshotBuilder) -> Result<()> {
    let mut reader = LineReader::open(path)?;
    while let Some(line) = reader.next_line()? {
        let f = reader.fields(&line, 3)?;
        let entity = reader.entity(f[1])?;
        let source: AliasSource = f[2].trim().parse().map_err(|e: String| reader.malformed(e))?;
        builder
            .add_alias(f[0], entity, source)
            .map_err(|e| reader.locate(e))?;
    }
    Ok(())
}

fn read_anchors(path: &Path, builder: &mut SnapshotBuilder) -> Result<()> {
    let mut reader = LineReader::open(path)?;
    while let Some(line) = reader.next_line()? {
        let f = reader.fields(&line, 3)?;
        let entity = reader.entity(f[1])?;
        let count = reader.count(f[2], "count")?;
        builder
            .add_anchor(f[0], entity, count)
            .map_err(|e| reader.locate(e))?;
    }
    Ok(())
}

fn read_ngrams(path: &Path, builder: &mut SnapshotBuilder) -> Result<()> {
    let mut reader = LineReader::open(path)?;
    while let Some(line) = reader.next_line()? {
        let f = reader.fields(&line, 2)?;
        let frequency = reader.count(f[1], "frequency")?;
        builder
            .add_ngram(f[0], frequency)
            .map_err(|e| reader.locate(e))?;
    }
    Ok(())
}

fn read_embeddings(path: &Path, builder: &mut SnapshotBuilder) -> Result<()> {
    let mut reader = LineReader::open(path)?;
    let Some(header) = reader.next_line()? else {
        return Ok(());
    };
    let parts: Vec<&str> = header.split_whitespace().collect();
    let (declared, dim) = match parts.as_slice() {
        [n, d] => match (n.parse::<usize>(), d.parse::<usize>()) {
            (Ok(n), Ok(d)) if d > 0 || n == 0 => (n, d),
            _ => return Err(reader.malformed(format!("invalid header `{header}`"))),
        },
        _ => return Err(reader.malformed("header must be `N D`")),
    };

    let mut seen = 0usize;
    while let Some(line) = reader.next_line()? {
        let (key, values) = line
            .split_once('\t')
            .ok_or_else(|| reader.malformed("expected `key<TAB>values`"))?;
        let vector = values
            .split_whitespace()
            .map(|v| v.parse::<f32>())
            .collect::<std::result::Result<Vec<f32>, _>>()
            .map_err(|e| reader.malformed(format!("invalid component: {e}")))?;
        if vector.len() != dim {
            return Err(Error::DimensionMismatch {
                file: reader.path.clone(),
                line: reader.line_no,
                expected: dim,
                found: vector.len(),
            });
        }
        builder
            .add_embedding(key.trim(), vector)
            .map_err(|e| reader.locate(e))?;
        seen += 1;
    }
    if seen != declared {
        return Err(reader.malformed(format!("header declares {declared} vectors, found {seen}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_sources(dir: &Path, aliases: &str, anchors: &str, ngrams: &str, embeddings: &str) -> SnapshotSources {
        let sources = SnapshotSources::in_dir(dir);
        fs::write(&sources.aliases, aliases).unwrap();
        fs::write(&sources.anchors, anchors).unwrap();
        fs::write(&sources.ngrams, ngrams).unwrap();
        fs::write(&sources.embeddings, embeddings).unwrap();
        sources
    }

    #[test]
    fn three_line_alias_file() {
        let dir = tempfile::tempdir().unwrap();
        let sources = write_sources(
            dir.path(),
            "new york\tNew_York_City\ttitle\nbig apple\tNew_York_City\tredirect\nnew york\tNew_York_(state)\ttitle\n",
            "",
            "",
            "0 0\n",
        );
        let kb = sources.load().unwrap();
        assert_eq!(kb.exact_lookup("new york").len(), 2);
        assert_eq!(kb.exact_lookup("big apple").len(), 1);
    }

    #[test]
    fn empty_anchor_file_means_unknown_anchors() {
        let dir = tempfile::tempdir().unwrap();
        let sources = write_sources(dir.path(), "x\tX\ttitle\n", "", "", "");
        let kb = sources.load().unwrap();
        let x = EntityId::new("X").unwrap();
        assert!(matches!(kb.commonness("x", &x), Err(Error::UnknownAnchor(_))));
    }

    #[test]
    fn malformed_line_reports_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let sources = write_sources(dir.path(), "a\tA\ttitle\n\nb\tB\n", "", "", "");
        match sources.load() {
            Err(Error::Malformed { file, line, .. }) => {
                assert!(file.ends_with("aliases.tsv"));
                assert_eq!(line, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_source_kind_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let sources = write_sources(dir.path(), "a\tA\tcategory\n", "", "", "");
        assert!(matches!(sources.load(), Err(Error::Malformed { line: 1, .. })));
    }

    #[test]
    fn bad_count_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let sources = write_sources(dir.path(), "", "a\tA\t-3\n", "", "");
        assert!(matches!(sources.load(), Err(Error::Malformed { line: 1, .. })));
        let sources = write_sources(dir.path(), "", "", "a b\tlots\n", "");
        assert!(matches!(sources.load(), Err(Error::Malformed { line: 1, .. })));
    }

    #[test]
    fn conflicting_anchor_triple() {
        let dir = tempfile::tempdir().unwrap();
        let sources = write_sources(dir.path(), "", "a\tA\t3\na\tA\t3\na\tA\t5\n", "", "");
        assert!(matches!(sources.load(), Err(Error::ConflictingAnchor { .. })));
    }

    #[test]
    fn embedding_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let sources = write_sources(dir.path(), "", "", "", "2 3\nfoo\t1 2 3\nbar\t1 2\n");
        match sources.load() {
            Err(Error::DimensionMismatch { line, expected, found, .. }) => {
                assert_eq!((line, expected, found), (3, 3, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn embedding_count_must_match_header() {
        let dir = tempfile::tempdir().unwrap();
        let sources = write_sources(dir.path(), "", "", "", "3 2\nfoo\t1 2\n");
        assert!(matches!(sources.load(), Err(Error::Malformed { .. })));
    }

    #[test]
    fn missing_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let sources = SnapshotSources::in_dir(dir.path());
        assert!(matches!(sources.load(), Err(Error::Malformed { line: 0, .. })));
    }
}
