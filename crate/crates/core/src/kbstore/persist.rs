//! On-disk snapshot layout: one binary table per store plus `manifest.json`
//! with record counts and SHA-256 checksums.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EntityId, KnowledgeSnapshot, SnapshotContent};
use crate::error::{Error, Result};

const FORMAT_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.json";
const ALIASES: &str = "aliases.bin";
const ANCHORS: &str = "anchors.bin";
const NGRAMS: &str = "ngrams.bin";
const EMBEDDINGS: &str = "embeddings.bin";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub aliases: usize,
    pub surfaces: usize,
    pub anchors: usize,
    pub anchor_links: usize,
    pub ngrams: usize,
    pub embeddings: usize,
    pub dimension: usize,
    /// File name to hex SHA-256 of its bytes.
    pub checksums: BTreeMap<String, String>,
}

type AliasTable = BTreeMap<(String, EntityId), super::AliasSource>;
type AnchorTable = BTreeMap<String, BTreeMap<EntityId, u64>>;
type EmbeddingTable = (usize, BTreeMap<String, Vec<f32>>);

impl KnowledgeSnapshot {
    /// Writes the snapshot directory. Output is byte-identical for equal
    /// snapshot content.
    pub fn save(&self, dir: &Path) -> Result<Manifest> {
        fs::create_dir_all(dir)?;
        let content = self.content();
        let mut checksums = BTreeMap::new();
        write_table(dir, ALIASES, &content.aliases, &mut checksums)?;
        write_table(dir, ANCHORS, &content.anchors, &mut checksums)?;
        write_table(dir, NGRAMS, &content.ngrams, &mut checksums)?;
        let embeddings: (usize, &BTreeMap<String, Vec<f32>>) = (content.dimension, &content.embeddings);
        write_table(dir, EMBEDDINGS, &embeddings, &mut checksums)?;

        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            aliases: content.aliases.len(),
            surfaces: self.surface_count(),
            anchors: content.anchors.len(),
            anchor_links: content.anchors.values().map(BTreeMap::len).sum(),
            ngrams: content.ngrams.len(),
            embeddings: content.embeddings.len(),
            dimension: content.dimension,
            checksums,
        };
        fs::write(dir.join(MANIFEST), serde_json::to_vec_pretty(&manifest)?)?;
        Ok(manifest)
    }

    /// Loads a snapshot directory written by [`KnowledgeSnapshot::save`],
    /// verifying checksums and counts.
    pub fn open(dir: &Path) -> Result<Self> {
        let manifest = Self::read_manifest(dir)?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(snapshot_error(
                dir,
                format!("unsupported format version {}", manifest.format_version),
            ));
        }
        let aliases: AliasTable = read_table(dir, ALIASES, &manifest)?;
        let anchors: AnchorTable = read_table(dir, ANCHORS, &manifest)?;
        let ngrams: BTreeMap<String, u64> = read_table(dir, NGRAMS, &manifest)?;
        let (dimension, embeddings): EmbeddingTable = read_table(dir, EMBEDDINGS, &manifest)?;

        if aliases.len() != manifest.aliases
            || anchors.len() != manifest.anchors
            || ngrams.len() != manifest.ngrams
            || embeddings.len() != manifest.embeddings
        {
            return Err(snapshot_error(dir, "record counts disagree with manifest"));
        }
        if embeddings.values().any(|v| v.len() != dimension) {
            return Err(snapshot_error(dir, "embedding dimension disagrees with manifest"));
        }

        Ok(Self::from_content(SnapshotContent {
            aliases,
            anchors,
            ngrams,
            dimension,
            embeddings,
        }))
    }

    pub fn read_manifest(dir: &Path) -> Result<Manifest> {
        let bytes = fs::read(dir.join(MANIFEST))
            .map_err(|e| snapshot_error(dir, format!("cannot read {MANIFEST}: {e}")))?;
        serde_json::from_slice(&bytes).map_err(|e| snapshot_error(dir, format!("bad {MANIFEST}: {e}")))
    }
}

fn snapshot_error(dir: &Path, message: impl Into<String>) -> Error {
    Error::Snapshot {
        path: dir.to_path_buf(),
        message: message.into(),
    }
}

fn write_table<T: Serialize>(
    dir: &Path,
    name: &str,
    table: &T,
    checksums: &mut BTreeMap<String, String>,
) -> Result<()> {
    let bytes = bincode::serialize(table)?;
    checksums.insert(name.to_string(), hex::encode(Sha256::digest(&bytes)));
    fs::write(dir.join(name), bytes)?;
    Ok(())
}

fn read_table<T: DeserializeOwned>(dir: &Path, name: &str, manifest: &Manifest) -> Result<T> {
    let bytes = fs::read(dir.join(name))
        .map_err(|e| snapshot_error(dir, format!("cannot read {name}: {e}")))?;
    let expected = manifest
        .checksums
        .get(name)
        .ok_or_else(|| snapshot_error(dir, format!("{name} missing from manifest")))?;
    if &hex::encode(Sha256::digest(&bytes)) != expected {
        return Err(snapshot_error(dir, format!("checksum mismatch for {name}")));
    }
    Ok(bincode::deserialize(&bytes)?)
}
