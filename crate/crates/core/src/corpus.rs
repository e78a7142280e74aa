//! Ground-truth corpora and cluster-respecting train/test splits.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::records::parse_jsonl;
use crate::text::normalize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Categorical,
    Conceptual,
    Question,
    Relational,
    Surface,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Categorical,
        Category::Conceptual,
        Category::Question,
        Category::Relational,
        Category::Surface,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Categorical => "categorical",
            Category::Conceptual => "conceptual",
            Category::Question => "question",
            Category::Relational => "relational",
            Category::Surface => "surface",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown category `{s}`"))
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthEntity {
    /// Inclusive term range of the mention.
    pub span: Option<(usize, usize)>,
    /// Entity id or external resource URL.
    pub entity: String,
    pub kind: EntityKind,
    pub relevance: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthPart {
    pub text: String,
    pub entity: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthInterpretation {
    pub parts: Vec<GroundTruthPart>,
    pub grade: u8,
    pub equivalence_class: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub id: String,
    /// Normalized query text.
    pub query: String,
    pub category: Category,
    pub difficulty: u8,
    pub cluster: String,
    pub entities: Vec<GroundTruthEntity>,
    pub interpretations: Vec<GroundTruthInterpretation>,
}

impl GroundTruthRecord {
    pub fn term_count(&self) -> usize {
        self.query.split(' ').count()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCluster {
    Text(String),
    Number(i64),
}

#[derive(Deserialize)]
struct RawEntity {
    span: Option<Vec<i64>>,
    entity: Option<String>,
    kind: Option<String>,
    relevance: Option<i64>,
}

#[derive(Deserialize)]
struct RawPart {
    text: Option<String>,
    entity: Option<String>,
}

#[derive(Deserialize)]
struct RawInterpretation {
    parts: Option<Vec<RawPart>>,
    grade: Option<i64>,
    equivalence_class: Option<i64>,
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    query: Option<String>,
    category: Option<String>,
    difficulty: Option<i64>,
    cluster: Option<RawCluster>,
    #[serde(default)]
    entities: Vec<RawEntity>,
    interpretations: Option<Vec<RawInterpretation>>,
}

fn schema(id: &str, field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        id: id.to_string(),
        field: field.into(),
        message: message.into(),
    }
}

fn required<T>(id: &str, field: &str, value: Option<T>) -> Result<T> {
    value.ok_or_else(|| schema(id, field, "missing"))
}

fn validate(raw: RawRecord, line: usize) -> Result<GroundTruthRecord> {
    let id = raw.id.unwrap_or_default();
    if id.trim().is_empty() {
        return Err(schema(&format!("line {line}"), "id", "missing or empty"));
    }
    let id = id.as_str();

    let query = normalize(&required(id, "query", raw.query)?);
    if query.is_empty() {
        return Err(schema(id, "query", "empty"));
    }
    let terms: Vec<&str> = query.split(' ').collect();

    let category = required(id, "category", raw.category)?
        .parse::<Category>()
        .map_err(|m| schema(id, "category", m))?;
    let difficulty = required(id, "difficulty", raw.difficulty)?;
    if !(1..=5).contains(&difficulty) {
        return Err(schema(id, "difficulty", format!("{difficulty} not in 1..=5")));
    }
    let cluster = match required(id, "cluster", raw.cluster)? {
        RawCluster::Text(s) => s,
        RawCluster::Number(n) => n.to_string(),
    };
    if cluster.is_empty() {
        return Err(schema(id, "cluster", "empty"));
    }

    let mut entities = Vec::with_capacity(raw.entities.len());
    for (i, e) in raw.entities.into_iter().enumerate() {
        let field = |name: &str| format!("entities[{i}].{name}");
        let entity = e.entity.filter(|s| !s.trim().is_empty());
        let entity = entity.ok_or_else(|| schema(id, field("entity"), "missing or empty"))?;
        let kind = match required(id, &field("kind"), e.kind)?.as_str() {
            "explicit" => EntityKind::Explicit,
            "implicit" => EntityKind::Implicit,
            other => return Err(schema(id, field("kind"), format!("unknown kind `{other}`"))),
        };
        let relevance = required(id, &field("relevance"), e.relevance)?;
        if !(1..=2).contains(&relevance) {
            return Err(schema(id, field("relevance"), format!("{relevance} not in 1..=2")));
        }
        let span = match e.span {
            None => None,
            Some(s) => match s[..] {
                [a, b] if 0 <= a && a <= b && (b as usize) < terms.len() => Some((a as usize, b as usize)),
                _ => return Err(schema(id, field("span"), format!("{s:?} is not a term range of the query"))),
            },
        };
        if kind == EntityKind::Explicit && span.is_none() {
            return Err(schema(id, field("span"), "explicit entity without a mention"));
        }
        entities.push(GroundTruthEntity {
            span,
            entity,
            kind,
            relevance: relevance as u8,
        });
    }

    let raw_interps = required(id, "interpretations", raw.interpretations)?;
    if raw_interps.is_empty() {
        return Err(schema(id, "interpretations", "at least one interpretation required"));
    }
    let mut interpretations = Vec::with_capacity(raw_interps.len());
    for (i, interp) in raw_interps.into_iter().enumerate() {
        let field = |name: &str| format!("interpretations[{i}].{name}");
        let grade = required(id, &field("grade"), interp.grade)?;
        if !(1..=3).contains(&grade) {
            return Err(schema(id, field("grade"), format!("{grade} not in 1..=3")));
        }
        let equivalence_class = required(id, &field("equivalence_class"), interp.equivalence_class)?;
        let raw_parts = required(id, &field("parts"), interp.parts)?;
        let mut parts = Vec::with_capacity(raw_parts.len());
        for (j, p) in raw_parts.into_iter().enumerate() {
            let text = normalize(&required(id, &field(&format!("parts[{j}].text")), p.text)?);
            if text.is_empty() {
                return Err(schema(id, field(&format!("parts[{j}].text")), "empty"));
            }
            parts.push(GroundTruthPart {
                text,
                entity: p.entity.filter(|s| !s.trim().is_empty()),
            });
        }
        let joined: Vec<&str> = parts.iter().flat_map(|p| p.text.split(' ')).collect();
        if joined != terms {
            return Err(schema(id, field("parts"), "parts do not segment the query"));
        }
        interpretations.push(GroundTruthInterpretation {
            parts,
            grade: grade as u8,
            equivalence_class,
        });
    }

    Ok(GroundTruthRecord {
        id: id.to_string(),
        query,
        category,
        difficulty: difficulty as u8,
        cluster,
        entities,
        interpretations,
    })
}

/// Parses and validates a line-delimited corpus.
pub fn parse_corpus(reader: impl BufRead, origin: &Path) -> Result<Vec<GroundTruthRecord>> {
    let raws: Vec<RawRecord> = parse_jsonl(reader, origin)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(raws.len());
    for (i, raw) in raws.into_iter().enumerate() {
        let record = validate(raw, i + 1)?;
        if !seen.insert(record.id.clone()) {
            return Err(schema(&record.id, "id", "duplicate record id"));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<GroundTruthRecord>> {
    parse_corpus(BufReader::new(File::open(path)?), path)
}

/// Length buckets 1..=7 and 8+.
const LENGTH_BUCKETS: usize = 8;
const FEATURES: usize = 5 + LENGTH_BUCKETS;

fn feature_slots(record: &GroundTruthRecord) -> [usize; 2] {
    let len = record.term_count().clamp(1, LENGTH_BUCKETS);
    [record.category.index(), 5 + len - 1]
}

/// Counts of records per category and per length bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Histogram {
    counts: [i64; FEATURES],
    total: i64,
}

impl Histogram {
    fn empty() -> Self {
        Self {
            counts: [0; FEATURES],
            total: 0,
        }
    }

    fn of<'a>(records: impl IntoIterator<Item = &'a GroundTruthRecord>) -> Self {
        let mut h = Self::empty();
        for r in records {
            h.add(r, 1);
        }
        h
    }

    fn add(&mut self, record: &GroundTruthRecord, sign: i64) {
        for slot in feature_slots(record) {
            self.counts[slot] += sign;
        }
        self.total += sign;
    }

    fn shift(&mut self, other: &Histogram, sign: i64) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += sign * b;
        }
        self.total += sign * other.total;
    }

    fn minus(&self, other: &Histogram) -> Histogram {
        let mut h = *self;
        h.shift(other, -1);
        h
    }

    fn proportion(&self, slot: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.counts[slot] as f64 / self.total as f64
        }
    }
}

fn histogram_error(train: &Histogram, test: &Histogram, whole: &Histogram) -> f64 {
    let mut error = 0.0;
    for side in [train, test] {
        for slot in 0..FEATURES {
            error += (side.proportion(slot) - whole.proportion(slot)).abs();
        }
    }
    error
}

/// Summed absolute deviation of each side's category and length-bucket
/// proportions from those of `whole`. An empty side has all-zero proportions.
pub fn split_error(
    train: &[&GroundTruthRecord],
    test: &[&GroundTruthRecord],
    whole: &[GroundTruthRecord],
) -> f64 {
    histogram_error(
        &Histogram::of(train.iter().copied()),
        &Histogram::of(test.iter().copied()),
        &Histogram::of(whole),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Target train share.
    pub ratio: f64,
    pub error_threshold: f64,
    pub seed: u64,
    pub max_iters: usize,
    /// Allowed deviation of the train share from `ratio`.
    pub band: f64,
    /// Keep the error after every accepted exchange.
    pub record_trace: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            ratio: 0.8,
            error_threshold: 0.05,
            seed: 0,
            max_iters: 100_000,
            band: 0.02,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub error: f64,
    pub target_ratio: f64,
    pub seed: u64,
    /// Exchanges attempted.
    pub iterations: usize,
    pub accepted: usize,
    /// Whether the error threshold was reached.
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
}

impl Split {
    pub fn train_share(&self) -> f64 {
        let n = self.train.len() + self.test.len();
        if n == 0 {
            0.0
        } else {
            self.train.len() as f64 / n as f64
        }
    }
}

/// Hill-climbing split: a seeded random cluster-respecting start near
/// `ratio`, then random train/test cluster exchanges that do not increase
/// the error and keep the train share within the band (or move it closer).
pub fn split_corpus(records: &[GroundTruthRecord], config: &SplitConfig) -> Result<Split> {
    if !(config.ratio > 0.0 && config.ratio < 1.0) {
        return Err(Error::InvalidConfig(format!("split ratio {} not in (0, 1)", config.ratio)));
    }
    if !(config.error_threshold >= 0.0) || !(config.band >= 0.0) {
        return Err(Error::InvalidConfig("error threshold and band must be non-negative".into()));
    }
    if records.is_empty() {
        return Err(Error::InvalidConfig("cannot split an empty corpus".into()));
    }

    let mut by_cluster: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_cluster.entry(&r.cluster).or_default().push(i);
    }
    let clusters: Vec<Vec<usize>> = by_cluster.into_values().collect();
    let hists: Vec<Histogram> = clusters
        .iter()
        .map(|members| Histogram::of(members.iter().map(|&i| &records[i])))
        .collect();

    let n = records.len() as f64;
    let whole = Histogram::of(records);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.shuffle(&mut rng);
    let target = config.ratio * n;
    let mut train_set = Vec::new();
    let mut test_set = Vec::new();
    let mut train = Histogram::empty();
    for c in order {
        let size = hists[c].total as f64;
        let now = train.total as f64;
        if (now + size - target).abs() < (now - target).abs() {
            train.shift(&hists[c], 1);
            train_set.push(c);
        } else {
            test_set.push(c);
        }
    }

    let mut error = histogram_error(&train, &whole.minus(&train), &whole);
    let mut trace = Vec::new();
    if config.record_trace {
        trace.push(error);
    }
    let mut iterations = 0;
    let mut accepted = 0;
    while error > config.error_threshold
        && iterations < config.max_iters
        && !train_set.is_empty()
        && !test_set.is_empty()
    {
        iterations += 1;
        let a = rng.gen_range(0..train_set.len());
        let b = rng.gen_range(0..test_set.len());
        let (ca, cb) = (train_set[a], test_set[b]);

        let mut next = train;
        next.shift(&hists[ca], -1);
        next.shift(&hists[cb], 1);

        let old_gap = (train.total as f64 / n - config.ratio).abs();
        let new_gap = (next.total as f64 / n - config.ratio).abs();
        if new_gap > config.band + 1e-12 && new_gap > old_gap {
            continue;
        }
        let next_error = histogram_error(&next, &whole.minus(&next), &whole);
        if next_error <= error {
            train = next;
            error = next_error;
            train_set[a] = cb;
            test_set[b] = ca;
            accepted += 1;
            if config.record_trace {
                trace.push(error);
            }
        }
    }

    let mut side = vec![false; records.len()];
    for &c in &train_set {
        for &i in &clusters[c] {
            side[i] = true;
        }
    }
    let (mut train_ids, mut test_ids) = (Vec::new(), Vec::new());
    for (r, in_train) in records.iter().zip(side) {
        if in_train {
            train_ids.push(r.id.clone());
        } else {
            test_ids.push(r.id.clone());
        }
    }

    Ok(Split {
        train: train_ids,
        test: test_ids,
        error,
        target_ratio: config.ratio,
        seed: config.seed,
        iterations,
        accepted,
        converged: error <= config.error_threshold,
        trace,
    })
}

#[derive(Debug, Serialize)]
struct SplitManifest<'a> {
    seed: u64,
    error: f64,
    iterations: usize,
    accepted: usize,
    converged: bool,
    target_ratio: f64,
    train: usize,
    test: usize,
    train_file: &'a str,
    test_file: &'a str,
}

/// Writes `train.ids`, `test.ids` and `split.json` into `dir`.
pub fn write_split(dir: &Path, split: &Split) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, ids) in [("train.ids", &split.train), ("test.ids", &split.test)] {
        let mut w = BufWriter::new(File::create(dir.join(name))?);
        for id in ids {
            writeln!(w, "{id}")?;
        }
        w.flush()?;
    }
    let manifest = SplitManifest {
        seed: split.seed,
        error: split.error,
        iterations: split.iterations,
        accepted: split.accepted,
        converged: split.converged,
        target_ratio: split.target_ratio,
        train: split.train.len(),
        test: split.test.len(),
        train_file: "train.ids",
        test_file: "test.ids",
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(dir.join("split.json"), json)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(id: &str, query: &str, category: Category, cluster: &str) -> GroundTruthRecord {
        GroundTruthRecord {
            id: id.into(),
            query: query.into(),
            category,
            difficulty: 1,
            cluster: cluster.into(),
            entities: vec![],
            interpretations: vec![GroundTruthInterpretation {
                parts: vec![GroundTruthPart {
                    text: query.into(),
                    entity: None,
                }],
                grade: 3,
                equivalence_class: 0,
            }],
        }
    }

    fn parse(line: &str) -> Result<Vec<GroundTruthRecord>> {
        parse_corpus(line.as_bytes(), Path::new("corpus.jsonl"))
    }

    const VALID: &str = r#"{"id":"q1","query":"Apollo 11 mission duration","category":"question","difficulty":2,"cluster":"apollo","entities":[{"span":[0,1],"entity":"Apollo_11","kind":"explicit","relevance":2}],"interpretations":[{"parts":[{"text":"apollo 11","entity":"Apollo_11"},{"text":"mission duration","entity":null}],"grade":3,"equivalence_class":0},{"parts":[{"text":"apollo 11","entity":"Apollo_11"},{"text":"mission","entity":null},{"text":"duration","entity":null}],"grade":3,"equivalence_class":0}]}"#;

    #[test]
    fn valid_record_loads() {
        let recs = parse(VALID).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.query, "apollo 11 mission duration");
        assert_eq!(r.entities[0].span, Some((0, 1)));
        assert_eq!(r.interpretations[0].equivalence_class, r.interpretations[1].equivalence_class);
    }

    #[test]
    fn schema_violations_name_the_field() {
        let cases = [
            (VALID.replace("\"grade\":3,\"equivalence_class\":0}]", "\"grade\":4,\"equivalence_class\":0}]"), "grade"),
            (VALID.replace("question", "quiz"), "category"),
            (VALID.replace("\"difficulty\":2", "\"difficulty\":9"), "difficulty"),
            (VALID.replace("\"relevance\":2", "\"relevance\":3"), "relevance"),
            (VALID.replace("[0,1]", "[0,7]"), "span"),
            (VALID.replace("\"text\":\"mission duration\"", "\"text\":\"mission length\""), "parts"),
        ];
        for (line, field) in cases {
            match parse(&line) {
                Err(Error::Schema { id, field: f, .. }) => {
                    assert_eq!(id, "q1");
                    assert!(f.ends_with(field), "{f} vs {field}");
                }
                other => panic!("expected schema error for {field}, got {other:?}"),
            }
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let two = format!("{VALID}\n{VALID}\n");
        assert!(matches!(parse(&two), Err(Error::Schema { field, .. }) if field == "id"));
    }

    #[test]
    fn missing_interpretations_rejected() {
        let line = r#"{"id":"x","query":"a","category":"surface","difficulty":1,"cluster":7,"interpretations":[]}"#;
        assert!(matches!(parse(line), Err(Error::Schema { field, .. }) if field == "interpretations"));
    }

    #[test]
    fn split_error_examples() {
        let whole = vec![
            record("1", "x", Category::Question, "a"),
            record("2", "x", Category::Question, "a"),
            record("3", "x", Category::Surface, "b"),
            record("4", "x", Category::Surface, "b"),
        ];
        let train: Vec<_> = whole[..2].iter().collect();
        let test: Vec<_> = whole[2..].iter().collect();
        assert!((split_error(&train, &test, &whole) - 2.0).abs() < 1e-12);
        let mixed_train = vec![&whole[0], &whole[2]];
        let mixed_test = vec![&whole[1], &whole[3]];
        assert_eq!(split_error(&mixed_train, &mixed_test, &whole), 0.0);
        // empty side: all proportions zero
        let all: Vec<_> = whole.iter().collect();
        assert!((split_error(&all, &[], &whole) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_clusters_reach_zero() {
        let records: Vec<_> = (0..50)
            .map(|i| record(&i.to_string(), "a b", Category::Surface, &i.to_string()))
            .collect();
        let split = split_corpus(&records, &SplitConfig::default()).unwrap();
        assert_eq!(split.error, 0.0);
        assert!(split.converged);
        assert_eq!(split.train.len(), 40);
    }

    #[test]
    fn single_cluster_lands_on_one_side() {
        let records: Vec<_> = (0..5)
            .map(|i| record(&i.to_string(), "a", Category::Surface, "only"))
            .collect();
        let split = split_corpus(&records, &SplitConfig::default()).unwrap();
        assert_eq!(split.train.len(), 5);
        assert!((split.error - 2.0).abs() < 1e-12);
        assert!(!split.converged);
    }

    #[test]
    fn invalid_ratio() {
        let records = vec![record("1", "a", Category::Surface, "c")];
        for ratio in [0.0, 1.0, -0.5, f64::NAN] {
            let config = SplitConfig { ratio, ..Default::default() };
            assert!(split_corpus(&records, &config).is_err());
        }
    }

    #[test]
    fn write_split_files() {
        let dir = tempfile::tempdir().unwrap();
        let records: Vec<_> = (0..10)
            .map(|i| record(&format!("r{i}"), "a", Category::Surface, &i.to_string()))
            .collect();
        let split = split_corpus(&records, &SplitConfig::default()).unwrap();
        write_split(dir.path(), &split).unwrap();
        let train = fs::read_to_string(dir.path().join("train.ids")).unwrap();
        assert_eq!(train.lines().count(), split.train.len());
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("split.json")).unwrap()).unwrap();
        assert_eq!(manifest["seed"], 0);
        assert_eq!(manifest["iterations"], split.iterations);
    }

    fn arb_corpus() -> impl Strategy<Value = Vec<GroundTruthRecord>> {
        prop::collection::vec((0usize..5, 1usize..10, 0usize..30), 10..120).prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (cat, len, cluster))| {
                    let query = vec!["w"; len].join(" ");
                    record(&i.to_string(), &query, Category::ALL[cat], &cluster.to_string())
                })
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn split_respects_clusters_and_descends(records in arb_corpus(), seed in any::<u64>()) {
            let config = SplitConfig { seed, max_iters: 2_000, record_trace: true, ..Default::default() };
            let split = split_corpus(&records, &config).unwrap();
            let train: HashSet<&str> = split.train.iter().map(String::as_str).collect();
            prop_assert_eq!(split.train.len() + split.test.len(), records.len());
            let mut cluster_side: BTreeMap<&str, bool> = BTreeMap::new();
            for r in &records {
                let side = train.contains(r.id.as_str());
                prop_assert_eq!(*cluster_side.entry(&r.cluster).or_insert(side), side);
            }
            prop_assert!(split.trace.windows(2).all(|w| w[1] <= w[0]));
            let by_id: BTreeMap<&str, &GroundTruthRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
            let t: Vec<_> = split.train.iter().map(|i| by_id[i.as_str()]).collect();
            let s: Vec<_> = split.test.iter().map(|i| by_id[i.as_str()]).collect();
            prop_assert!((split_error(&t, &s, &records) - split.error).abs() < 1e-9);
            prop_assert_eq!(split_corpus(&records, &config).unwrap(), split);
        }
    }
}
