//! Character-trigram inverted index over alias surfaces.

use std::collections::HashMap;

/// Inverted index from padded character trigrams to surface ids.
///
/// Surfaces are stored sorted, so surface ids double as a lexicographic
/// tie-break. Similarity is the cosine between trigram sets,
/// `|A ∩ B| / sqrt(|A| |B|)`.
#[derive(Debug, Clone, Default)]
pub struct TrigramIndex {
    surfaces: Vec<String>,
    gram_counts: Vec<u32>,
    postings: HashMap<u64, Vec<u32>>,
}

impl TrigramIndex {
    pub fn build<'a>(surfaces: impl IntoIterator<Item = &'a str>) -> Self {
        let mut sorted: Vec<String> = surfaces.into_iter().map(str::to_string).collect();
        sorted.sort();
        sorted.dedup();

        let mut postings: HashMap<u64, Vec<u32>> = HashMap::new();
        let mut gram_counts = Vec::with_capacity(sorted.len());
        for (id, surface) in sorted.iter().enumerate() {
            let grams = trigram_set(surface);
            gram_counts.push(grams.len() as u32);
            for gram in grams {
                postings.entry(gram).or_default().push(id as u32);
            }
        }

        Self {
            surfaces: sorted,
            gram_counts,
            postings,
        }
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    pub fn surface(&self, id: u32) -> &str {
        &self.surfaces[id as usize]
    }

    /// All surfaces sharing at least one trigram with `query`, best first
    /// (ties by surface order).
    pub fn search(&self, query: &str) -> Vec<(u32, f64)> {
        let grams = trigram_set(query);
        if grams.is_empty() {
            return Vec::new();
        }
        let mut overlap: HashMap<u32, u32> = HashMap::new();
        for gram in &grams {
            if let Some(list) = self.postings.get(gram) {
                for &id in list {
                    *overlap.entry(id).or_insert(0) += 1;
                }
            }
        }
        let q = grams.len() as f64;
        let mut hits: Vec<(u32, f64)> = overlap
            .into_iter()
            .map(|(id, shared)| {
                let s = f64::from(self.gram_counts[id as usize]);
                (id, f64::from(shared) / (q * s).sqrt())
            })
            .collect();
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        hits
    }
}

/// Distinct trigrams of `"  " + s + " "`, each packed into a `u64`
/// (21 bits per char), sorted.
pub(crate) fn trigram_set(s: &str) -> Vec<u64> {
    let chars: Vec<char> = "  ".chars().chain(s.chars()).chain(" ".chars()).collect();
    let mut grams: Vec<u64> = chars
        .windows(3)
        .map(|w| (u64::from(w[0]) << 42) | (u64::from(w[1]) << 21) | u64::from(w[2]))
        .collect();
    grams.sort_unstable();
    grams.dedup();
    grams
}
