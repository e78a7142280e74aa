use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interpreter::ScoringWeights;
use crate::kbstore::DEFAULT_FUZZY_DEPTH;
use crate::segmentation::{
    FrequencyWeighting, SegmentWeighting, TitleAwareWeighting, DEFAULT_MAX_TERMS, DEFAULT_THRESHOLD,
};

/// Default cap on interpretations generated per skeleton.
pub const DEFAULT_MAX_COMBINATIONS: usize = 10_000;

/// How skeletons are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentationMode {
    /// Frequency weights with the title/redirect boost, then skeleton filters.
    #[default]
    TitleAware,
    /// Plain n-gram frequency weights, then skeleton filters.
    Frequency,
    /// A single skeleton with every term its own segment.
    None,
}

impl SegmentationMode {
    pub fn weighting(self) -> &'static dyn SegmentWeighting {
        match self {
            Self::TitleAware | Self::None => &TitleAwareWeighting,
            Self::Frequency => &FrequencyWeighting,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Score-ratio threshold of the skeleton filter, in (0, 1].
    pub threshold: f64,
    /// Fuzzy lookup depth per segment; 0 disables fuzzy matching.
    pub depth: usize,
    pub weights: ScoringWeights,
    /// Interpretations generated per skeleton before options are pruned.
    pub max_combinations: usize,
    pub max_terms: usize,
    /// Keep only the best `k` interpretations.
    pub top_k: Option<usize>,
    pub segmentation: SegmentationMode,
    /// Run segmentation and candidate linking on separate threads.
    pub parallel: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            depth: DEFAULT_FUZZY_DEPTH,
            weights: ScoringWeights::default(),
            max_combinations: DEFAULT_MAX_COMBINATIONS,
            max_terms: DEFAULT_MAX_TERMS,
            top_k: None,
            segmentation: SegmentationMode::default(),
            parallel: true,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold must be in (0, 1], got {}",
                self.threshold
            )));
        }
        self.weights.validate()?;
        if self.max_combinations == 0 {
            return Err(Error::InvalidConfig("combination cap must be positive".into()));
        }
        if self.max_terms == 0 || self.max_terms > 63 {
            return Err(Error::InvalidConfig(format!(
                "max query length must be in 1..=63, got {}",
                self.max_terms
            )));
        }
        if self.top_k == Some(0) {
            return Err(Error::InvalidConfig("top-k must be positive".into()));
        }
        Ok(())
    }
}
