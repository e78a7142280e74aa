//! Entity-based interpretation of keyword queries.
//!
//! The pipeline has three phases over an immutable [`KnowledgeSnapshot`]:
//!
//! 1. [`segmentation`] ranks every segmentation of the query by n-gram
//!    statistics and keeps a few promising ones as skeletons.
//! 2. [`linker`] runs concurrently and looks up candidate entities for all
//!    `n(n+1)/2` segments, exact and fuzzy.
//! 3. [`interpreter`] fills the skeletons with the candidates, scores every
//!    combination by commonness, relatedness and context, and ranks them.
//!
//! [`corpus`] and [`evaluation`] hold the ground-truth data model, the
//! cluster-respecting train/test splitter and the effectiveness metrics.

pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod interpreter;
pub mod kbstore;
pub mod linker;
pub mod records;
pub mod segmentation;
pub mod text;

pub use config::EngineConfig;
pub use error::{Error, Result};
pub use interpreter::{interpret, Interpretation, InterpretationRun, ScoringWeights};
pub use kbstore::{AliasSource, EntityId, KnowledgeSnapshot, SnapshotBuilder};
pub use segmentation::{tokenize, Query, Segment, Segmentation};
