//! Interpretable screening of children's oral narratives.
//!
//! This library reproduces a text-based analysis pipeline for flagging
//! narratives that may need language-development support: parse
//! time-aligned transcripts, extract interpretable feature groups, train
//! small regularized logistic-regression models, and rank features by
//! permutation importance under balanced accuracy.
//!
//! # Modules
//!
//! - [`corpus`] — transcript data model, Praat TextGrid parsing, text
//!   normalization, manifest loading with split-hygiene validation.
//! - [`features`] — verbal proficiency, grammatical (UPOS counts) and
//!   keyword feature groups over raw, unscaled values.
//! - [`glm`] — L2 (Newton) and L1 (coordinate descent) logistic
//!   regression, plus L1-driven keyword selection.
//! - [`analysis`] — balanced accuracy, F1, permutation feature importance
//!   with derived per-cell seeds, box-plot statistics.
//! - [`report`] — deterministic SVG bar/box plots and the metrics table,
//!   each with a CSV twin.
//! - [`synth`] — synthetic corpora with planted group effects for testing
//!   the pipeline end to end.
//! - [`pipeline`] — the orchestration used by the `narrative-screen`
//!   binary.
//!
//! # Example
//!
//! ```
//! use narrative_screen::analysis::{permutation_importance, Metric, PfiOptions};
//! use narrative_screen::features::{build_feature_matrix, FeatureConfig, FeatureGroup};
//! use narrative_screen::glm::{train, PenaltyConfig};
//! use narrative_screen::synth::{generate_corpus, SynthConfig};
//!
//! let corpus = generate_corpus(&SynthConfig {
//!     unique_words_effect: 1.5,
//!     seed: 7,
//!     ..Default::default()
//! })?;
//! let matrix = build_feature_matrix(
//!     &corpus,
//!     narrative_screen::corpus::Language::Afrikaans,
//!     FeatureGroup::Proficiency,
//!     &FeatureConfig { split: Some(narrative_screen::corpus::Split::Train), ..Default::default() },
//! )?
//! .retain_labeled();
//! let model = train(&matrix, &PenaltyConfig::default())?;
//! let importance = permutation_importance(
//!     &model,
//!     &matrix,
//!     Metric::BalancedAccuracy,
//!     &PfiOptions { master_seed: 7, ..Default::default() },
//! )?;
//! assert_eq!(importance.len(), 5);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```
//!
//! The `examples/` directory walks through each capability; the thin
//! `narrative-screen` binary exposes the same pipeline as subcommands.

pub mod analysis;
pub mod corpus;
pub mod features;
pub mod glm;
pub mod pipeline;
pub mod report;
pub mod synth;
