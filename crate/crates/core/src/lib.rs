//! Corpus tooling, baseline models and evaluation for slot and intent
//! detection and Norwegian dialect identification.
//!
//! * [`corpus`]: instances, the block file format, BIO handling,
//!   deduplication and origin-grouped splitting.
//! * [`lexmap`]: Bokmål → dialect lexicons and silver corpus generation.
//! * [`silver`]: transcription cleanup, geolocation labels, classifier
//!   agreement filtering, distribution-matched downsampling.
//! * [`joint`]: the two-head intent/slot model and its weighted loss.
//! * [`dialect`]: linear SVM and majority/random dialect baselines.
//! * [`eval`]: span F1, intent accuracy, weighted F1, lambda average.

pub mod corpus;
pub mod dialect;
pub mod eval;
pub mod features;
pub mod joint;
pub mod lexmap;
pub mod model_io;
pub mod predictions;
pub mod silver;
pub mod synth;

pub use corpus::{DialectLabel, LabelVocab, SidInstance, SlotTag, Span};
pub use dialect::{DialectClassifier, SvmConfig};
pub use eval::{EvalReport, SidScores, SpanScores};
pub use features::FeatureConfig;
pub use joint::{JointLinearModel, LossBreakdown, TrainConfig};
pub use lexmap::{Lexicon, VariantPolicy};
pub use silver::{DistributionSpec, GeoMapping, NorDialLabel};
