//! Dual-channel sarcasm recognition.
//!
//! A text is split by a sentiment lexicon into its sentiment words (the
//! literal channel) and the remaining words (the implied channel). Three
//! Bi-LSTM encoders read the two channels and the full text, two small
//! heads predict each channel's sentiment from weak count-based labels,
//! and an analyzer head reads both projected channel states to decide
//! whether the literal and implied sentiments conflict, i.e. whether the
//! text is sarcastic. Everything here is self-contained: dense numerics
//! with hand-derived backward passes, a finite-difference gradient
//! checker, Adam, deterministic seeded training with checkpoint-based
//! model selection, and an evaluation/ablation harness.

pub mod data;
pub mod decompose;
pub mod encoder;
pub mod error;
pub mod experiment;
pub mod labels;
pub mod lexicon;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod trainer;

pub use decompose::{decompose, tokenize, DecomposedExample, TokenSequence};
pub use error::{Error, Result};
pub use labels::{count_polarities, weak_labels, WeakLabels};
pub use lexicon::{Polarity, SentimentLexicon};
pub use metrics::Metrics;
pub use model::{AnalyzerMode, DCNetModel, ForwardOutput, LossWeights, ModelConfig};

pub mod checkpoint;
