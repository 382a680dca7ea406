//! Segment-level confidence scoring for speaker diarization.
//!
//! The crate covers the whole loop: spectral-clustering diarization over
//! precomputed speaker embeddings, four confidence estimators per hypothesis
//! segment, DER and covered DER (DER restricted to high-confidence speech),
//! coverage sweeps, global threshold selection and a synthetic corpus
//! generator to exercise all of it.
//!
//! Embedding math is generic over [`Scalar`] (`f32` or `f64`); times and
//! scores are always `f64` seconds.

pub mod cli;
pub mod confidence;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod scalar;
pub mod selection;
pub mod spectral;
pub mod synth;
pub mod time;
pub mod types;

pub use confidence::{score, ConfidenceAnnotation, ConfidenceConfig, Method, SpectralBasis};
pub use error::{Error, Result};
pub use metrics::{compute_cder, compute_der, partition_by_confidence, CoveragePartition, DerBreakdown, ScoringConfig};
pub use scalar::{cosine, Scalar};
pub use selection::{select_global_threshold, sweep, Criterion, GlobalThreshold, ScoredConversation, SweepCurve};
pub use spectral::{spectral_diarize, SpectralDecomposition, SpectralParams};
pub use synth::{generate, generate_corpus, SynthConversation, SynthSpec};
pub use time::{TimeInterval, Timeline, TIME_EPS};
pub use types::{Diarization, Embedding, EmbeddingTrack, Segment};

/// Double-precision embedding track, the default throughout the CLI.
pub type Track = EmbeddingTrack<f64>;
/// Single-precision embedding track.
pub type Track32 = EmbeddingTrack<f32>;
pub type Decomposition = SpectralDecomposition<f64>;
pub type Basis = SpectralBasis<f64>;
