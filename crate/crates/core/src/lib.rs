//! Compositional audio effect removal.
//!
//! The crate covers the whole pipeline: deterministic clean sources, five
//! effect kernels with random parameter sampling, random effect chains with
//! loudness normalization between stages, an effect detector, an
//! orchestrator that chains one removal backend per detected effect, and the
//! dataset/evaluation tooling around them.

pub mod audio;
pub mod chain;
pub mod cli;
pub mod dataset;
pub mod detector;
pub mod effects;
pub mod error;
pub mod evaluation;
pub mod loudness;
pub mod metrics;
pub mod orchestrator;
pub mod rng;
pub mod source;
pub mod spectral;
pub mod wav;

pub use audio::{AudioClip, CLIP_LEN, SAMPLE_RATE};
pub use chain::{EffectChain, FxAugExample};
pub use effects::{EffectInstance, EffectKind};
pub use error::{Error, Result};
pub use loudness::TARGET_LUFS;
pub use rng::RngStream;
pub use source::{SourceFamily, SourceSpec};
