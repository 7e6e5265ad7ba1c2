//! Khmer corpus toolkit: normalization, quality filtering, word segmentation
//! that preserves functional spaces, unigram subword modeling, denoising
//! pre-training data generation, and an evaluation metric suite.
//!
//! The pipeline order is normalize -> repair delimiter spaces -> filter ->
//! segment -> subword -> noise; every stage is a pure function over
//! immutable inputs and is safe to run from parallel workers.

pub mod chars;
pub mod curate;
pub mod metrics;
pub mod noise;
pub mod normalize;
pub mod segment;
pub mod subword;

#[cfg(feature = "testkit")]
pub mod oracles;
#[cfg(feature = "testkit")]
pub mod synth;

pub use curate::{Document, FilterConfig, FilterVerdict, Lang};
pub use normalize::{InvisibleSet, Normalizer, RuleTable};
pub use segment::{Lexicon, Token, TokenKind};
pub use subword::{SubwordVocab, TokenizerMode};
