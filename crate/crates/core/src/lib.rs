//! Corpus-scale metrics for linguistic typology studies.
//!
//! The crate has four groups of functionality:
//!
//! * **Subword units** — train and apply monolingual BPE tokenizers
//!   ([`tokenizer`]), the unit system every corpus metric is computed in.
//! * **Corpus metrics** — single-pass sliding-window MATTR, accessor
//!   variety and accessor efficiency over token streams ([`corpus`]),
//!   plus tokenizer fertility and reservoir line sampling.
//! * **Treebank metrics** — a CoNLL-U parser ([`conllu`]) feeding head
//!   direction entropy, relation order entropy and subject/object order
//!   entropy ([`word_order`]), and typological feature-matrix sampling
//!   with MaxSum selection and saturation diagnostics ([`typology`]).
//! * **Evaluation** — pseudo-log-likelihood scoring of minimal pairs
//!   over pluggable masked scorers ([`scoring`]), and rank correlation
//!   of metric tables against task performance tables ([`analysis`]).
//!
//! Everything is deterministic: all randomness flows from explicit
//! seeds, and parallel code paths merge integer count tables so results
//! are identical regardless of worker count.

pub mod analysis;
pub mod conllu;
pub mod corpus;
pub mod entropy;
pub mod scoring;
pub mod tokenizer;
pub mod typology;
pub mod word_order;

pub use conllu::{DepForest, DepSentence, DepToken};
pub use corpus::{WindowConfig, WindowMetrics};
pub use scoring::{MaskedScorer, MinimalPair, PllScore};
pub use tokenizer::{PretokenizerRule, TokenId, TokenStream, TokenizerModel};
pub use typology::{FeatureMatrix, SampleQualityReport, SelectionMode};
pub use word_order::{ConditionalDistribution, WordOrderReport};
