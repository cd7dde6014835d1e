//! Selecting target-language examples to annotate for few-shot transfer.
//!
//! Strategies: random sampling, data cross-entropy over n-gram language
//! models, predictive entropy, gradient embeddings and loss embeddings (both
//! selected by k-means++ seeding). The [`harness`] module runs them end to end
//! on synthetic tasks.

pub mod cluster;
pub mod corpus;
pub mod dce;
pub mod embeddings;
pub mod error;
pub mod harness;
pub mod ngram;
mod par;
pub mod pe;
pub mod rng;
pub mod selection;
pub mod stats;
pub mod strategies;
pub mod tensors;

pub use corpus::{load_corpus, Corpus, Example};
pub use error::{Error, Result};
pub use selection::{load_selection, write_selection, Selection};
pub use strategies::{select, StrategyName, StrategySpec};
pub use tensors::{load_tensors, TensorSet};
