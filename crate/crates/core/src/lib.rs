//! Audio captioning engine.
//!
//! Audio clips are turned into per-frame features (`audio`), captions into
//! token ids with Word2Vec-initialised embeddings (`text`), and a BiGRU audio
//! encoder plus GRU text encoder feed a GRU decoder (`model`) built from the
//! hand-written layers in `nn`. Generated captions are scored with
//! BLEU, ROUGE-L, CIDEr and METEOR (`metrics`).

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod text;

pub use error::{Error, Result};
