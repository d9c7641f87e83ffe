//! Real/fake news classification over interchangeable text representations (TF-IDF,
//! static word vectors, a frozen transformer encoder) with a trainable linear head, and
//! the tools to inspect it: token-level class activation maps, linear-evaluation scores,
//! PCA projections and token correlation matrices.

pub mod archive;
pub mod classifier;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod interpret;
pub mod pipeline;
pub mod runconfig;
pub mod static_embed;
pub mod tfidf;
pub mod tokenize;

pub use error::{Error, Result};
