//! Model-agnostic topic model interpretation.
//!
//! The engine consumes what any topic model produces (a topic-term matrix, a
//! document-topic matrix, the vocabulary and the corpus) and derives everything an
//! analyst needs to read the model: topic importances, term rankings, word
//! associations, group-topic aggregates, document timelines and highlights, 2-D
//! semantic maps, wordclouds and publication figures.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`, which is what the CLI and server use.

// `!(x > y)` is used deliberately so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod cache;
pub mod interpret;
pub mod layout;
pub mod manifold;
mod scalar;

pub use scalar::Scalar;

pub type Bundle = bundle::CorpusBundle<f64>;
pub type Bundle32 = bundle::CorpusBundle<f32>;
pub type Projection = manifold::Projection2D<f64>;
pub type Projection32 = manifold::Projection2D<f32>;
pub type TopicSummary = interpret::TopicSummary<f64>;
pub type GroupTopicMatrix = interpret::GroupTopicMatrix<f64>;
pub type Timeline = interpret::Timeline<f64>;
pub type HighlightSpan = interpret::HighlightSpan<f64>;
pub type UmapParams = manifold::UmapParams<f64>;
pub type InterpretationCache = cache::InterpretationCache<f64>;
