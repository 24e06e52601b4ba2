//! Generate-retrieve-generate conversational answering.
//!
//! A turn is answered by ranking the user's personal statements, asking a
//! chat model for a first answer, using that answer as a BM25 query over a
//! local corpus, discarding low-quality passages, reordering and truncating
//! each surviving passage around the utterance, summarizing each passage with
//! a model that never sees the utterance, and optionally looping.
//! [`eval`] scores the resulting run files with TREC-style metrics.

pub mod corpus;
pub mod embedding;
pub mod eval;
pub mod genai;
pub mod index;
mod limiter;
pub mod pipeline;
pub mod quality;
pub mod text;
mod transport;

pub use limiter::{InflightLimiter, Permit};
pub use transport::TransportError;
