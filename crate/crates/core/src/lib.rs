//! Converts documents into hierarchies of question-answer pairs.
//!
//! Each paragraph is processed on its own: answer spans are selected from
//! sentences, entities and numerics, a generation backend over-generates
//! candidate questions conditioned on a specificity label, an answering
//! backend answers them extractively, and a multi-stage filter keeps the
//! good ones. Survivors are grouped into trees with GENERAL questions at the
//! root and SPECIFIC questions underneath, and a QA budget trims the result.
//!
//! Backends are pluggable. The [`backends::mock`] module ships deterministic
//! stand-ins so the whole pipeline runs without any model.

pub mod backends;
pub mod budget;
pub mod error;
pub mod filtering;
pub mod hierarchy;
mod lexicon;
pub mod overlap;
pub mod pipeline;
pub mod spans;
pub mod taxonomy;
pub mod text;

pub use error::{BackendError, Error, Result};
pub use overlap::{overlap, OverlapScore};
pub use taxonomy::SpecificityLabel;
pub use text::{normalize_tokens, segment, CharSpan, Document, Paragraph};
