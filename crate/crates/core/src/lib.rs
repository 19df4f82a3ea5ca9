//! Readability measurement and control utilities for Turkish summarization.
//!
//! The crate is organised bottom-up:
//!
//! - [`text`]: sentence splitting, word tokenization, syllable counting and
//!   the [`TextStats`] every formula consumes.
//! - [`readability`]: seven readability formulas with their level tables,
//!   centred on the Bezirci-Yılmaz YOD metric.
//! - [`corpus`]: JSONL ingestion, YOD histograms, per-level balanced splits
//!   and inverse-frequency sampling weights.
//! - [`eval`]: ROUGE-1/2/L, METEOR and BLEU plus YOD success rates,
//!   aggregated per level and per education group.
//! - [`exec`]: the sequential/parallel switch used by the batch operations.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod exec;
pub mod readability;
pub mod text;

pub use error::{Error, Result};
pub use exec::Execution;
pub use readability::{Formula, ReadabilityScore, YodLevel};
pub use text::{Language, TextStats};
