//! Metrics and data tooling for scores emitted as digit tokens.
//!
//! - [`score`]: the `m`-digit score grid, normalization and rendering.
//! - [`expectation`]: expectations over digit logits, NCM / NCM* and curves.
//! - [`rank`]: SRCC / PLCC and sorting-trial metrics.
//! - [`cot`]: conversation forging and response extraction.
//! - [`composite`]: PLS attribute weighting.
//! - [`sim`]: synthetic logits and training-curve emulation.

pub mod attributes;
pub mod composite;
pub mod cot;
pub mod error;
pub mod expectation;
pub mod numeric;
pub mod rank;
pub mod records;
pub mod score;
pub mod sim;

pub use error::{Error, Result};
pub use score::ScoreValue;
