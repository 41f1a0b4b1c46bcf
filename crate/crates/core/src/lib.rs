//! Probabilistic threshold keyword queries over probabilistic XML under
//! quasi-SLCA semantics.
//!
//! * [`prxml`]: document model, dialect, generator
//! * [`worlds`]: brute-force possible-worlds oracle
//! * [`pi_index`]: probabilistic and keyword inverted indexes
//! * [`bounds`]: lower/upper bounds and their updates
//! * [`engine`]: baseline and index-based evaluation
//! * [`eval`]: precision/recall and benchmark harness

pub mod error;
pub mod prxml;
pub mod worlds;
pub mod pi_index;
pub mod bounds;
pub mod engine;
pub mod eval;

pub use error::{Error, Result};
