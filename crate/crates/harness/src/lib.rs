//! Corpus tooling around `semwire-core`: discovery, rate–distortion sweeps, payload
//! accounting, plots and a synthetic street-scene generator.

pub mod corpus;
mod error;
pub mod payload;
pub mod plot;
pub mod stats;
pub mod sweep;
pub mod synth;

pub use corpus::{discover, CorpusItem, CorpusKind};
pub use error::{HarnessError, Result};
pub use sweep::{run_sweep, SweepPlan, SweepReport};
