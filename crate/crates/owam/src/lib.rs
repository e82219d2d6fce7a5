//! File formats, evaluation harness and command-line plumbing around
//! [`owam_core`].
//!
//! * [`io`] reads wide or long sensor CSVs onto a repaired uniform grid.
//! * [`pipeline`] runs offline and prequential online evaluations.
//! * [`output`] writes reports, traces, weight maps and dumps.
//! * [`config`] maps TOML run definitions onto [`pipeline::RunConfig`].
//! * [`runner`] drives run directories, benches and sweeps.

pub mod config;
pub mod error;
pub mod io;
pub mod output;
pub mod pipeline;
pub mod runner;

pub use error::{Error, Result};
pub use owam_core;
