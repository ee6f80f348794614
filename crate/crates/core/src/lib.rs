//! Motif-aware state assignment (MASA) for multivariate time series.
//!
//! The pipeline alternates between assigning a state to every measurement,
//! mining recurring state sequences (motifs) from that assignment, using the
//! motifs to reassign noisy measurements, and refitting the state model.

pub mod candidates;
pub mod commands;
pub mod driver;
pub mod error;
pub mod io;
pub mod metrics;
pub mod motif_hmm;
pub mod scoring;
pub mod state_model;
pub mod synth;
pub mod timeseries;

pub use error::{MasaError, Result};
