//! Distribution-based quality scoring.
//!
//! Continuous mean opinion scores become soft labels over discrete rating
//! levels ([`softlabel`]), a scorer emits a distribution over those levels
//! that collapses back to a scalar ([`scoring`]), distributions from several
//! models or prompts can be averaged ([`ensemble`]), and predictions are
//! judged by SRCC/PLCC per quality dimension ([`metrics`]). [`trainer`] fits
//! a small linear-softmax scorer with a KL objective, [`simulator`] draws
//! synthetic annotator panels, and [`harness`] wires it all to files and the
//! `docqa` command line tool.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod scoring;
pub mod simulator;
pub mod softlabel;
pub mod trainer;

pub use error::{Error, Result};
