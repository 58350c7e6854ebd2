//! Simulation and planning toolkit for phonon-number readout in electromechanical circuits.
//!
//! The crate is organised by task:
//! - [`params`] resolves circuit and membrane elements into rates and couplings,
//! - [`metrics`] evaluates closed-form figures of merit,
//! - [`dynamics`] solves the linearized noisy dynamics numerically,
//! - [`measure`] models homodyne outcome statistics,
//! - [`plan`] optimizes the per-window heating and plans experiments,
//! - [`config`], [`output`] and [`cli`] implement the `qndsim` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod extended;
pub mod measure;
pub mod metrics;
pub mod output;
pub mod params;
pub mod plan;

pub use error::{Error, Result};
pub use extended::Extended;
