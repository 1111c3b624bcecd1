//! Simulator and statistical-analysis toolkit for projection-noise-limited
//! optical readout of solid-state spin ensembles.
//!
//! The crate models a small ensemble of three-level (or two-level) spins read
//! out repetitively through a weak optical channel. Each readout repetition
//! yields Poissonian photon counts whose mean depends on the spin level, the
//! spins relax through configurable telegraph dynamics, and the detector can
//! distort counts. On top of the simulator sit the analysis tools used to
//! locate the crossover from photon shot noise to spin projection noise, fit
//! relaxation under readout, reconstruct spin states from tomographic
//! marginals, and predict magnetometer sensitivity.
//!
//! Entry points:
//! - [`ensemble`]: closed-form statistics of binned spin ensembles.
//! - [`sim`]: Monte Carlo readout simulator (deterministic per seed).
//! - [`stats`]: small statistical helpers shared across modules.

pub mod ensemble;
pub mod error;
pub mod cli;
pub mod config;
pub mod fit;
pub mod io;
pub mod noise;
pub mod reconstruction;
pub mod sensitivity;
pub mod sim;
pub mod spectroscopy;
pub mod stats;

pub use error::{Error, Result};
