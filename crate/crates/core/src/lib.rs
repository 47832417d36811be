//! Simulation and analysis of homodyne cross-correlation measurements (HCCM).
//!
//! A squeezed-coherent signal and a weak local oscillator (LO) are combined on an
//! unbalanced beam splitter; the two output photocurrent fluctuations are
//! multiplied and averaged. The crate covers the whole chain:
//!
//! - [`gaussian`]: Gaussian states and exact normal-ordered moments (Wick expansion).
//! - [`model`]: beam-splitter coefficient algebra and the three-term correlation model.
//! - [`fock`]: brute-force truncated Fock-space reference used to validate [`gaussian`].
//! - [`config`]: the flat key-value run configuration and presets.
//! - [`detector`]: seeded photocurrent record simulation for phase and LO-strength scans.
//! - [`record`]: the on-disk record format (text and `HCCM1` binary).
//! - [`analysis`]: correlation estimates, trigonometric regression, contribution separation.
//! - [`nonclassicality`]: the determinant test with error propagation.
//! - [`pipeline`]: end-to-end analysis of simulated or loaded scans.

pub mod analysis;
pub mod config;
pub mod detector;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod model;
pub mod nonclassicality;
pub mod pipeline;
pub mod record;

pub use error::{HccmError, Result};
