//! Precision limits and weak-value readout for cyclic sensing networks in
//! which a single probe visits `N` tilt sensors, optionally in a coherent or
//! classical superposition of the two traversal orders.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] / [`probe`]: gridded transverse-mode wavefunctions, moments, overlaps
//! * [`network`]: kicks, free-space propagation, parity, traversals and their reduced composites
//! * [`fisher`]: closed-form and finite-difference QFIMs, Cramér-Rao bounds
//! * [`wva`]: post-selection, weak values, momentum readout, waveplates
//! * [`experiment`]: drive-voltage conversion, SNR model, linear and scaling fits

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod fisher;
pub mod grid;
pub mod network;
pub mod probe;
pub mod wva;

pub use error::{Error, Result};
pub use grid::{Grid, Representation, WaveFunction};
pub use num_complex::Complex64;
pub use probe::{fidelity, make_gaussian, moments, Moments, ProbeSpec};
