//! Link-level Monte Carlo simulation of spatial modulation (SM), space shift
//! keying (SSK) and a conventional single-antenna M-ary benchmark over a
//! shadowed-Rician LEO satellite downlink.
//!
//! The crate is organised bottom-up:
//!
//! * [`link_budget`]: slant range and the large-scale path-loss chain.
//! * [`channel`]: shadowed-Rician channel matrices, Doppler/delay rotation
//!   and the imperfect-CSI mixing model.
//! * [`modem`]: constellations, bit mapping and spectral efficiency.
//! * [`detection`]: received-signal synthesis, exhaustive ML detection and
//!   detector operation counts.
//! * [`montecarlo`]: seeded, parallel BER estimation over SNR grids.
//! * [`config`] and [`report`]: the batch configuration format, CSV tables
//!   and run manifests used by the `leosm` binary.

pub mod channel;
pub mod config;
pub mod detection;
mod error;
pub mod link_budget;
pub mod modem;
pub mod montecarlo;
pub mod report;

pub use error::{Error, Result};
pub use num_complex::Complex64;
