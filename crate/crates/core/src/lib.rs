//! Simulation of DRAG-shaped dispersive readout probes.
//!
//! The crate builds cosine-flattop probe envelopes, adds a derivative
//! quadrature that places a spectral zero at a chosen baseband frequency,
//! and quantifies what the resulting pulse does to a dispersively coupled
//! qubit: cavity pointer-state dynamics, measurement-induced dephasing,
//! Ramsey fringes, and multiplexed crosstalk.
//!
//! Unit conventions used throughout:
//!
//! - user-facing times are in ns, user-facing frequencies in MHz (ordinary);
//! - internally, cavity dynamics run in µs with angular frequencies in rad/µs;
//! - [`units`] is the only place where these are converted.
//!
//! Baseband sign convention: a spectral component at baseband offset `f`
//! (in the `exp(-i 2π f t)` transform of [`spectrum::dtft`]) is detuned from a
//! resonator by `Δ = Δ_d + 2π f`, where `Δ_d = ω_r − ω_d`. A notch placed at
//! `f = f_d − f_r` therefore sits exactly on the resonator.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod config;
pub mod crosstalk;
pub mod dephasing;
pub mod dispersive;
pub mod error;
pub mod io;
pub mod presets;
pub mod ramsey;
pub mod runs;
pub mod spectrum;
pub mod units;
pub mod waveform;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
