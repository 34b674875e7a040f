//! Forward model of an exponentially rising optical pulse source.
//!
//! The chain runs in the order the hardware does:
//!
//! 1. [`envelope`]: a transistor converts a linear base-voltage ramp into an
//!    exponentially rising collector current, cut off by a gate pulse.
//! 2. [`rf`]: a DDS image tone is band-pass filtered, quadrupled to the RF
//!    carrier `f_S` and multiplied with the envelope in a mixer.
//! 3. [`eom`]: a phase modulator writes the RF onto a cw optical carrier,
//!    producing Bessel-weighted sidebands at multiples of `f_S`.
//! 4. [`etalon`]: a cascade of Fabry-Perot etalons selects one sideband.
//! 5. [`detect`]: a square-law photodiode and oscilloscope observe the pulse.
//! 6. [`atom`]: the filtered mode drives a weakly excited two-level atom.
//!
//! All signals are complex envelopes on a uniform [`TimeGrid`]; optical fields
//! are expressed relative to a declared carrier and the optical frequency itself
//! is never sampled. [`chain`] wires the stages together from a [`ChainConfig`].

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atom;
pub mod chain;
pub mod config;
pub mod detect;
pub mod envelope;
pub mod eom;
mod error;
pub mod etalon;
pub mod report;
pub mod rf;
pub mod waveform;

pub use chain::{run_chain, sweep, write_outputs, ChainRun};
pub use config::ChainConfig;
pub use error::{Error, Result};
pub use report::RunReport;

pub use waveform::{fit_exponential, Direction, FitResult, Spectrum, TimeGrid, Unit, Waveform};
