//! Simulation library for a two-stage single-input multi-output (SIMO) burst
//! receiver operating on symbol-spaced intersymbol-interference channels with
//! co-channel interference.
//!
//! Stage one designs a bank of short least-squares filters that suppress
//! co-channel interference across diversity branches while preserving the
//! ISI channel of the target user. Stage two designs a channel-shortening
//! prefilter that maximizes a mutual-information lower bound under a banded
//! Ungerboeck detection model, collapses all branches into a single stream,
//! and hands that stream to a reduced-state max-log-MAP equalizer. A
//! homomorphic (minimum-phase prefilter + decision-feedback) receiver is
//! provided as a baseline, together with exhaustive-search oracles, operation
//! counters, and a Monte-Carlo BER/BLER harness.
//!
//! Module map:
//! - [`numkit`]: complex DFT/IDFT, shift-matrix operator, Hermitian solves,
//!   convolution.
//! - [`sigmodel`]: alphabets, burst construction, fading SIMO channel with
//!   interferers and noise.
//! - [`estimate`]: training-based least-squares channel and spatial noise
//!   covariance estimation.
//! - [`ccistage`]: stage-one interference-suppression filter bank.
//! - [`milb`]: stage-two channel shortener plus a dense block-circulant
//!   oracle.
//! - [`equalize`]: Ungerboeck max-log-MAP, Forney decision-feedback
//!   equalizer, minimum-phase prefilter, exhaustive MLSE oracle, and
//!   operation counters.
//! - [`harness`]: per-burst receiver pipeline, convolutional coding, and
//!   seeded Monte-Carlo sweeps.

pub mod ccistage;
pub mod equalize;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod milb;
pub mod numkit;
pub mod selftest;
pub mod sigmodel;

pub use error::{Error, Result};
pub use num_complex::Complex64;
