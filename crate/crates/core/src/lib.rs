//! Simulation and policy library for the three-node half-duplex bidirectional
//! relay network with buffers at the relay.
//!
//! Two users exchange data through a relay that stores what it decodes in two
//! infinite buffers. In every block-fading slot one of six transmission modes
//! is active:
//!
//! | mode | transmitters | effect |
//! |------|--------------|--------|
//! | M1 | user 1 | fills buffer 1 |
//! | M2 | user 2 | fills buffer 2 |
//! | M3 | users 1 and 2 (multiple access) | fills both buffers |
//! | M4 | relay | drains buffer 2 towards user 1 |
//! | M5 | relay | drains buffer 1 towards user 2 |
//! | M6 | relay (broadcast) | drains both buffers |
//!
//! [`policy`] holds the sum-rate-optimal joint mode selection and power
//! allocation rule, [`calibrate`] finds its three dual thresholds, [`engine`]
//! runs any [`engine::ProtocolPolicy`] slot by slot over a [`channel`] trace,
//! and [`benchmarks`] provides the reference protocols. [`oracle`] contains
//! brute-force verifiers for the closed forms.

pub mod benchmarks;
pub mod calibrate;
pub mod channel;
pub mod engine;
mod error;
pub mod oracle;
pub mod policy;
pub mod rate;
mod search;

pub use error::{Error, Result};

/// Converts a power in dB (relative to the unit noise variance) to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
