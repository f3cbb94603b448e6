//! Models for multi-antenna NOMA downlink transmission with imperfect channel
//! state information.
//!
//! The crate covers the whole chain of a clustered NOMA downlink: channel and
//! CSI generation ([`channel`]), zero-forcing beam construction
//! ([`beamforming`]), the SIC link-level Monte Carlo engine ([`link`]), exact
//! and asymptotic average-rate expressions ([`analytic`], built on
//! [`mixture`] and [`special`]), and the power, feedback and transmission
//! mode optimizers ([`allocation`]).
//!
//! The crate is `no_std` and only needs `alloc`. IO, configuration files,
//! parallel execution and the command line live in the `noma-lab` crate.

#![no_std]
#![warn(missing_debug_implementations, unused_qualifications)]
// Negated comparisons are the NaN-rejecting guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod allocation;
pub mod analytic;
pub mod beamforming;
pub mod channel;
pub mod cmat;
mod error;
pub mod grid;
pub mod link;
pub mod mixture;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
pub use grid::UserGrid;

/// Complex baseband sample type used throughout the crate.
pub type C64 = num_complex::Complex64;

/// Converts an SNR in dB to the linear total transmit power (unit noise).
pub fn snr_db_to_power(snr_db: f64) -> f64 {
    libm::pow(10.0, snr_db / 10.0)
}
