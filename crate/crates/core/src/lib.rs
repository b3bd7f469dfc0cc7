//! Viscous collective atomic recoil lasing (CARL) with molasses friction and
//! momentum diffusion.
//!
//! The crate is organised bottom-up:
//!
//! - [`params`] maps laboratory quantities onto the dimensionless `(κ, D)` plane.
//! - [`stability`] holds the closed-form linear theory of the uniform state.
//! - [`fpmodes`] integrates the Fourier-harmonic hierarchy of the
//!   Fokker-Planck equation coupled to the cavity field.
//! - [`ensemble`] is a stochastic particle simulator used as an independent
//!   check of the mode hierarchy.
//! - [`steady`] solves for the rotating nonlinear steady state.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod ensemble;
pub mod error;
pub mod fpmodes;
pub mod params;
pub mod stability;
pub mod steady;

pub use error::{Error, Result};
pub use num_complex::Complex64;
