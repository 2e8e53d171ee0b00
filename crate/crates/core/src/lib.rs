//! Classical simulator and numerical verifier for repeated phase estimation
//! (RPE) of the ground state energy of `-1/2 Δ + V` on the unit cube.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: finite-difference discretization, potentials, and the known
//!   sine eigenstructure of the discrete Laplacian.
//! * [`spectral`]: dense eigendecomposition used as classical ground truth.
//! * [`suzuki`]: Suzuki product-formula plans for `exp(-i M 2^j / R)`.
//! * [`phase`]: phase estimation outcome distributions and post-measurement
//!   states, exact and product-formula backends.
//! * [`rpe`]: the staged driver, parameter selection, and run reports.
//! * [`cost`]: exponential counts, closed-form envelopes, query estimates.
//! * [`verify`]: batch verification suites producing pass/fail reports.
//! * [`config`], [`io`], [`calibration`]: file formats and ingestion.

pub mod calibration;
pub mod config;
pub mod cost;
mod error;
pub mod grid;
pub mod io;
pub mod phase;
pub mod rpe;
pub mod spectral;
pub mod suzuki;
pub mod verify;

pub use error::{Error, ParseError, Result};

/// Complex amplitude type used for all quantum states.
pub type C64 = num_complex::Complex64;

/// Column vector of complex amplitudes.
pub type State = nalgebra::DVector<C64>;
