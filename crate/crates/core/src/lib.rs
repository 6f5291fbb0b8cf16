//! Rayleigh-wave dispersion modelling and machine-learning inversion.
//!
//! The crate is organized around the pipeline it implements:
//!
//! * [`dispersion`] — forward model: phase-velocity dispersion curves of a
//!   layered elastic half-space, computed from an impedance-tensor recurrence
//!   and root finding on the surface determinant.
//! * [`dataset`] — reproducible generation, noising, splitting and CSV
//!   persistence of (velocity profile, dispersion curve) sample sets.
//! * [`neural`] — a self-contained dense-network engine with analytic
//!   backpropagation, plus the mixture-density head and the
//!   forward-consistent loss used for the inversion network.
//! * [`eval`] — metrics (R², nearest-mean score), noise-robustness sweeps,
//!   the sinusoid toy experiment, and the non-uniqueness probe.
//! * [`cli`] — subcommand implementations behind the `rayleigh-fwmdn` binary.

pub mod cli;
pub mod dataset;
pub mod dispersion;
pub mod eval;
pub mod neural;
pub mod util;
