//! Forward model: Rayleigh-wave dispersion curves of a layered half-space.
//!
//! The medium is a stack of homogeneous elastic layers over a half-space.
//! For a trial phase velocity the surface impedance tensor is obtained by a
//! downward-to-upward recurrence: the half-space contributes a closed-form
//! impedance, and each layer maps the impedance at its lower interface to the
//! impedance at its upper interface. A Rayleigh mode exists where the
//! determinant of the surface impedance tensor vanishes; the solver scans a
//! velocity bracket for the lowest such root (the fundamental mode) and
//! refines it by bisection.
//!
//! Units: velocities km/s, thicknesses km, densities g/cm³, angular
//! frequencies rad/s, moduli GPa. All arithmetic is 64-bit (complex values
//! are pairs of 64-bit reals).

mod layer;
mod solver;
mod transfer;
mod wave;

pub use layer::{elastic_params_from_vs, EarthStack, LayerParams, DEFAULT_THICKNESS_KM};
pub use solver::{
    dispersion_curve, dispersion_residual, paper_frequency_grid, solve_phase_velocity,
    uniform_grid, DispersionCurve, RootSearchConfig, PAPER_OMEGA_MAX, PAPER_OMEGA_MIN,
    PAPER_OMEGA_POINTS,
};
pub use transfer::{
    boundary_matrix_g, halfspace_impedance, halfspace_impedance_with_eps, layer_transfer,
    surface_impedance, ImpedanceTensor, DEFAULT_SINGULAR_EPS,
};
pub use wave::{vertical_wavenumbers, Wavenumbers};

/// Errors produced by the forward model.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DispersionError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("half-space impedance denominator |eta_s*eta_p - gamma^2| = {magnitude:.3e} below epsilon at c = {c} km/s, omega = {omega} rad/s")]
    SingularDenominator { c: f64, omega: f64, magnitude: f64 },
    #[error("ill-conditioned layer transfer at c = {c} km/s, omega = {omega} rad/s, layer {layer_index}")]
    IllConditioned {
        c: f64,
        omega: f64,
        layer_index: usize,
    },
    #[error("no sign change of the dispersion residual for omega = {omega} rad/s in [{c_min}, {c_max}] km/s")]
    NoRoot { omega: f64, c_min: f64, c_max: f64 },
    #[error("dispersion curve failed at omegas {omegas:?}: {first_cause}")]
    CurveFailed {
        omegas: Vec<f64>,
        first_cause: String,
    },
}

pub type Result<T> = std::result::Result<T, DispersionError>;
