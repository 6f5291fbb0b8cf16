//! Layer parameters and the layered-medium stack.

use serde::{Deserialize, Serialize};

use super::{DispersionError, Result};

/// Elastic parameters of one homogeneous layer.
///
/// Invariants maintained by the constructors: `vs > 0`, `vp > vs`,
/// `rho > 0` and `mu = rho * vs^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    /// S-wave velocity [km/s].
    pub vs: f64,
    /// P-wave velocity [km/s].
    pub vp: f64,
    /// Density [g/cm³].
    pub rho: f64,
    /// Shear modulus [GPa].
    pub mu: f64,
    /// Lamé first parameter [GPa].
    pub lambda: f64,
}

impl LayerParams {
    /// Builds a layer from wave velocities and density.
    ///
    /// `mu` and `lambda` are derived so that `mu = rho*vs^2` and
    /// `lambda + 2mu = rho*vp^2` hold exactly.
    pub fn new(vs: f64, vp: f64, rho: f64) -> Result<Self> {
        if !(vs > 0.0) {
            return Err(DispersionError::Domain(format!(
                "vs must be positive, got {vs}"
            )));
        }
        if !(vp > vs) {
            return Err(DispersionError::Domain(format!(
                "vp must exceed vs, got vp = {vp}, vs = {vs}"
            )));
        }
        if !(rho > 0.0) {
            return Err(DispersionError::Domain(format!(
                "rho must be positive, got {rho}"
            )));
        }
        let mu = rho * vs * vs;
        let lambda = rho * vp * vp - 2.0 * mu;
        Ok(Self {
            vs,
            vp,
            rho,
            mu,
            lambda,
        })
    }

    /// Builds an exact Poisson solid (`lambda = mu`, so `vp = sqrt(3) vs`)
    /// with the empirical density law.
    pub fn poisson_from_vs(vs: f64) -> Result<Self> {
        if !(vs > 0.0) {
            return Err(DispersionError::Domain(format!(
                "vs must be positive, got {vs}"
            )));
        }
        let rho = 0.466 * vs.powf(0.214);
        Self::new(vs, 3f64.sqrt() * vs, rho)
    }
}

/// Derives the full layer parameterization from the S-wave velocity alone,
/// using the empirical crustal relations
/// `rho = 0.466 vs^0.214`, `vp = 1.732 vs` and `lambda = mu = 0.466 vs^2.214`.
///
/// `mu` is computed as `rho * vs^2`, which equals `0.466 vs^2.214` up to
/// rounding, so the `mu = rho*vs^2` invariant holds to machine precision.
/// Note that `vp = 1.732 vs` together with `lambda = mu` leaves
/// `lambda + 2mu` about 6e-5 away from `rho*vp^2`; this is a property of the
/// empirical relations themselves, not of the implementation.
pub fn elastic_params_from_vs(vs: f64) -> Result<LayerParams> {
    if !(vs > 0.0) {
        return Err(DispersionError::Domain(format!(
            "vs must be positive, got {vs}"
        )));
    }
    let rho = 0.466 * vs.powf(0.214);
    let mu = rho * vs * vs;
    Ok(LayerParams {
        vs,
        vp: 1.732 * vs,
        rho,
        mu,
        lambda: mu,
    })
}

/// Ordered stack of layers over a half-space; index 0 is the surface layer.
///
/// `thicknesses` has one entry per layer except the last (the half-space),
/// so `thicknesses.len() == layers.len() - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarthStack {
    layers: Vec<LayerParams>,
    thicknesses: Vec<f64>,
}

impl EarthStack {
    pub fn new(layers: Vec<LayerParams>, thicknesses: Vec<f64>) -> Result<Self> {
        if layers.is_empty() {
            return Err(DispersionError::Domain(
                "stack needs at least the half-space layer".into(),
            ));
        }
        if thicknesses.len() + 1 != layers.len() {
            return Err(DispersionError::Domain(format!(
                "expected {} thicknesses for {} layers, got {}",
                layers.len() - 1,
                layers.len(),
                thicknesses.len()
            )));
        }
        if thicknesses.iter().any(|&h| !(h > 0.0)) {
            return Err(DispersionError::Domain(
                "all thicknesses must be positive".into(),
            ));
        }
        Ok(Self {
            layers,
            thicknesses,
        })
    }

    /// Builds a stack from S-wave velocities with the empirical parameter
    /// relations and a common layer thickness [km].
    pub fn from_vs_profile(vs: &[f64], thickness: f64) -> Result<Self> {
        let layers = vs
            .iter()
            .map(|&v| elastic_params_from_vs(v))
            .collect::<Result<Vec<_>>>()?;
        let thicknesses = vec![thickness; vs.len().saturating_sub(1)];
        Self::new(layers, thicknesses)
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn thicknesses(&self) -> &[f64] {
        &self.thicknesses
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn halfspace(&self) -> &LayerParams {
        self.layers.last().expect("stack is non-empty")
    }

    pub fn min_vs(&self) -> f64 {
        self.layers.iter().map(|l| l.vs).fold(f64::INFINITY, f64::min)
    }

    pub fn max_vs(&self) -> f64 {
        self.layers.iter().map(|l| l.vs).fold(0.0, f64::max)
    }
}

/// Default common layer thickness [km] used for generated models.
pub const DEFAULT_THICKNESS_KM: f64 = 4.0;
