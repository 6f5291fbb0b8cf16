//! Horizontal and vertical wavenumbers for a trial phase velocity.

use num_complex::Complex64;

use super::layer::LayerParams;
use super::{DispersionError, Result};

/// Wavenumbers of one layer at a trial `(c, omega)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavenumbers {
    /// Horizontal propagation constant `gamma = omega / c` [1/km].
    pub gamma: f64,
    /// Vertical S wavenumber `sqrt(gamma^2 - k_s^2)` on the principal branch.
    pub eta_s: Complex64,
    /// Vertical P wavenumber `sqrt(gamma^2 - k_p^2)` on the principal branch.
    pub eta_p: Complex64,
    /// S body wavenumber `omega / vs` [1/km].
    pub k_s: f64,
    /// P body wavenumber `omega / vp` [1/km].
    pub k_p: f64,
}

/// Principal branch of `sqrt(x)` for real `x`: `Re >= 0`, and `Im >= 0`
/// on the cut (`x < 0`).
fn principal_sqrt(x: f64) -> Complex64 {
    if x >= 0.0 {
        Complex64::new(x.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-x).sqrt())
    }
}

/// Computes `gamma`, `eta_s`, `eta_p` for a layer at trial phase velocity
/// `c` [km/s] and angular frequency `omega` [rad/s].
pub fn vertical_wavenumbers(c: f64, omega: f64, layer: &LayerParams) -> Result<Wavenumbers> {
    if !(c > 0.0) {
        return Err(DispersionError::Domain(format!(
            "phase velocity must be positive, got {c}"
        )));
    }
    if !(omega > 0.0) {
        return Err(DispersionError::Domain(format!(
            "omega must be positive, got {omega}"
        )));
    }
    let gamma = omega / c;
    let k_s = omega / layer.vs;
    let k_p = omega / layer.vp;
    Ok(Wavenumbers {
        gamma,
        eta_s: principal_sqrt(gamma * gamma - k_s * k_s),
        eta_p: principal_sqrt(gamma * gamma - k_p * k_p),
        k_s,
        k_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::elastic_params_from_vs;

    #[test]
    fn branch_point_gives_zero_eta() {
        let layer = elastic_params_from_vs(3.0).unwrap();
        let wn = vertical_wavenumbers(3.0, 1.0, &layer).unwrap();
        assert_eq!(wn.eta_s, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn slow_phase_velocity_gives_real_positive_eta_s() {
        let layer = elastic_params_from_vs(3.0).unwrap();
        let wn = vertical_wavenumbers(2.5, 1.0, &layer).unwrap();
        assert!(wn.eta_s.im == 0.0 && wn.eta_s.re > 0.0);
        assert!(wn.eta_p.im == 0.0 && wn.eta_p.re > 0.0);
    }

    #[test]
    fn fast_phase_velocity_gives_positive_imaginary_eta_s() {
        // c > vs means eta_s^2 = gamma^2 - k_s^2 < 0; verify by direct
        // arithmetic and check the branch lands on +i.
        let layer = elastic_params_from_vs(3.0).unwrap();
        let (c, omega) = (3.5, 2.0);
        let wn = vertical_wavenumbers(c, omega, &layer).unwrap();
        let target = wn.gamma * wn.gamma - wn.k_s * wn.k_s;
        assert!(target < 0.0);
        assert!(wn.eta_s.re == 0.0 && wn.eta_s.im > 0.0);
        let sq = wn.eta_s * wn.eta_s;
        assert!((sq.re - target).abs() / target.abs() < 1e-12);
        assert!(sq.im.abs() / target.abs() < 1e-12);
    }

    #[test]
    fn eta_squared_reconstructs_gamma2_minus_k2() {
        let layer = elastic_params_from_vs(4.2).unwrap();
        for &(c, omega) in &[(2.6, 0.0785), (3.9, 1.3), (4.4, 6.0), (5.8, 12.57)] {
            let wn = vertical_wavenumbers(c, omega, &layer).unwrap();
            for (eta, k) in [(wn.eta_s, wn.k_s), (wn.eta_p, wn.k_p)] {
                let target = wn.gamma * wn.gamma - k * k;
                let sq = eta * eta;
                let scale = target.abs().max(1e-300);
                assert!((sq.re - target).abs() / scale < 1e-12);
                assert!(sq.im.abs() / scale < 1e-12);
                assert!(eta.re >= 0.0);
                if eta.re == 0.0 {
                    assert!(eta.im >= 0.0);
                }
            }
        }
    }

    #[test]
    fn rejects_non_positive_inputs() {
        let layer = elastic_params_from_vs(3.0).unwrap();
        assert!(vertical_wavenumbers(0.0, 1.0, &layer).is_err());
        assert!(vertical_wavenumbers(2.0, 0.0, &layer).is_err());
    }
}
