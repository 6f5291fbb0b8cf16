//! Dispersion residual and fundamental-mode root finding.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::layer::EarthStack;
use super::transfer::surface_impedance;
use super::{DispersionError, Result};

/// Lower end of the angular-frequency grid [rad/s].
pub const PAPER_OMEGA_MIN: f64 = 0.0785;
/// Upper end of the angular-frequency grid [rad/s].
pub const PAPER_OMEGA_MAX: f64 = 12.57;
/// Number of grid frequencies.
pub const PAPER_OMEGA_POINTS: usize = 50;

/// The 50-point uniform angular-frequency grid on
/// [`PAPER_OMEGA_MIN`, `PAPER_OMEGA_MAX`].
pub fn paper_frequency_grid() -> Vec<f64> {
    uniform_grid(PAPER_OMEGA_MIN, PAPER_OMEGA_MAX, PAPER_OMEGA_POINTS)
}

/// `n` uniform points from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "grid needs at least two points");
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|j| if j + 1 == n { hi } else { lo + j as f64 * step })
        .collect()
}

/// Bracket and refinement parameters for the phase-velocity root search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootSearchConfig {
    /// Lower bracket bound [km/s].
    pub c_min: f64,
    /// Upper bracket bound [km/s].
    pub c_max: f64,
    /// Number of scan points across the bracket.
    pub grid_points: usize,
    /// Bisection tolerance on the phase velocity [km/s].
    pub tol: f64,
    /// Cap on bisection iterations per bracket.
    pub max_iter: usize,
}

impl RootSearchConfig {
    /// Default bracket for a stack: `[0.85 min(vs), 1.05 max(vs)]` with a
    /// 400-point scan. The fundamental-mode root always lies between roughly
    /// 0.9 times the slowest layer velocity and the half-space Rayleigh
    /// velocity, so this window brackets it with margin.
    pub fn for_stack(stack: &EarthStack) -> Self {
        Self {
            c_min: 0.85 * stack.min_vs(),
            c_max: 1.05 * stack.max_vs(),
            grid_points: 400,
            tol: 1e-5,
            max_iter: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_min > 0.0 && self.c_max > self.c_min) {
            return Err(DispersionError::Domain(format!(
                "root bracket must satisfy 0 < c_min < c_max, got [{}, {}]",
                self.c_min, self.c_max
            )));
        }
        if self.grid_points < 2 {
            return Err(DispersionError::Domain(
                "grid_points must be at least 2".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(DispersionError::Domain("tol must be positive".into()));
        }
        Ok(())
    }
}

/// A computed dispersion curve: strictly increasing angular frequencies and
/// the fundamental-mode phase velocity at each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionCurve {
    pub omegas: Vec<f64>,
    pub velocities: Vec<f64>,
}

impl DispersionCurve {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

/// Normalized complex surface determinant. Dividing by the product of the
/// two largest entry magnitudes makes the value scale-free: a joint
/// rescaling of every `mu`, `lambda` cancels exactly, and near poles of the
/// impedance entries the ratio stays bounded.
fn residual_complex(stack: &EarthStack, c: f64, omega: f64) -> Result<Complex64> {
    let z = surface_impedance(stack, c, omega)?;
    let scale = z.residual_scale();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(DispersionError::IllConditioned {
            c,
            omega,
            layer_index: 0,
        });
    }
    Ok(z.det() / scale)
}

/// Real dispersion residual whose sign changes bracket Rayleigh roots.
///
/// In the trapped-mode window (`c` below the half-space body velocities) the
/// normalized determinant is real up to rounding, so its real part carries
/// the full sign information.
pub fn dispersion_residual(stack: &EarthStack, c: f64, omega: f64) -> Result<f64> {
    residual_complex(stack, c, omega).map(|z| z.re)
}

/// Shifts scan points off layer body velocities, where the exponential
/// basis degenerates and the boundary system is singular.
fn nudge_off_branch_points(stack: &EarthStack, c: f64, span: f64) -> f64 {
    let near = stack
        .layers()
        .iter()
        .flat_map(|l| [l.vs, l.vp])
        .any(|v| (c - v).abs() < 1e-12 * v);
    if near {
        c + 1e-9 * span
    } else {
        c
    }
}

/// Finds the fundamental-mode phase velocity at `omega`: scans the bracket
/// for the lowest sign change of the residual and refines it by bisection.
pub fn solve_phase_velocity(
    stack: &EarthStack,
    omega: f64,
    cfg: &RootSearchConfig,
) -> Result<f64> {
    cfg.validate()?;
    let span = cfg.c_max - cfg.c_min;
    let grid = uniform_grid(cfg.c_min, cfg.c_max, cfg.grid_points);

    // Phase reference at the low end of the bracket: rotating by it makes the
    // residual real there, pinning a consistent sign convention for the scan.
    let mut phase: Option<Complex64> = None;
    let mut rotated = |c: f64| -> Option<f64> {
        let z = residual_complex(stack, c, omega).ok()?;
        let p = *phase.get_or_insert_with(|| {
            let n = z.norm();
            if n > 0.0 {
                z.conj() / n
            } else {
                Complex64::new(1.0, 0.0)
            }
        });
        Some((z * p).re)
    };

    let mut prev: Option<(f64, f64)> = None;
    for &raw_c in &grid {
        let c = nudge_off_branch_points(stack, raw_c, span);
        let Some(r) = rotated(c) else {
            prev = None;
            continue;
        };
        if r == 0.0 {
            return Ok(c);
        }
        if let Some((c_lo, r_lo)) = prev {
            if r_lo * r < 0.0 {
                if let Some(root) = bisect(&mut rotated, c_lo, r_lo, c, r, cfg) {
                    return Ok(root);
                }
                // The bracket refined onto a pole-like feature; keep scanning.
            }
        }
        prev = Some((c, r));
    }
    Err(DispersionError::NoRoot {
        omega,
        c_min: cfg.c_min,
        c_max: cfg.c_max,
    })
}

fn bisect(
    residual: &mut impl FnMut(f64) -> Option<f64>,
    mut lo: f64,
    mut r_lo: f64,
    mut hi: f64,
    r_hi: f64,
    cfg: &RootSearchConfig,
) -> Option<f64> {
    let entry_mag = r_lo.abs().max(r_hi.abs());
    for _ in 0..cfg.max_iter {
        if hi - lo <= cfg.tol {
            break;
        }
        let mut mid = 0.5 * (lo + hi);
        let mut r_mid = residual(mid);
        if r_mid.is_none() {
            // Evaluation failed exactly at the midpoint; retry slightly off.
            mid += 0.01 * (hi - lo);
            r_mid = residual(mid);
        }
        let r_mid = r_mid?;
        if r_mid == 0.0 {
            return Some(mid);
        }
        if r_lo * r_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            r_lo = r_mid;
        }
    }
    let root = 0.5 * (lo + hi);
    // A genuine root shrinks the residual as the bracket tightens; a sign
    // flip across a pole grows it instead.
    let r_root = residual(root)?;
    if r_root.abs() <= entry_mag {
        Some(root)
    } else {
        None
    }
}

/// Computes the dispersion curve over a strictly increasing frequency grid.
/// Any per-frequency failure aborts the curve and reports every offending
/// frequency.
pub fn dispersion_curve(
    stack: &EarthStack,
    omegas: &[f64],
    cfg: &RootSearchConfig,
) -> Result<DispersionCurve> {
    if omegas.is_empty() {
        return Err(DispersionError::Domain("empty frequency grid".into()));
    }
    if omegas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DispersionError::Domain(
            "frequencies must be strictly increasing".into(),
        ));
    }
    let mut velocities = Vec::with_capacity(omegas.len());
    let mut failures = Vec::new();
    let mut first_cause = None;
    for &omega in omegas {
        match solve_phase_velocity(stack, omega, cfg) {
            Ok(c) => velocities.push(c),
            Err(e) => {
                if first_cause.is_none() {
                    first_cause = Some(e.to_string());
                }
                failures.push(omega);
            }
        }
    }
    if !failures.is_empty() {
        return Err(DispersionError::CurveFailed {
            omegas: failures,
            first_cause: first_cause.unwrap_or_default(),
        });
    }
    Ok(DispersionCurve {
        omegas: omegas.to_vec(),
        velocities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::layer::LayerParams;

    /// Independent oracle: bisection on the classical Rayleigh
    /// characteristic equation `(2 - c^2/vs^2)^2 =
    /// 4 sqrt(1 - c^2/vp^2) sqrt(1 - c^2/vs^2)` for a homogeneous
    /// half-space.
    pub(crate) fn classical_rayleigh_velocity(vs: f64, vp: f64) -> f64 {
        let f = |c: f64| {
            let a = 2.0 - (c * c) / (vs * vs);
            a * a - 4.0 * (1.0 - c * c / (vp * vp)).sqrt() * (1.0 - c * c / (vs * vs)).sqrt()
        };
        let (mut lo, mut hi) = (0.5 * vs, 0.999 * vs);
        assert!(f(lo) * f(hi) < 0.0, "oracle bracket must straddle the root");
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn poisson_halfspace(vs: f64) -> EarthStack {
        let layer = LayerParams::poisson_from_vs(vs).unwrap();
        EarthStack::new(vec![layer], vec![]).unwrap()
    }

    #[test]
    fn classical_oracle_recovers_the_known_poisson_ratio() {
        // For an exact Poisson solid the root sits at c/vs = 0.91940...
        let c = classical_rayleigh_velocity(1.0, 3f64.sqrt());
        assert!((c - 0.9194).abs() < 1e-4, "got {c}");
    }

    #[test]
    fn residual_vanishes_at_the_classical_root() {
        let vs = 3.0;
        let stack = poisson_halfspace(vs);
        let c_star = classical_rayleigh_velocity(vs, 3f64.sqrt() * vs);
        let r = dispersion_residual(&stack, c_star, 1.0).unwrap();
        assert!(r.abs() < 1e-4, "residual at oracle root: {r}");
        assert!((c_star / vs - 0.9194).abs() < 1e-3);
    }

    #[test]
    fn residual_changes_sign_around_the_root() {
        let vs = 3.0;
        let stack = poisson_halfspace(vs);
        let c_star = classical_rayleigh_velocity(vs, 3f64.sqrt() * vs);
        let delta = 1e-3 * vs;
        let lo = dispersion_residual(&stack, c_star - delta, 1.0).unwrap();
        let hi = dispersion_residual(&stack, c_star + delta, 1.0).unwrap();
        assert!(lo * hi < 0.0, "lo = {lo}, hi = {hi}");
    }

    #[test]
    fn residual_sign_scan_brackets_the_halfspace_root() {
        // Coarse analogue of the oracle bracket: the residual at 0.5 vs and
        // 0.99 vs must take opposite signs for a Poisson half-space.
        let stack = poisson_halfspace(3.0);
        let lo = dispersion_residual(&stack, 0.5 * 3.0, 1.0).unwrap();
        let hi = dispersion_residual(&stack, 0.99 * 3.0, 1.0).unwrap();
        assert!(lo * hi < 0.0);
    }

    #[test]
    fn residual_is_invariant_under_joint_moduli_rescaling() {
        let base = poisson_halfspace(3.3);
        let scaled_layers: Vec<_> = base
            .layers()
            .iter()
            .map(|l| {
                let mut l = *l;
                l.mu *= 1234.5;
                l.lambda *= 1234.5;
                l
            })
            .collect();
        let scaled = EarthStack::new(scaled_layers, base.thicknesses().to_vec()).unwrap();
        for &c in &[2.6, 2.9, 3.1] {
            let r0 = dispersion_residual(&base, c, 2.0).unwrap();
            let r1 = dispersion_residual(&scaled, c, 2.0).unwrap();
            assert!(
                (r0 - r1).abs() <= 1e-12 * r0.abs().max(1.0),
                "c = {c}: {r0} vs {r1}"
            );
        }
    }

    #[test]
    fn homogeneous_poisson_solve_matches_oracle_at_every_frequency() {
        let vs = 3.0;
        let stack = poisson_halfspace(vs);
        let cfg = RootSearchConfig::for_stack(&stack);
        let oracle = classical_rayleigh_velocity(vs, 3f64.sqrt() * vs);
        for omega in paper_frequency_grid() {
            let c = solve_phase_velocity(&stack, omega, &cfg).unwrap();
            assert!(
                (c - oracle).abs() < 1e-3,
                "omega = {omega}: {c} vs oracle {oracle}"
            );
            assert!(c > cfg.c_min && c < cfg.c_max);
        }
    }

    #[test]
    fn two_layer_curve_approaches_the_correct_limits() {
        // High frequency: the wave only feels the top layer; low frequency:
        // only the half-space.
        let top_vs = 3.0;
        let bottom_vs = 4.5;
        let stack = EarthStack::from_vs_profile(&[top_vs, bottom_vs], 4.0).unwrap();
        let cfg = RootSearchConfig::for_stack(&stack);

        let c_hi = solve_phase_velocity(&stack, 12.57, &cfg).unwrap();
        let top_limit = classical_rayleigh_velocity(top_vs, 1.732 * top_vs);
        assert!(
            (c_hi - top_limit).abs() / top_limit < 0.02,
            "high-frequency limit: {c_hi} vs {top_limit}"
        );

        let c_lo = solve_phase_velocity(&stack, 0.0785, &cfg).unwrap();
        let bottom_limit = classical_rayleigh_velocity(bottom_vs, 1.732 * bottom_vs);
        assert!(
            (c_lo - bottom_limit).abs() / bottom_limit < 0.05,
            "low-frequency limit: {c_lo} vs {bottom_limit}"
        );
    }

    #[test]
    fn uniform_stack_curve_is_flat() {
        let stack = EarthStack::from_vs_profile(&[3.2; 4], 4.0).unwrap();
        let cfg = RootSearchConfig::for_stack(&stack);
        let curve = dispersion_curve(&stack, &paper_frequency_grid(), &cfg).unwrap();
        let min = curve.velocities.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = curve.velocities.iter().cloned().fold(0.0, f64::max);
        assert!(max - min < 1e-4, "spread {}", max - min);
        assert_eq!(curve.len(), PAPER_OMEGA_POINTS);
    }

    #[test]
    fn increasing_profile_has_normal_dispersion() {
        // Table-1 midpoint style profile: velocity increases with depth, so
        // phase velocity decreases with frequency.
        let stack = EarthStack::from_vs_profile(&[3.5, 4.3, 5.1], 4.0).unwrap();
        let cfg = RootSearchConfig::for_stack(&stack);
        let curve = dispersion_curve(&stack, &paper_frequency_grid(), &cfg).unwrap();
        for w in curve.velocities.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "curve not monotone: {w:?}");
        }
    }

    #[test]
    fn curve_requires_strictly_increasing_frequencies() {
        let stack = poisson_halfspace(3.0);
        let cfg = RootSearchConfig::for_stack(&stack);
        assert!(dispersion_curve(&stack, &[1.0, 1.0], &cfg).is_err());
        assert!(dispersion_curve(&stack, &[2.0, 1.0], &cfg).is_err());
        assert!(dispersion_curve(&stack, &[], &cfg).is_err());
    }

    #[test]
    fn no_root_error_reports_the_bracket() {
        let stack = poisson_halfspace(3.0);
        // A bracket far above the Rayleigh velocity contains no root.
        let cfg = RootSearchConfig {
            c_min: 4.0,
            c_max: 5.0,
            grid_points: 50,
            tol: 1e-5,
            max_iter: 100,
        };
        match solve_phase_velocity(&stack, 1.0, &cfg) {
            Err(DispersionError::NoRoot { omega, c_min, c_max }) => {
                assert_eq!(omega, 1.0);
                assert_eq!((c_min, c_max), (4.0, 5.0));
            }
            other => panic!("expected NoRoot, got {other:?}"),
        }
    }

    #[test]
    fn config_validation_rejects_bad_brackets() {
        let bad = RootSearchConfig {
            c_min: 2.0,
            c_max: 1.0,
            grid_points: 10,
            tol: 1e-5,
            max_iter: 10,
        };
        assert!(bad.validate().is_err());
        let bad_grid = RootSearchConfig {
            grid_points: 1,
            ..RootSearchConfig {
                c_min: 1.0,
                c_max: 2.0,
                grid_points: 10,
                tol: 1e-5,
                max_iter: 10,
            }
        };
        assert!(bad_grid.validate().is_err());
    }
}
