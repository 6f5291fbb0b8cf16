//! Impedance tensor: half-space closed form and the per-layer transfer.
//!
//! The impedance tensor relates stresses to displacements at a depth,
//! `(sigma_xz, sigma_zz) = Z (u_x, u_z)`. Within a layer the displacement
//! field splits into solenoidal and potential parts `u_s`, `u_p`, each a
//! combination of an upward- and a downward-decaying exponential. Writing
//! the four field quantities in terms of the four exponential coefficients
//! at the two interfaces yields a linear map from the impedance at the
//! bottom of a layer to the impedance at its top.
//!
//! Coefficient basis: the code parameterizes each layer by
//! `(a_s, b_s, a_p, b_p)` where the `a` terms are referenced to the lower
//! interface and the `b` terms to the upper one. In this basis every
//! exponential that appears is `exp(-eta h)` with `Re(eta) >= 0`, so nothing
//! can overflow at high frequency and the dominant factors cancel exactly in
//! the transfer; the classical growing-exponential instability never arises.

use num_complex::Complex64;

use super::layer::{EarthStack, LayerParams};
use super::wave::{vertical_wavenumbers, Wavenumbers};
use super::{DispersionError, Result};

/// Relative threshold on the half-space impedance denominator.
pub const DEFAULT_SINGULAR_EPS: f64 = 1e-12;

/// Pivot ratio below which a layer transfer is reported as ill-conditioned.
const ILL_CONDITIONED_PIVOT_RATIO: f64 = 1e-13;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// 2x2 complex impedance tensor (stress per displacement).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceTensor {
    pub zxx: Complex64,
    pub zxz: Complex64,
    pub zzx: Complex64,
    pub zzz: Complex64,
}

impl ImpedanceTensor {
    pub fn det(&self) -> Complex64 {
        self.zxx * self.zzz - self.zxz * self.zzx
    }

    pub fn is_finite(&self) -> bool {
        [self.zxx, self.zxz, self.zzx, self.zzz]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Product of the two largest entry magnitudes; the scale used to
    /// normalize the dispersion residual.
    pub fn residual_scale(&self) -> f64 {
        let mut mags = [
            self.zxx.norm(),
            self.zxz.norm(),
            self.zzx.norm(),
            self.zzz.norm(),
        ];
        mags.sort_by(|a, b| b.partial_cmp(a).expect("finite magnitudes"));
        mags[0] * mags[1]
    }
}

/// Closed-form impedance tensor of the bottom half-space.
///
/// Obtained by keeping only the decaying exponentials in the half-space and
/// eliminating their two coefficients from the four field expressions.
pub fn halfspace_impedance(c: f64, omega: f64, layer: &LayerParams) -> Result<ImpedanceTensor> {
    halfspace_impedance_with_eps(c, omega, layer, DEFAULT_SINGULAR_EPS)
}

/// As [`halfspace_impedance`] with an explicit relative epsilon for the
/// singular-denominator check.
pub fn halfspace_impedance_with_eps(
    c: f64,
    omega: f64,
    layer: &LayerParams,
    eps: f64,
) -> Result<ImpedanceTensor> {
    let wn = vertical_wavenumbers(c, omega, layer)?;
    halfspace_impedance_from_wavenumbers(layer, &wn)
        .ok_or_else(|| DispersionError::SingularDenominator {
            c,
            omega,
            magnitude: (wn.eta_s * wn.eta_p - gamma_sq(&wn)).norm(),
        })
        .and_then(|z| {
            let denom = (wn.eta_s * wn.eta_p - gamma_sq(&wn)).norm();
            if denom <= eps * wn.gamma * wn.gamma {
                Err(DispersionError::SingularDenominator {
                    c,
                    omega,
                    magnitude: denom,
                })
            } else {
                Ok(z)
            }
        })
}

fn gamma_sq(wn: &Wavenumbers) -> Complex64 {
    Complex64::new(wn.gamma * wn.gamma, 0.0)
}

fn halfspace_impedance_from_wavenumbers(
    layer: &LayerParams,
    wn: &Wavenumbers,
) -> Option<ImpedanceTensor> {
    let gamma = wn.gamma;
    let g2 = gamma * gamma;
    let ks2 = wn.k_s * wn.k_s;
    let kp2 = wn.k_p * wn.k_p;
    let (mu, lambda) = (layer.mu, layer.lambda);
    let lam2mu = lambda + 2.0 * mu;
    let denom = wn.eta_s * wn.eta_p - g2;
    if denom.norm_sqr() == 0.0 {
        return None;
    }
    let zxx = mu * ks2 * wn.eta_p / denom;
    let zxz = -I * gamma * mu * (2.0 * g2 - ks2 - 2.0 * wn.eta_s * wn.eta_p) / denom;
    let zzx = I * gamma * lam2mu * ((g2 - kp2) - wn.eta_s * wn.eta_p) / denom + I * gamma * lambda;
    let zzz = lam2mu * kp2 * wn.eta_s / denom;
    Some(ImpedanceTensor { zxx, zxz, zzx, zzz })
}

/// Field quantities `(u_x, u_z, sigma_xz, sigma_zz)` contributed by one
/// exponential basis function, given the value and z-derivative of the
/// underlying potential at the evaluation depth.
#[derive(Debug, Clone, Copy)]
struct FieldRow {
    ux: Complex64,
    uz: Complex64,
    sxz: Complex64,
    szz: Complex64,
}

fn s_basis_fields(layer: &LayerParams, wn: &Wavenumbers, val: Complex64, der: Complex64) -> FieldRow {
    let gamma = wn.gamma;
    let ig = I * gamma;
    // u_x = -u_s' + i g u_p, u_z = i g u_s + u_p'
    // sigma_xz = mu (-(g^2 + eta_s^2) u_s + 2 i g u_p')
    // sigma_zz = 2 i g mu u_s' + ((lambda + 2 mu) eta_p^2 - lambda g^2) u_p
    let g2_plus_etas2 = Complex64::new(2.0 * gamma * gamma - wn.k_s * wn.k_s, 0.0);
    FieldRow {
        ux: -der,
        uz: ig * val,
        sxz: -layer.mu * g2_plus_etas2 * val,
        szz: 2.0 * ig * layer.mu * der,
    }
}

fn p_basis_fields(layer: &LayerParams, wn: &Wavenumbers, val: Complex64, der: Complex64) -> FieldRow {
    let gamma = wn.gamma;
    let ig = I * gamma;
    let lam2mu = layer.lambda + 2.0 * layer.mu;
    let etap2 = Complex64::new(gamma * gamma - wn.k_p * wn.k_p, 0.0);
    let szz_coeff = lam2mu * etap2 - layer.lambda * gamma * gamma;
    FieldRow {
        ux: ig * val,
        uz: der,
        sxz: 2.0 * ig * layer.mu * der,
        szz: szz_coeff * val,
    }
}

/// Per-basis field rows at the two interfaces of a layer of thickness `h`.
///
/// Basis order: `(a_s, b_s, a_p, b_p)`; `a` terms carry `exp(eta (z - z_bot))`
/// and `b` terms `exp(-eta (z - z_top))`, so at either interface the stored
/// exponential factor is `exp(-eta h)` or one.
fn interface_fields(layer: &LayerParams, wn: &Wavenumbers, h: f64) -> ([FieldRow; 4], [FieldRow; 4]) {
    let one = Complex64::new(1.0, 0.0);
    let es = (-wn.eta_s * h).exp();
    let ep = (-wn.eta_p * h).exp();
    let bottom = [
        s_basis_fields(layer, wn, one, wn.eta_s),
        s_basis_fields(layer, wn, es, -wn.eta_s * es),
        p_basis_fields(layer, wn, one, wn.eta_p),
        p_basis_fields(layer, wn, ep, -wn.eta_p * ep),
    ];
    let top = [
        s_basis_fields(layer, wn, es, wn.eta_s * es),
        s_basis_fields(layer, wn, one, -wn.eta_s),
        p_basis_fields(layer, wn, ep, wn.eta_p * ep),
        p_basis_fields(layer, wn, one, -wn.eta_p),
    ];
    (bottom, top)
}

/// Boundary matrix of one layer: rows 0-1 are the displacement components at
/// the upper interface, rows 2-3 the impedance relation at the lower
/// interface; columns follow the `(a_s, b_s, a_p, b_p)` coefficient basis.
pub fn boundary_matrix_g(
    layer: &LayerParams,
    h: f64,
    wn: &Wavenumbers,
    z_lower: &ImpedanceTensor,
) -> [[Complex64; 4]; 4] {
    let (bottom, top) = interface_fields(layer, wn, h);
    let mut g = [[Complex64::default(); 4]; 4];
    for (col, (fb, ft)) in bottom.iter().zip(top.iter()).enumerate() {
        g[0][col] = ft.ux;
        g[1][col] = ft.uz;
        g[2][col] = fb.sxz - z_lower.zxx * fb.ux - z_lower.zxz * fb.uz;
        g[3][col] = fb.szz - z_lower.zzx * fb.ux - z_lower.zzz * fb.uz;
    }
    g
}

/// Solves `a * x = rhs` for two right-hand sides by partial-pivot LU.
/// Returns the solution and the ratio of the smallest pivot magnitude to the
/// largest input entry magnitude (a cheap conditioning estimate).
fn solve_4x2(
    mut a: [[Complex64; 4]; 4],
    mut rhs: [[Complex64; 2]; 4],
) -> Option<([[Complex64; 2]; 4], f64)> {
    let max_entry = a
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max);
    if max_entry == 0.0 || !max_entry.is_finite() {
        return None;
    }
    let mut min_pivot = f64::INFINITY;
    for col in 0..4 {
        let pivot_row = (col..4)
            .max_by(|&i, &j| {
                a[i][col]
                    .norm_sqr()
                    .partial_cmp(&a[j][col].norm_sqr())
                    .expect("finite entries")
            })
            .expect("non-empty range");
        a.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        let pivot = a[col][col];
        let pivot_mag = pivot.norm();
        if pivot_mag == 0.0 {
            return None;
        }
        min_pivot = min_pivot.min(pivot_mag);
        for row in col + 1..4 {
            let factor = a[row][col] / pivot;
            if factor.norm_sqr() == 0.0 {
                continue;
            }
            for k in col + 1..4 {
                let delta = factor * a[col][k];
                a[row][k] -= delta;
            }
            for k in 0..2 {
                let delta = factor * rhs[col][k];
                rhs[row][k] -= delta;
            }
        }
    }
    // back substitution
    let mut x = [[Complex64::default(); 2]; 4];
    for k in 0..2 {
        for row in (0..4).rev() {
            let mut acc = rhs[row][k];
            for col in row + 1..4 {
                acc -= a[row][col] * x[col][k];
            }
            x[row][k] = acc / a[row][row];
        }
    }
    Some((x, min_pivot / max_entry))
}

/// Maps the impedance at the lower interface of a layer to the impedance at
/// its upper interface.
pub fn layer_transfer(
    z_lower: &ImpedanceTensor,
    layer: &LayerParams,
    h: f64,
    c: f64,
    omega: f64,
) -> Result<ImpedanceTensor> {
    layer_transfer_indexed(z_lower, layer, h, c, omega, 0)
}

fn layer_transfer_indexed(
    z_lower: &ImpedanceTensor,
    layer: &LayerParams,
    h: f64,
    c: f64,
    omega: f64,
    layer_index: usize,
) -> Result<ImpedanceTensor> {
    let wn = vertical_wavenumbers(c, omega, layer)?;
    let g = boundary_matrix_g(layer, h, &wn, z_lower);
    // Unknown coefficients for unit surface displacements (e_x, e_z); the
    // stress rows of the system have zero right-hand side.
    let mut rhs = [[Complex64::default(); 2]; 4];
    rhs[0][0] = Complex64::new(1.0, 0.0);
    rhs[1][1] = Complex64::new(1.0, 0.0);
    let ill = || DispersionError::IllConditioned {
        c,
        omega,
        layer_index,
    };
    let (coeffs, pivot_ratio) = solve_4x2(g, rhs).ok_or_else(ill)?;
    if pivot_ratio < ILL_CONDITIONED_PIVOT_RATIO {
        return Err(ill());
    }
    let (_, top) = interface_fields(layer, &wn, h);
    let mut z = [[Complex64::default(); 2]; 2];
    for (b, ft) in top.iter().enumerate() {
        for k in 0..2 {
            z[0][k] += ft.sxz * coeffs[b][k];
            z[1][k] += ft.szz * coeffs[b][k];
        }
    }
    let out = ImpedanceTensor {
        zxx: z[0][0],
        zxz: z[0][1],
        zzx: z[1][0],
        zzz: z[1][1],
    };
    if out.is_finite() {
        Ok(out)
    } else {
        Err(ill())
    }
}

/// Impedance tensor at the free surface: the half-space tensor folded up
/// through every layer.
pub fn surface_impedance(stack: &EarthStack, c: f64, omega: f64) -> Result<ImpedanceTensor> {
    let mut z = halfspace_impedance(c, omega, stack.halfspace())?;
    for idx in (0..stack.num_layers() - 1).rev() {
        z = layer_transfer_indexed(
            &z,
            &stack.layers()[idx],
            stack.thicknesses()[idx],
            c,
            omega,
            idx,
        )?;
    }
    Ok(z)
}
