//! Oracle helpers shared by the integration suites. Everything here is an
//! independent computation path: raw field definitions and dense solves for
//! the dispersion side, central finite differences for the gradient side.

#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64;

use rayleigh_fwmdn::dispersion::{vertical_wavenumbers, ImpedanceTensor, LayerParams};
use rayleigh_fwmdn::neural::{batch_loss_and_grad, DenseNetSpec, LossKind, Parameters};

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Bisection on the classical Rayleigh characteristic equation
/// `(2 - c^2/vs^2)^2 = 4 sqrt(1 - c^2/vp^2) sqrt(1 - c^2/vs^2)`.
pub fn classical_rayleigh_velocity(vs: f64, vp: f64) -> f64 {
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

/// Dense Gaussian elimination with partial pivoting for small complex
/// systems; `None` when a pivot collapses (the caller resamples).
pub fn gauss_solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = b.len();
    let max_entry = a
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max);
    for col in 0..n {
        let pivot_row = (col..n).max_by(|&i, &j| {
            a[i][col]
                .norm()
                .partial_cmp(&a[j][col].norm())
                .expect("finite")
        })?;
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let pivot = a[col][col];
        if pivot.norm() < 1e-10 * max_entry {
            return None;
        }
        for row in col + 1..n {
            let f = a[row][col] / pivot;
            for k in col..n {
                let d = f * a[col][k];
                a[row][k] -= d;
            }
            let d = f * b[col];
            b[row] -= d;
        }
    }
    let mut x = vec![Complex64::default(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for col in row + 1..n {
            acc -= a[row][col] * x[col];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Raw per-layer field evaluation used only by oracles: potentials
/// `u = A exp(eta z) + B exp(-eta z)` at relative depth `zeta`, stresses
/// straight from the stress definition with `u'' = eta^2 u`.
pub struct OracleFields {
    pub ux: [Complex64; 4],
    pub uz: [Complex64; 4],
    pub sxz: [Complex64; 4],
    pub szz: [Complex64; 4],
}

pub fn oracle_fields(layer: &LayerParams, c: f64, omega: f64, zeta: f64) -> OracleFields {
    let wn = vertical_wavenumbers(c, omega, layer).unwrap();
    let g = Complex64::new(wn.gamma, 0.0);
    let (mu, lambda) = (layer.mu, layer.lambda);
    let lam2mu = lambda + 2.0 * mu;
    let mut ux = [Complex64::default(); 4];
    let mut uz = [Complex64::default(); 4];
    let mut sxz = [Complex64::default(); 4];
    let mut szz = [Complex64::default(); 4];
    for (slot, (eta, sign, is_s)) in [
        (wn.eta_s, 1.0, true),
        (wn.eta_s, -1.0, true),
        (wn.eta_p, 1.0, false),
        (wn.eta_p, -1.0, false),
    ]
    .into_iter()
    .enumerate()
    {
        let e = (eta * sign * zeta).exp();
        let u = e;
        let du = eta * sign * e;
        let ddu = eta * eta * e;
        let zero = Complex64::default();
        let (us, dus, up, dup, ddus, ddup) = if is_s {
            (u, du, zero, zero, ddu, zero)
        } else {
            (zero, zero, u, du, zero, ddu)
        };
        let ux_v = -dus + I * g * up;
        let uz_v = I * g * us + dup;
        let dux = -ddus + I * g * dup;
        let duz = I * g * dus + ddup;
        ux[slot] = ux_v;
        uz[slot] = uz_v;
        sxz[slot] = mu * (I * g * uz_v + dux);
        szz[slot] = lam2mu * duz + I * g * lambda * ux_v;
    }
    OracleFields { ux, uz, sxz, szz }
}

/// Surface impedance of a two-layer model from the global eight-unknown
/// boundary-value solve: four exponential coefficients per layer, prescribed
/// surface displacements, interface continuity, and decay in the half-space.
pub fn global_two_layer_impedance(
    top: &LayerParams,
    bottom: &LayerParams,
    h: f64,
    c: f64,
    omega: f64,
) -> Option<ImpedanceTensor> {
    let surf = oracle_fields(top, c, omega, -h);
    let iface_top = oracle_fields(top, c, omega, 0.0);
    let iface_bot = oracle_fields(bottom, c, omega, 0.0);

    let mut columns = Vec::new();
    for rhs_slot in 0..2 {
        let mut a = vec![vec![Complex64::default(); 8]; 8];
        let mut b = vec![Complex64::default(); 8];
        for col in 0..4 {
            a[0][col] = surf.ux[col];
            a[1][col] = surf.uz[col];
            a[2][col] = iface_top.ux[col];
            a[3][col] = iface_top.uz[col];
            a[4][col] = iface_top.sxz[col];
            a[5][col] = iface_top.szz[col];
            a[2][4 + col] = -iface_bot.ux[col];
            a[3][4 + col] = -iface_bot.uz[col];
            a[4][4 + col] = -iface_bot.sxz[col];
            a[5][4 + col] = -iface_bot.szz[col];
        }
        // vanishing at depth: the growing coefficients of the half-space
        a[6][4] = Complex64::new(1.0, 0.0);
        a[7][6] = Complex64::new(1.0, 0.0);
        b[rhs_slot] = Complex64::new(1.0, 0.0);
        let q = gauss_solve(a, b)?;
        let sxz: Complex64 = (0..4).map(|col| surf.sxz[col] * q[col]).sum();
        let szz: Complex64 = (0..4).map(|col| surf.szz[col] * q[col]).sum();
        columns.push((sxz, szz));
    }
    Some(ImpedanceTensor {
        zxx: columns[0].0,
        zzx: columns[0].1,
        zxz: columns[1].0,
        zzz: columns[1].1,
    })
}

pub fn tensor_rel_diff(a: &ImpedanceTensor, b: &ImpedanceTensor) -> f64 {
    let scale = [a.zxx, a.zxz, a.zzx, a.zzz]
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max);
    [
        (a.zxx - b.zxx).norm(),
        (a.zxz - b.zxz).norm(),
        (a.zzx - b.zzx).norm(),
        (a.zzz - b.zzz).norm(),
    ]
    .into_iter()
    .fold(0.0f64, f64::max)
        / scale
}

pub const FD_STEP: f64 = 1e-6;

/// Full loss (task + L2) as a function of the flat parameter vector.
pub fn loss_at(
    spec: &DenseNetSpec,
    flat: &[f64],
    kind: &LossKind,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
    curves: Option<&Array2<f64>>,
) -> f64 {
    let params = Parameters::from_flat(spec, flat).unwrap();
    let eval = batch_loss_and_grad(spec, &params, kind, inputs, targets, curves).unwrap();
    let (w2, b2) = params.squared_sums();
    eval.task_loss + spec.alpha_w * w2 + spec.alpha_b * b2
}

/// Analytic gradient (task + L2) flattened like the parameters.
pub fn analytic_grad(
    spec: &DenseNetSpec,
    flat: &[f64],
    kind: &LossKind,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
    curves: Option<&Array2<f64>>,
) -> Vec<f64> {
    let params = Parameters::from_flat(spec, flat).unwrap();
    let eval = batch_loss_and_grad(spec, &params, kind, inputs, targets, curves).unwrap();
    let mut grads = eval.grads;
    for (gw, w) in grads.weights.iter_mut().zip(&params.weights) {
        gw.scaled_add(2.0 * spec.alpha_w, w);
    }
    for (gb, b) in grads.biases.iter_mut().zip(&params.biases) {
        gb.scaled_add(2.0 * spec.alpha_b, b);
    }
    grads.flatten()
}

/// Worst relative gap between analytic and central-difference gradients
/// over every parameter of a (small) network.
pub fn worst_gradient_gap(
    spec: &DenseNetSpec,
    params: &Parameters,
    kind: &LossKind,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
    curves: Option<&Array2<f64>>,
) -> f64 {
    let flat = params.flatten();
    assert!(flat.len() <= 1000, "toy net should stay small");
    let analytic = analytic_grad(spec, &flat, kind, inputs, targets, curves);
    let mut worst = 0.0f64;
    for i in 0..flat.len() {
        let mut plus = flat.clone();
        plus[i] += FD_STEP;
        let mut minus = flat.clone();
        minus[i] -= FD_STEP;
        let fd = (loss_at(spec, &plus, kind, inputs, targets, curves)
            - loss_at(spec, &minus, kind, inputs, targets, curves))
            / (2.0 * FD_STEP);
        let gap = (fd - analytic[i]).abs() / fd.abs().max(analytic[i].abs()).max(1e-2);
        worst = worst.max(gap);
    }
    worst
}
