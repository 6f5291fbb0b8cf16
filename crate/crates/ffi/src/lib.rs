//! C ABI for the dispersion forward model and trained-model inference.
//!
//! The surface is deliberately small: build a layered model, compute
//! fundamental-mode dispersion curves, and run a trained inversion
//! checkpoint. Handles are opaque; every fallible call returns a status
//! code and leaves a message for [`rwfm_last_error`]. All functions are
//! panic-safe and may be called from any thread (the error message is
//! thread-local).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rayleigh_fwmdn::dispersion::{
    dispersion_curve, paper_frequency_grid, solve_phase_velocity, EarthStack, RootSearchConfig,
};
use rayleigh_fwmdn::neural::{load_model, Model, OutputHead};

/// Result codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwfmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NoRoot = 3,
    IllConditioned = 4,
    Io = 5,
    BadCheckpoint = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn guard<F: FnOnce() -> RwfmStatus>(f: F) -> RwfmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            RwfmStatus::Panic
        }
    }
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rwfm_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Static version string of the underlying crate.
#[no_mangle]
pub extern "C" fn rwfm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Opaque layered-medium handle.
pub struct RwfmStack {
    stack: EarthStack,
}

/// Opaque trained-model handle.
pub struct RwfmModel {
    model: Model,
}

/// Builds a layered model from `n_layers` S-wave velocities [km/s]
/// (surface first; the last layer is the half-space) with a common layer
/// thickness [km]. The remaining elastic parameters follow the empirical
/// crustal relations. Returns null on invalid input (see
/// [`rwfm_last_error`]).
///
/// # Safety
/// `vs` must point to `n_layers` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn rwfm_stack_new(
    vs: *const f64,
    n_layers: usize,
    thickness_km: f64,
) -> *mut RwfmStack {
    if vs.is_null() || n_layers == 0 {
        set_error("vs must point to at least one velocity");
        return std::ptr::null_mut();
    }
    let profile = std::slice::from_raw_parts(vs, n_layers);
    match catch_unwind(|| EarthStack::from_vs_profile(profile, thickness_km)) {
        Ok(Ok(stack)) => Box::into_raw(Box::new(RwfmStack { stack })),
        Ok(Err(e)) => {
            set_error(&e.to_string());
            std::ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic");
            std::ptr::null_mut()
        }
    }
}

/// Frees a stack handle. Null is ignored.
///
/// # Safety
/// `stack` must be a pointer from [`rwfm_stack_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rwfm_stack_free(stack: *mut RwfmStack) {
    if !stack.is_null() {
        drop(Box::from_raw(stack));
    }
}

/// Number of angular frequencies in the default grid.
#[no_mangle]
pub extern "C" fn rwfm_default_grid_len() -> usize {
    rayleigh_fwmdn::dispersion::PAPER_OMEGA_POINTS
}

/// Writes the default 50-point angular-frequency grid [rad/s].
///
/// # Safety
/// `out` must point to `len >= rwfm_default_grid_len()` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rwfm_default_grid(out: *mut f64, len: usize) -> RwfmStatus {
    guard(|| {
        let grid = paper_frequency_grid();
        if out.is_null() {
            set_error("out is null");
            return RwfmStatus::NullPointer;
        }
        if len < grid.len() {
            set_error("output buffer too small");
            return RwfmStatus::InvalidArgument;
        }
        std::slice::from_raw_parts_mut(out, grid.len()).copy_from_slice(&grid);
        RwfmStatus::Ok
    })
}

fn map_dispersion_error(e: &rayleigh_fwmdn::dispersion::DispersionError) -> RwfmStatus {
    use rayleigh_fwmdn::dispersion::DispersionError as E;
    set_error(&e.to_string());
    match e {
        E::NoRoot { .. } | E::CurveFailed { .. } => RwfmStatus::NoRoot,
        E::IllConditioned { .. } | E::SingularDenominator { .. } => RwfmStatus::IllConditioned,
        E::Domain(_) => RwfmStatus::InvalidArgument,
    }
}

/// Fundamental-mode phase velocity [km/s] at one angular frequency.
///
/// # Safety
/// `out_velocity` must be writable; `stack` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rwfm_phase_velocity(
    stack: *const RwfmStack,
    omega: f64,
    out_velocity: *mut f64,
) -> RwfmStatus {
    guard(|| {
        let Some(handle) = stack.as_ref() else {
            set_error("stack is null");
            return RwfmStatus::NullPointer;
        };
        if out_velocity.is_null() {
            set_error("out_velocity is null");
            return RwfmStatus::NullPointer;
        }
        let cfg = RootSearchConfig::for_stack(&handle.stack);
        match solve_phase_velocity(&handle.stack, omega, &cfg) {
            Ok(c) => {
                *out_velocity = c;
                RwfmStatus::Ok
            }
            Err(e) => map_dispersion_error(&e),
        }
    })
}

/// Dispersion curve over a strictly increasing frequency grid:
/// `out_velocities[i]` receives the phase velocity at `omegas[i]`.
///
/// # Safety
/// `omegas` and `out_velocities` must each point to `n_omegas` doubles.
#[no_mangle]
pub unsafe extern "C" fn rwfm_dispersion_curve(
    stack: *const RwfmStack,
    omegas: *const f64,
    n_omegas: usize,
    out_velocities: *mut f64,
) -> RwfmStatus {
    guard(|| {
        let Some(handle) = stack.as_ref() else {
            set_error("stack is null");
            return RwfmStatus::NullPointer;
        };
        if omegas.is_null() || out_velocities.is_null() {
            set_error("omegas/out_velocities is null");
            return RwfmStatus::NullPointer;
        }
        let grid = std::slice::from_raw_parts(omegas, n_omegas);
        let cfg = RootSearchConfig::for_stack(&handle.stack);
        match dispersion_curve(&handle.stack, grid, &cfg) {
            Ok(curve) => {
                std::slice::from_raw_parts_mut(out_velocities, n_omegas)
                    .copy_from_slice(&curve.velocities);
                RwfmStatus::Ok
            }
            Err(e) => map_dispersion_error(&e),
        }
    })
}

/// Loads a trained checkpoint (JSON) from a NUL-terminated path. Returns
/// null on failure.
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rwfm_model_load(path: *const c_char) -> *mut RwfmModel {
    if path.is_null() {
        set_error("path is null");
        return std::ptr::null_mut();
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        set_error("path is not valid UTF-8");
        return std::ptr::null_mut();
    };
    match catch_unwind(|| load_model(path)) {
        Ok(Ok(model)) => Box::into_raw(Box::new(RwfmModel { model })),
        Ok(Err(e)) => {
            set_error(&e.to_string());
            std::ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic");
            std::ptr::null_mut()
        }
    }
}

/// Frees a model handle. Null is ignored.
///
/// # Safety
/// `model` must be a pointer from [`rwfm_model_load`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rwfm_model_free(model: *mut RwfmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Input width the model expects (0 for a null handle).
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rwfm_model_input_dim(model: *const RwfmModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.spec.input_dim())
}

/// Number of candidate profiles the model outputs: the mixture component
/// count for an MDN head, 1 for a plain regression head.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rwfm_model_num_candidates(model: *const RwfmModel) -> usize {
    model.as_ref().map_or(0, |m| match m.model.spec.output_head {
        OutputHead::Mdn { components, .. } => components,
        OutputHead::Linear => 1,
    })
}

/// Width of one candidate profile.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rwfm_model_profile_dim(model: *const RwfmModel) -> usize {
    model.as_ref().map_or(0, |m| match m.model.spec.output_head {
        OutputHead::Mdn { .. } => m.model.spec.mdn_dims().map(|(_, n)| n).unwrap_or(0),
        OutputHead::Linear => m.model.spec.output_dim(),
    })
}

/// Runs the inversion: writes the candidate profiles row-major,
/// `num_candidates x profile_dim` doubles.
///
/// # Safety
/// `input` must hold `input_len` doubles; `out` must hold `out_len`
/// doubles with `out_len >= num_candidates * profile_dim`.
#[no_mangle]
pub unsafe extern "C" fn rwfm_predict_profiles(
    model: *const RwfmModel,
    input: *const f64,
    input_len: usize,
    out: *mut f64,
    out_len: usize,
) -> RwfmStatus {
    guard(|| {
        let Some(handle) = model.as_ref() else {
            set_error("model is null");
            return RwfmStatus::NullPointer;
        };
        if input.is_null() || out.is_null() {
            set_error("input/out is null");
            return RwfmStatus::NullPointer;
        }
        let y = std::slice::from_raw_parts(input, input_len);
        let candidates = match handle.model.spec.output_head {
            OutputHead::Mdn { .. } => handle.model.predict_means(y),
            OutputHead::Linear => handle.model.forward_one(y).map(|v| vec![v]),
        };
        match candidates {
            Ok(rows) => {
                let needed: usize = rows.iter().map(Vec::len).sum();
                if out_len < needed {
                    set_error("output buffer too small");
                    return RwfmStatus::InvalidArgument;
                }
                let out_slice = std::slice::from_raw_parts_mut(out, needed);
                let mut cursor = 0;
                for row in rows {
                    out_slice[cursor..cursor + row.len()].copy_from_slice(&row);
                    cursor += row.len();
                }
                RwfmStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                RwfmStatus::InvalidArgument
            }
        }
    })
}
