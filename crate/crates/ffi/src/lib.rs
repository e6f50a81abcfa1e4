//! C ABI over `turnpike-core`.
//!
//! Systems are opaque handles owned by the caller and released with
//! [`tp_system_free`]. Every fallible call returns a [`TpStatus`]; on failure
//! [`tp_last_error_message`] describes the error for the calling thread.
//! Output arrays are caller-allocated and sized as documented per function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use turnpike_core::beam::{build_system, BeamParams};
use turnpike_core::lq_solver::{solve_bvp_spectral, HorizonSpec};
use turnpike_core::model::{min_control_time, weighted_norm, OscillatorSystem, StateVector, WeightIndex};
use turnpike_core::spectral::{find_nu, spectrum, EigenQuad};
use turnpike_core::static_opt::{solve_static, TargetSpec};
use turnpike_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    /// The parameters violate a standing model assumption.
    Model = 4,
    Numeric = 5,
    Localization = 6,
    Hyperbolicity = 7,
    Precondition = 8,
    Inconsistent = 9,
    Domain = 10,
    Panic = 11,
}

/// Opaque oscillator system.
pub struct TpSystem {
    inner: OscillatorSystem,
}

/// Mode `k` (1-based): `ν_k` and the eigenvalues `σ_k^+`, `σ_k^-`. The two
/// remaining members of the quadruple are their conjugates.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TpEigenQuad {
    pub k: usize,
    pub omega: f64,
    pub b: f64,
    pub nu_re: f64,
    pub nu_im: f64,
    pub sigma_plus_re: f64,
    pub sigma_plus_im: f64,
    pub sigma_minus_re: f64,
    pub sigma_minus_im: f64,
    pub residual: f64,
}

impl From<&EigenQuad> for TpEigenQuad {
    fn from(q: &EigenQuad) -> Self {
        Self {
            k: q.k,
            omega: q.omega,
            b: q.b,
            nu_re: q.nu.re,
            nu_im: q.nu.im,
            sigma_plus_re: q.sigma_plus.re,
            sigma_plus_im: q.sigma_plus.im,
            sigma_minus_re: q.sigma_minus.re,
            sigma_minus_im: q.sigma_minus.im,
            residual: q.residual,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> TpStatus {
    match e {
        Error::Dimension { .. } => TpStatus::Dimension,
        Error::Argument(_) => TpStatus::InvalidArgument,
        Error::Domain(_) => TpStatus::Domain,
        Error::Model { .. } => TpStatus::Model,
        Error::Pole { .. } | Error::Numeric(_) => TpStatus::Numeric,
        Error::Localization { .. } => TpStatus::Localization,
        Error::Hyperbolicity { .. } => TpStatus::Hyperbolicity,
        Error::Precondition(_) => TpStatus::Precondition,
        Error::Inconsistent(_) => TpStatus::Inconsistent,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TpStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            TpStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            TpStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a>(p: *mut f64, n: usize, what: &'static str) -> Result<&'a mut [f64], Fail> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn system<'a>(sys: *const TpSystem) -> Result<&'a OscillatorSystem, Fail> {
    sys.as_ref().map(|s| &s.inner).ok_or(Fail::Null("system"))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn state(xi: *const f64, eta: *const f64, n: usize) -> Result<StateVector, Fail> {
    Ok(StateVector::new(
        slice(xi, n, "xi")?.to_vec(),
        slice(eta, n, "eta")?.to_vec(),
    )?)
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn tp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a system from `n` frequencies and gains.
///
/// # Safety
/// `omega` and `b` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tp_system_new(
    omega: *const f64,
    b: *const f64,
    n: usize,
    out: *mut *mut TpSystem,
) -> TpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let inner = OscillatorSystem::new(slice(omega, n, "omega")?.to_vec(), slice(b, n, "b")?.to_vec())?;
        *out = Box::into_raw(Box::new(TpSystem { inner }));
        Ok(())
    })
}

/// Builds the first `n` modes of the beam with stiffness ratio `c`, length
/// `l` and hub offset `d`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tp_system_beam(n: usize, c: f64, l: f64, d: f64, out: *mut *mut TpSystem) -> TpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let inner = build_system(n, &BeamParams::new(c, l, d)?)?;
        *out = Box::into_raw(Box::new(TpSystem { inner }));
        Ok(())
    })
}

/// # Safety
/// `sys` must come from a constructor here and not be freed twice. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn tp_system_free(sys: *mut TpSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Number of modes, 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tp_system_len(sys: *const TpSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.inner.len())
}

/// Copies the frequencies and gains into `omega` and `b`, each of length
/// `tp_system_len(sys)`.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn tp_system_params(sys: *const TpSystem, omega: *mut f64, b: *mut f64) -> TpStatus {
    guard(|| {
        let s = system(sys)?;
        slice_mut(omega, s.len(), "omega")?.copy_from_slice(s.omega());
        slice_mut(b, s.len(), "b")?.copy_from_slice(s.b());
        Ok(())
    })
}

/// Minimal time for exact controllability.
///
/// # Safety
/// `sys` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tp_min_control_time(sys: *const TpSystem, out: *mut f64) -> TpStatus {
    guard(|| {
        *out_ptr(out, "out")? = min_control_time(system(sys)?)?;
        Ok(())
    })
}

/// `V_{p,q}` norm of the state `(xi, eta)`, each of length `tp_system_len`.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn tp_weighted_norm(
    sys: *const TpSystem,
    xi: *const f64,
    eta: *const f64,
    p: f64,
    q: f64,
    out: *mut f64,
) -> TpStatus {
    guard(|| {
        let s = system(sys)?;
        let x = state(xi, eta, s.len())?;
        *out_ptr(out, "out")? = weighted_norm(&x, WeightIndex::new(p, q), s)?;
        Ok(())
    })
}

/// Optimal steady state for target `(xbar_xi, xbar_eta, ubar)`. Writes
/// `x̂` into `xhat_xi`/`xhat_eta`, the costate into `lambda`/`mu` (all of
/// length `N`) and the control into `uhat`.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn tp_solve_static(
    sys: *const TpSystem,
    xbar_xi: *const f64,
    xbar_eta: *const f64,
    ubar: f64,
    xhat_xi: *mut f64,
    xhat_eta: *mut f64,
    lambda: *mut f64,
    mu: *mut f64,
    uhat: *mut f64,
) -> TpStatus {
    guard(|| {
        let s = system(sys)?;
        let n = s.len();
        let target = TargetSpec::new(state(xbar_xi, xbar_eta, n)?, ubar)?;
        let sol = solve_static(&target, s)?;
        slice_mut(xhat_xi, n, "xhat_xi")?.copy_from_slice(&sol.xhat.xi);
        slice_mut(xhat_eta, n, "xhat_eta")?.copy_from_slice(&sol.xhat.eta);
        slice_mut(lambda, n, "lambda")?.copy_from_slice(&sol.lambdahat);
        slice_mut(mu, n, "mu")?.copy_from_slice(&sol.muhat);
        *out_ptr(uhat, "uhat")? = sol.uhat;
        Ok(())
    })
}

/// Eigenvalue quadruple of mode `k` (1-based).
///
/// # Safety
/// `sys` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tp_find_nu(sys: *const TpSystem, k: usize, out: *mut TpEigenQuad) -> TpStatus {
    guard(|| {
        let q = find_nu(k, system(sys)?)?;
        *out_ptr(out, "out")? = TpEigenQuad::from(&q);
        Ok(())
    })
}

/// All `N` quadruples, written to `out[0..N]`; `capacity` must be at least `N`.
///
/// # Safety
/// `out` must be valid for `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn tp_spectrum(sys: *const TpSystem, out: *mut TpEigenQuad, capacity: usize) -> TpStatus {
    guard(|| {
        let s = system(sys)?;
        if capacity < s.len() {
            return Err(Error::Dimension {
                what: "spectrum buffer",
                got: capacity,
                expected: s.len(),
            }
            .into());
        }
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let quads = spectrum(s)?;
        let dst = std::slice::from_raw_parts_mut(out, s.len());
        for (d, q) in dst.iter_mut().zip(&quads) {
            *d = TpEigenQuad::from(q);
        }
        Ok(())
    })
}

/// Optimal trajectory on `[0, horizon]` sampled at `samples` uniform times.
///
/// Outputs, row-major per sample: `times[samples]`,
/// `state[samples × 2N]` as `(ξ, η)`, `costate[samples × 2N]` as `(λ, μ)`,
/// `control[samples]`.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn tp_solve_bvp(
    sys: *const TpSystem,
    xbar_xi: *const f64,
    xbar_eta: *const f64,
    ubar: f64,
    x0_xi: *const f64,
    x0_eta: *const f64,
    horizon: f64,
    samples: usize,
    times: *mut f64,
    state_out: *mut f64,
    costate_out: *mut f64,
    control: *mut f64,
) -> TpStatus {
    guard(|| {
        let s = system(sys)?;
        let n = s.len();
        let target = TargetSpec::new(state(xbar_xi, xbar_eta, n)?, ubar)?;
        let hs = HorizonSpec::uniform(horizon, state(x0_xi, x0_eta, n)?, samples)?;
        let st = solve_static(&target, s)?;
        let traj = solve_bvp_spectral(s, &target, &hs, &st)?;
        let times = slice_mut(times, samples, "times")?;
        let xs = slice_mut(state_out, samples * 2 * n, "state")?;
        let ls = slice_mut(costate_out, samples * 2 * n, "costate")?;
        let us = slice_mut(control, samples, "control")?;
        for i in 0..samples {
            times[i] = traj.times[i];
            us[i] = traj.u[i];
            let row = 2 * n * i;
            xs[row..row + n].copy_from_slice(&traj.x[i].xi);
            xs[row + n..row + 2 * n].copy_from_slice(&traj.x[i].eta);
            ls[row..row + n].copy_from_slice(&traj.lam[i]);
            ls[row + n..row + 2 * n].copy_from_slice(&traj.mu[i]);
        }
        Ok(())
    })
}
