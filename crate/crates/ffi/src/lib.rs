//! C ABI over the `cdmd` library.
//!
//! Matrices cross the boundary as column-major `double` buffers. Objects are
//! opaque handles created by `cdmd_*_new`/`cdmd_decompose` and released with
//! the matching `*_free`. Every call returns a [`CdmdStatus`]; on failure
//! `cdmd_last_error_message` describes the error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cdmd::dmd::{Method, SnapshotData};
use cdmd::error::Error;
use cdmd::linalg::RealMatrix;
use cdmd::runner::{run_method, MethodOutput, SolverConfig};
use cdmd::snapshot_io::{load_snapshots, save_snapshots, SnapshotFormat};
use cdmd::systems::{
    add_noise, gen_linear_periodic, gen_sine_superposition, LinearPeriodicSpec, NoiseSpec,
    SineSuperpositionSpec,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdmdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    NonFinite = 4,
    /// A numerical kernel failed (singular system, branch cut, no convergence).
    Numerical = 5,
    Io = 6,
    Parse = 7,
    /// Caller buffer too small; the error message states the required length.
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdmdMethod {
    Exact = 0,
    Fbdmd = 1,
    Tlsdmd = 2,
    Cdmd = 3,
    Cdmd2 = 4,
}

impl From<CdmdMethod> for Method {
    fn from(m: CdmdMethod) -> Method {
        match m {
            CdmdMethod::Exact => Method::Exact,
            CdmdMethod::Fbdmd => Method::Fbdmd,
            CdmdMethod::Tlsdmd => Method::Tlsdmd,
            CdmdMethod::Cdmd => Method::Cdmd,
            CdmdMethod::Cdmd2 => Method::Cdmd2,
        }
    }
}

/// Iterative solver settings; get defaults from `cdmd_solver_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdmdSolverOptions {
    pub rho0: f64,
    pub tau: f64,
    /// Residual ratio that triggers a penalty change.
    pub mu: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iters: u64,
    pub adaptive_rho: bool,
    /// `cdmd2` only: weight on `‖C − I‖²`.
    pub nu: f64,
    /// `cdmd2` only: weight on the split-off blocks.
    pub mu_reg: f64,
}

impl CdmdSolverOptions {
    fn to_config(self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        let a = &mut cfg.admm;
        a.rho0 = self.rho0;
        a.tau = self.tau;
        a.mu = self.mu;
        a.eps_abs = self.eps_abs;
        a.eps_rel = self.eps_rel;
        a.max_iters = self.max_iters as usize;
        a.adaptive_rho = self.adaptive_rho;
        let c = &mut cfg.cdmd2;
        c.rho0 = self.rho0;
        c.tau = self.tau;
        c.mu_trigger = self.mu;
        c.eps_abs = self.eps_abs;
        c.eps_rel = self.eps_rel;
        c.max_iters = self.max_iters as usize;
        c.adaptive_rho = self.adaptive_rho;
        c.nu = self.nu;
        c.mu_reg = self.mu_reg;
        cfg
    }
}

/// Paired snapshot matrices.
pub struct CdmdSnapshots {
    data: SnapshotData,
}

/// Output of one estimator run.
pub struct CdmdResult {
    out: MethodOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(CdmdStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        let status = match &e {
            Error::Dimension(_) => CdmdStatus::Dimension,
            Error::NonFinite(_) => CdmdStatus::NonFinite,
            Error::InvalidArgument(_) | Error::Config(_) | Error::Precondition(_) => {
                CdmdStatus::InvalidArgument
            }
            Error::Io { .. } => CdmdStatus::Io,
            Error::Parse { .. } => CdmdStatus::Parse,
            _ => CdmdStatus::Numerical,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CdmdStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CdmdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            CdmdStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            CdmdStatus::Panic
        }
    }
}

unsafe fn matrix_from(rows: usize, cols: usize, p: *const f64, what: &str) -> Result<RealMatrix, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Fail(CdmdStatus::Dimension, format!("{rows}x{cols} overflows")))?;
    let slice = std::slice::from_raw_parts(p, len);
    Ok(RealMatrix::from_column_slice(rows, cols, slice))
}

unsafe fn path_from<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Fail(CdmdStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cdmd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cdmd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds snapshots from `x` and `y`, each `rows × cols` column-major.
///
/// # Safety
/// `x` and `y` must point to `rows * cols` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdmd_snapshots_new(
    rows: usize,
    cols: usize,
    x: *const f64,
    y: *const f64,
    dt: f64,
    out: *mut *mut CdmdSnapshots,
) -> CdmdStatus {
    guard(|| {
        let x = matrix_from(rows, cols, x, "x")?;
        let y = matrix_from(rows, cols, y, "y")?;
        emit(out, CdmdSnapshots { data: SnapshotData::new(x, y, dt)? })
    })
}

/// Builds snapshots from a sequence `z_0 .. z_{cols-1}` (`rows × cols`,
/// column-major), giving `cols - 1` pairs.
///
/// # Safety
/// `z` must point to `rows * cols` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdmd_snapshots_from_sequence(
    rows: usize,
    cols: usize,
    z: *const f64,
    dt: f64,
    out: *mut *mut CdmdSnapshots,
) -> CdmdStatus {
    guard(|| {
        let z = matrix_from(rows, cols, z, "z")?;
        emit(out, CdmdSnapshots { data: SnapshotData::from_sequence(&z, dt)? })
    })
}

/// Samples the two-state linear benchmark with `n` pairs, plus Gaussian noise
/// of the given variance (0 for none).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdmd_gen_linear_periodic(
    n: usize,
    noise_variance: f64,
    seed: u64,
    out: *mut *mut CdmdSnapshots,
) -> CdmdStatus {
    guard(|| {
        let clean = gen_linear_periodic(&LinearPeriodicSpec { n, ..Default::default() })?;
        let data = add_noise(&clean, &NoiseSpec::variance(noise_variance, seed))?;
        emit(out, CdmdSnapshots { data })
    })
}

/// Samples the sine-superposition benchmark with `n` pairs, plus noise.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdmd_gen_sine(
    n: usize,
    noise_variance: f64,
    seed: u64,
    out: *mut *mut CdmdSnapshots,
) -> CdmdStatus {
    guard(|| {
        let clean = gen_sine_superposition(&SineSuperpositionSpec::with_n(n))?;
        let data = add_noise(&clean, &NoiseSpec::variance(noise_variance, seed))?;
        emit(out, CdmdSnapshots { data })
    })
}

/// Reads a snapshot file; `.csv`/`.txt` are parsed as CSV, anything else as
/// the binary format.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdmd_snapshots_load(
    path: *const c_char,
    out: *mut *mut CdmdSnapshots,
) -> CdmdStatus {
    guard(|| {
        let path = path_from(path)?;
        let data = load_snapshots(path, SnapshotFormat::from_path(path))?;
        emit(out, CdmdSnapshots { data })
    })
}

/// Writes a snapshot file, choosing the format from the extension.
///
/// # Safety
/// `snapshots` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cdmd_snapshots_save(
    snapshots: *const CdmdSnapshots,
    path: *const c_char,
) -> CdmdStatus {
    guard(|| {
        let s = handle(snapshots, "snapshots")?;
        let path = path_from(path)?;
        Ok(save_snapshots(&s.data, path, SnapshotFormat::from_path(path))?)
    })
}

/// State dimension, number of pairs and time step.
///
/// # Safety
/// `snapshots` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdmd_snapshots_shape(
    snapshots: *const CdmdSnapshots,
    rows: *mut usize,
    cols: *mut usize,
    dt: *mut f64,
) -> CdmdStatus {
    guard(|| {
        let s = handle(snapshots, "snapshots")?;
        if rows.is_null() || cols.is_null() || dt.is_null() {
            return Err(null("output pointer"));
        }
        *rows = s.data.state_dim();
        *cols = s.data.n_pairs();
        *dt = s.data.dt;
        Ok(())
    })
}

/// # Safety
/// `snapshots` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cdmd_snapshots_free(snapshots: *mut CdmdSnapshots) {
    if !snapshots.is_null() {
        drop(Box::from_raw(snapshots));
    }
}

#[no_mangle]
pub extern "C" fn cdmd_solver_options_default() -> CdmdSolverOptions {
    let d = SolverConfig::default();
    CdmdSolverOptions {
        rho0: d.admm.rho0,
        tau: d.admm.tau,
        mu: d.admm.mu,
        eps_abs: d.admm.eps_abs,
        eps_rel: d.admm.eps_rel,
        max_iters: d.admm.max_iters as u64,
        adaptive_rho: d.admm.adaptive_rho,
        nu: d.cdmd2.nu,
        mu_reg: d.cdmd2.mu_reg,
    }
}

/// Reduces to rank `r` and runs `method`. `options` may be null for
/// defaults. An iterative method that hits `max_iters` still succeeds; check
/// `cdmd_result_status`.
///
/// # Safety
/// `snapshots` must be a live handle; `options` null or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cdmd_decompose(
    snapshots: *const CdmdSnapshots,
    method: CdmdMethod,
    r: usize,
    options: *const CdmdSolverOptions,
    out: *mut *mut CdmdResult,
) -> CdmdStatus {
    guard(|| {
        let s = handle(snapshots, "snapshots")?;
        let opts = options.as_ref().copied().unwrap_or_else(|| cdmd_solver_options_default());
        let cfg = opts.to_config();
        cfg.admm.validate()?;
        cfg.cdmd2.validate()?;
        let result = run_method(&s.data, method.into(), r, &cfg)?;
        emit(out, CdmdResult { out: result })
    })
}

/// Reduced rank actually used (may be below the requested rank).
///
/// # Safety
/// `result` must be a live handle; `rank` writable.
#[no_mangle]
pub unsafe extern "C" fn cdmd_result_rank(result: *const CdmdResult, rank: *mut usize) -> CdmdStatus {
    guard(|| {
        let res = handle(result, "result")?;
        if rank.is_null() {
            return Err(null("rank"));
        }
        *rank = res.out.reduced.rank;
        Ok(())
    })
}

/// Copies the eigenvalues (discrete, or continuous `ln λ / dt`) into `re` and
/// `im`, each of capacity `len`. `len` must be at least the rank.
///
/// # Safety
/// `result` must be a live handle; `re` and `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cdmd_result_eigenvalues(
    result: *const CdmdResult,
    continuous: bool,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> CdmdStatus {
    guard(|| {
        let res = handle(result, "result")?;
        if re.is_null() || im.is_null() {
            return Err(null("eigenvalue buffer"));
        }
        let eigs = if continuous {
            &res.out.result.eigs_continuous
        } else {
            &res.out.result.eigs_discrete
        };
        if len < eigs.len() {
            return Err(Fail(
                CdmdStatus::BufferTooSmall,
                format!("need {} entries, got {len}", eigs.len()),
            ));
        }
        for (k, z) in eigs.iter().enumerate() {
            *re.add(k) = z.re;
            *im.add(k) = z.im;
        }
        Ok(())
    })
}

unsafe fn copy_matrix(m: &RealMatrix, dst: *mut f64, len: usize) -> Result<(), Fail> {
    if dst.is_null() {
        return Err(null("matrix buffer"));
    }
    if len < m.len() {
        return Err(Fail(
            CdmdStatus::BufferTooSmall,
            format!("need {} entries, got {len}", m.len()),
        ));
    }
    ptr::copy_nonoverlapping(m.as_slice().as_ptr(), dst, m.len());
    Ok(())
}

/// Reduced forward operator `A` (`rank × rank`, column-major).
///
/// # Safety
/// `result` must be a live handle; `dst` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cdmd_result_operator(result: *const CdmdResult, dst: *mut f64, len: usize) -> CdmdStatus {
    guard(|| copy_matrix(&handle(result, "result")?.out.result.a, dst, len))
}

/// Reduced backward operator `B` (`rank × rank`, column-major).
///
/// # Safety
/// `result` must be a live handle; `dst` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cdmd_result_backward(result: *const CdmdResult, dst: *mut f64, len: usize) -> CdmdStatus {
    guard(|| copy_matrix(&handle(result, "result")?.out.backward, dst, len))
}

/// DMD modes (`state_dim × rank`, column-major, complex split into `re`/`im`).
///
/// # Safety
/// `result` must be a live handle; `re` and `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cdmd_result_modes(
    result: *const CdmdResult,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> CdmdStatus {
    guard(|| {
        let modes = &handle(result, "result")?.out.result.modes;
        copy_matrix(&modes.map(|z| z.re), re, len)?;
        copy_matrix(&modes.map(|z| z.im), im, len)
    })
}

/// Whether the solver met its tolerances (always true for direct methods),
/// the iteration count (0 for direct methods) and `‖AB − I‖_F`.
///
/// # Safety
/// `result` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdmd_result_status(
    result: *const CdmdResult,
    converged: *mut bool,
    iterations: *mut usize,
    consistency: *mut f64,
) -> CdmdStatus {
    guard(|| {
        let res = handle(result, "result")?;
        if converged.is_null() || iterations.is_null() || consistency.is_null() {
            return Err(null("output pointer"));
        }
        *converged = res.out.converged;
        *iterations = res.out.history.len();
        *consistency = res.out.consistency();
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cdmd_result_free(result: *mut CdmdResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
