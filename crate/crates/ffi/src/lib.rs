//! C ABI for `spherimax`.
//!
//! Every entry point returns an [`SmxStatus`]; on failure a description is
//! available from [`smx_last_error_message`] on the calling thread. Handles
//! are opaque and must be released with their `_free` function. Panics are
//! caught at the boundary and reported as [`SmxStatus::Panic`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use spherimax::error::Error;
use spherimax::eta::{check_condition, compute_eta, tabulate_curve, Condition, EtaCurve, EtaSample};
use spherimax::functionals::{zoo_get, Functional, FunctionalSpec};
use spherimax::space::{Point, ProblemInstance, Tolerances};
use spherimax::theorems::fixed_point_residual;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownFunctional = 3,
    ConditionFails = 4,
    InfeasibleLevel = 5,
    SolverFailure = 6,
    OutOfRange = 7,
    GradientUndefined = 8,
    Io = 9,
    Panic = 10,
}

/// Opaque problem instance.
pub struct SmxInstance {
    inst: ProblemInstance,
    condition: OnceLock<Condition>,
}

/// Opaque tabulated curve.
pub struct SmxCurve {
    curve: EtaCurve,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SmxTolerances {
    pub tol_opt: f64,
    pub tol_res: f64,
    pub tol_val: f64,
    pub tol_cluster: f64,
    pub grid_points: usize,
    pub restarts: usize,
}

/// `delta` is `INFINITY` when `delta_rho = +inf`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SmxCondition {
    pub holds: bool,
    pub beta: f64,
    pub delta: f64,
    pub rho: f64,
}

/// `residual` is NaN when the gradient is undefined at the representative.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SmxEtaSample {
    pub r: f64,
    pub eta: f64,
    pub psi: f64,
    pub residual: f64,
    pub n_clusters: usize,
    pub dinkelbach_iters: usize,
    pub in_working_interval: bool,
}

/// `J(x)` for `x` of length `n`.
pub type SmxValueFn = Option<unsafe extern "C" fn(x: *const f64, n: usize, user_data: *mut c_void) -> f64>;
/// Writes `J'(x)` into `out` (length `n`).
pub type SmxGradientFn = Option<unsafe extern "C" fn(x: *const f64, n: usize, out: *mut f64, user_data: *mut c_void)>;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(SmxStatus, String);

impl Failure {
    fn new(status: SmxStatus, msg: impl Into<String>) -> Self {
        Self(status, msg.into())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::UnknownFunctional(_) => SmxStatus::UnknownFunctional,
            Error::InfeasibleLevel { .. } => SmxStatus::InfeasibleLevel,
            Error::SolverFailure { .. } => SmxStatus::SolverFailure,
            Error::OutOfRange { .. } => SmxStatus::OutOfRange,
            Error::GradientUndefined(_) => SmxStatus::GradientUndefined,
            _ => SmxStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult<T = ()> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult) -> SmxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            SmxStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            SmxStatus::Panic
        }
    }
}

fn non_null<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    // SAFETY: the caller passes either null or a valid pointer per the API contract
    unsafe { p.as_ref() }.ok_or_else(|| Failure::new(SmxStatus::NullPointer, format!("`{what}` is null")))
}

fn out_ptr<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    // SAFETY: as above, for writable pointers
    unsafe { p.as_mut() }.ok_or_else(|| Failure::new(SmxStatus::NullPointer, format!("`{what}` is null")))
}

fn c_str<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    non_null(p, what)?;
    // SAFETY: non-null, NUL-terminated per the API contract
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure::new(SmxStatus::InvalidArgument, format!("`{what}` is not valid UTF-8")))
}

fn slice<'a>(p: *const f64, len: usize, what: &str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    // SAFETY: non-null and `len` elements readable per the API contract
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

impl SmxInstance {
    fn condition(&self) -> FfiResult<&Condition> {
        if let Some(c) = self.condition.get() {
            return Ok(c);
        }
        let c = check_condition(&self.inst)?;
        Ok(self.condition.get_or_init(|| c))
    }
}

fn write_sample(s: &EtaSample, out: &mut SmxEtaSample, representative: *mut f64) {
    *out = SmxEtaSample {
        r: s.r,
        eta: s.eta,
        psi: s.psi,
        residual: s.residual,
        n_clusters: s.gamma.len(),
        dinkelbach_iters: s.dinkelbach_iters,
        in_working_interval: s.in_working_interval,
    };
    if !representative.is_null() {
        let c = s.representative.coords();
        // SAFETY: caller provides room for `n` doubles when non-null
        unsafe { std::ptr::copy_nonoverlapping(c.as_ptr(), representative, c.len()) };
    }
}

/// Default tolerances.
#[no_mangle]
pub extern "C" fn smx_tolerances_default() -> SmxTolerances {
    let t = Tolerances::default();
    SmxTolerances {
        tol_opt: t.tol_opt,
        tol_res: t.tol_res,
        tol_val: t.tol_val,
        tol_cluster: t.tol_cluster,
        grid_points: t.grid_points,
        restarts: t.restarts,
    }
}

fn tolerances(t: *const SmxTolerances) -> FfiResult<Tolerances> {
    if t.is_null() {
        return Ok(Tolerances::default());
    }
    let t = non_null(t, "tolerances")?;
    let tol = Tolerances {
        tol_opt: t.tol_opt,
        tol_res: t.tol_res,
        tol_val: t.tol_val,
        tol_cluster: t.tol_cluster,
        grid_points: t.grid_points,
        restarts: t.restarts,
    };
    tol.validate()?;
    Ok(tol)
}

fn finish_instance(
    f: FunctionalSpec,
    rho: f64,
    tol: *const SmxTolerances,
    seed: u64,
    out: *mut *mut SmxInstance,
) -> FfiResult {
    let out = out_ptr(out, "out")?;
    let inst = ProblemInstance::new(f, rho, tolerances(tol)?)?.with_seed(seed);
    *out = Box::into_raw(Box::new(SmxInstance { inst, condition: OnceLock::new() }));
    Ok(())
}

/// Creates an instance from a zoo functional. `param_names`/`param_values`
/// hold `n_params` entries (both may be null when `n_params == 0`);
/// `tolerances` may be null for the defaults.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; strings must be
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn smx_instance_new(
    name: *const c_char,
    param_names: *const *const c_char,
    param_values: *const f64,
    n_params: usize,
    n: usize,
    rho: f64,
    tolerances: *const SmxTolerances,
    seed: u64,
    out: *mut *mut SmxInstance,
) -> SmxStatus {
    guard(|| {
        let name = c_str(name, "name")?;
        let values = slice(param_values, n_params, "param_values")?;
        let mut params = BTreeMap::new();
        if n_params > 0 {
            non_null(param_names, "param_names")?;
            // SAFETY: `n_params` readable entries per the contract
            let names = unsafe { std::slice::from_raw_parts(param_names, n_params) };
            for (k, v) in names.iter().zip(values) {
                params.insert(c_str(*k, "param_names[i]")?.to_string(), *v);
            }
        }
        finish_instance(zoo_get(name, &params, n)?, rho, tolerances, seed, out)
    })
}

struct Callbacks {
    value: unsafe extern "C" fn(*const f64, usize, *mut c_void) -> f64,
    gradient: unsafe extern "C" fn(*const f64, usize, *mut f64, *mut c_void),
    user_data: *mut c_void,
}

// SAFETY: the caller guarantees the callbacks and `user_data` are usable
// concurrently from several threads (documented on the constructor)
unsafe impl Send for Callbacks {}
unsafe impl Sync for Callbacks {}

impl Functional for Callbacks {
    fn value(&self, x: &[f64]) -> f64 {
        // SAFETY: see the `Send`/`Sync` contract above
        unsafe { (self.value)(x.as_ptr(), x.len(), self.user_data) }
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        // SAFETY: `out` has `x.len()` elements
        unsafe { (self.gradient)(x.as_ptr(), x.len(), out.as_mut_ptr(), self.user_data) }
    }
}

/// Creates an instance from C callbacks. `J(0)` must be 0. The callbacks
/// are invoked concurrently from worker threads and must be thread-safe;
/// `user_data` must outlive the instance.
///
/// # Safety
/// Function pointers must be valid; see above for `user_data`.
#[no_mangle]
pub unsafe extern "C" fn smx_instance_new_callback(
    n: usize,
    rho: f64,
    value: SmxValueFn,
    gradient: SmxGradientFn,
    user_data: *mut c_void,
    smooth_at_origin: bool,
    radial: bool,
    tolerances: *const SmxTolerances,
    seed: u64,
    out: *mut *mut SmxInstance,
) -> SmxStatus {
    guard(|| {
        let (Some(value), Some(gradient)) = (value, gradient) else {
            return Err(Failure::new(SmxStatus::NullPointer, "value and gradient callbacks are required"));
        };
        let oracle = Arc::new(Callbacks { value, gradient, user_data });
        let f = FunctionalSpec::custom("CALLBACK", n, oracle, smooth_at_origin, radial)?;
        finish_instance(f, rho, tolerances, seed, out)
    })
}

/// Releases an instance; null is ignored.
///
/// # Safety
/// `inst` must come from an `smx_instance_new*` call and not be used again.
#[no_mangle]
pub unsafe extern "C" fn smx_instance_free(inst: *mut SmxInstance) {
    if !inst.is_null() {
        drop(unsafe { Box::from_raw(inst) });
    }
}

/// Dimension of the instance, 0 for null.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn smx_instance_dim(inst: *const SmxInstance) -> usize {
    unsafe { inst.as_ref() }.map_or(0, |i| i.inst.n)
}

/// Evaluates the feasibility gate `beta_rho/rho < delta_rho` (cached).
///
/// # Safety
/// `inst` must be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn smx_check_condition(inst: *const SmxInstance, out: *mut SmxCondition) -> SmxStatus {
    guard(|| {
        let c = non_null(inst, "inst")?.condition()?;
        *out_ptr(out, "out")? = SmxCondition { holds: c.holds, beta: c.beta, delta: c.delta.to_f64(), rho: c.rho };
        Ok(())
    })
}

/// `eta(r)` with its argmax data. `representative` may be null, otherwise
/// it receives `n` coordinates.
///
/// # Safety
/// `inst` live, `out` writable, `representative` null or `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn smx_compute_eta(
    inst: *const SmxInstance,
    r: f64,
    out: *mut SmxEtaSample,
    representative: *mut f64,
) -> SmxStatus {
    guard(|| {
        let h = non_null(inst, "inst")?;
        let out = out_ptr(out, "out")?;
        let cond = h.condition()?;
        if !cond.holds {
            return Err(Failure::new(
                SmxStatus::ConditionFails,
                "feasibility condition beta_rho/rho < delta_rho fails",
            ));
        }
        let s = compute_eta(&h.inst, cond, r)?;
        write_sample(&s, out, representative);
        Ok(())
    })
}

/// `‖x - lambda·J'(x)‖ / (1 + ‖x‖)`.
///
/// # Safety
/// `inst` live, `x` readable for `n` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn smx_fixed_point_residual(
    inst: *const SmxInstance,
    x: *const f64,
    n: usize,
    lambda: f64,
    out: *mut f64,
) -> SmxStatus {
    guard(|| {
        let h = non_null(inst, "inst")?;
        let p = Point::new(slice(x, n, "x")?.to_vec())?;
        *out_ptr(out, "out")? = fixed_point_residual(&h.inst, &p, lambda)?;
        Ok(())
    })
}

/// Tabulates `count >= 3` geometrically spaced levels on `[r_lo, r_hi]`.
/// Levels that fail are skipped; see [`smx_curve_failures`].
///
/// # Safety
/// `inst` live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn smx_curve_new(
    inst: *const SmxInstance,
    r_lo: f64,
    r_hi: f64,
    count: usize,
    out: *mut *mut SmxCurve,
) -> SmxStatus {
    guard(|| {
        let h = non_null(inst, "inst")?;
        let out = out_ptr(out, "out")?;
        let cond = h.condition()?;
        if !cond.holds {
            return Err(Failure::new(
                SmxStatus::ConditionFails,
                "feasibility condition beta_rho/rho < delta_rho fails",
            ));
        }
        let curve = tabulate_curve(&h.inst, cond, r_lo, r_hi, count)?;
        *out = Box::into_raw(Box::new(SmxCurve { curve }));
        Ok(())
    })
}

/// Number of successful samples, 0 for null.
///
/// # Safety
/// `curve` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn smx_curve_len(curve: *const SmxCurve) -> usize {
    unsafe { curve.as_ref() }.map_or(0, |c| c.curve.samples.len())
}

/// Number of levels that failed, 0 for null.
///
/// # Safety
/// `curve` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn smx_curve_failures(curve: *const SmxCurve) -> usize {
    unsafe { curve.as_ref() }.map_or(0, |c| c.curve.failures.len())
}

/// Sample `index` in increasing `r`.
///
/// # Safety
/// `curve` live, `out` writable, `representative` null or `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn smx_curve_sample(
    curve: *const SmxCurve,
    index: usize,
    out: *mut SmxEtaSample,
    representative: *mut f64,
) -> SmxStatus {
    guard(|| {
        let c = &non_null(curve, "curve")?.curve;
        let s = c.samples.get(index).ok_or_else(|| {
            Failure::new(SmxStatus::OutOfRange, format!("index {index} >= length {}", c.samples.len()))
        })?;
        write_sample(s, out_ptr(out, "out")?, representative);
        Ok(())
    })
}

/// Writes the curve in the `eta_curve.csv` format.
///
/// # Safety
/// `curve` live, `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn smx_curve_write_csv(curve: *const SmxCurve, path: *const c_char) -> SmxStatus {
    guard(|| {
        let c = &non_null(curve, "curve")?.curve;
        let path = c_str(path, "path")?;
        spherimax::cli::output::write_atomic(Path::new(path), &spherimax::cli::output::eta_curve_csv(c))
            .map_err(|e| Failure::new(SmxStatus::Io, format!("{path}: {e}")))
    })
}

/// Releases a curve; null is ignored.
///
/// # Safety
/// `curve` must come from [`smx_curve_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn smx_curve_free(curve: *mut SmxCurve) {
    if !curve.is_null() {
        drop(unsafe { Box::from_raw(curve) });
    }
}

/// Message of the last failed call on this thread ("" after a success).
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn smx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn smx_status_str(status: SmxStatus) -> *const c_char {
    let s: &'static CStr = match status {
        SmxStatus::Ok => c"ok",
        SmxStatus::NullPointer => c"null pointer",
        SmxStatus::InvalidArgument => c"invalid argument",
        SmxStatus::UnknownFunctional => c"unknown functional",
        SmxStatus::ConditionFails => c"feasibility condition fails",
        SmxStatus::InfeasibleLevel => c"infeasible level",
        SmxStatus::SolverFailure => c"solver failure",
        SmxStatus::OutOfRange => c"out of range",
        SmxStatus::GradientUndefined => c"gradient undefined",
        SmxStatus::Io => c"I/O error",
        SmxStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Library version, e.g. `"0.1.0"`.
#[no_mangle]
pub extern "C" fn smx_version() -> *const c_char {
    static V: OnceLock<CString> = OnceLock::new();
    V.get_or_init(|| CString::new(env!("CARGO_PKG_VERSION")).expect("no NUL")).as_ptr()
}
