//! C ABI over `dpnoise`.
//!
//! Objects cross the boundary as opaque handles created by `dpn_*_new*` and
//! released with the matching `dpn_*_free`. Every fallible call returns a
//! [`DpnStatus`]; the message for the most recent failure on the calling
//! thread is available from [`dpn_last_error`]. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dpnoise::bounds::gap_report_with;
use dpnoise::hypotest::tradeoff_region;
use dpnoise::lp::lp_lower_bound;
use dpnoise::mechanisms::{discrete_laplace, sample, uniform_mechanism_multi};
use dpnoise::privacy::check_dp;
use dpnoise::{CostFn, Error, NoiseDistribution, PrivacyParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParams = 2,
    ZeroPrivacy = 3,
    InvalidDistribution = 4,
    InvalidCost = 5,
    IntegralityViolated = 6,
    EpsilonZero = 7,
    TooLarge = 8,
    NoCertificate = 9,
    LpFailure = 10,
    Unsupported = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

/// Opaque noise distribution.
pub struct DpnDistribution {
    inner: NoiseDistribution,
}

/// Opaque cost function.
pub struct DpnCost {
    inner: CostFn,
}

/// Bounds for one parameter point. Missing values are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpnGap {
    pub v_lb: f64,
    pub v_ub_uniform: f64,
    pub v_ub_laplace: f64,
    pub v_ub_min: f64,
    pub ratio: f64,
    /// Nonzero when the lower bound is certified.
    pub lb_certified: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DpnStatus {
    match e {
        Error::InvalidParams(_) | Error::DimensionMismatch { .. } | Error::RegimeMismatch(_) => {
            DpnStatus::InvalidParams
        }
        Error::ZeroPrivacy => DpnStatus::ZeroPrivacy,
        Error::NegativeProbability { .. } | Error::NotNormalized { .. } | Error::LambdaOutOfRange(_) => {
            DpnStatus::InvalidDistribution
        }
        Error::TableOutOfRange(_) | Error::InvalidCost(_) | Error::DivergentCost(_) => DpnStatus::InvalidCost,
        Error::IntegralityViolated { .. } => DpnStatus::IntegralityViolated,
        Error::EpsilonZero => DpnStatus::EpsilonZero,
        Error::SupportTooLarge { .. } | Error::TruncationTooLarge(_) => DpnStatus::TooLarge,
        Error::NoFeasibleCertificate(_) | Error::NegativeWeight(_) => DpnStatus::NoCertificate,
        Error::TruncationTooSmall { .. }
        | Error::LpInfeasible
        | Error::LpUnbounded
        | Error::LpSolver(_) => DpnStatus::LpFailure,
        Error::Unsupported(_) => DpnStatus::Unsupported,
    }
}

fn guard<F: FnOnce() -> Result<(), DpnStatus>>(f: F) -> DpnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DpnStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            DpnStatus::Panic
        }
    }
}

fn lift<T>(r: dpnoise::Result<T>) -> Result<T, DpnStatus> {
    r.map_err(|e| {
        set_error(&e.to_string());
        status_of(&e)
    })
}

fn null() -> DpnStatus {
    set_error("null pointer argument");
    DpnStatus::NullPointer
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), DpnStatus> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, DpnStatus> {
    p.as_ref().ok_or_else(null)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dpn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread. Valid until the next call
/// on the same thread; empty if nothing has failed yet.
#[no_mangle]
pub extern "C" fn dpn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn dpn_status_str(status: DpnStatus) -> *const c_char {
    let s: &'static str = match status {
        DpnStatus::Ok => "ok\0",
        DpnStatus::NullPointer => "null pointer\0",
        DpnStatus::InvalidParams => "invalid parameters\0",
        DpnStatus::ZeroPrivacy => "(epsilon, delta) = (0,0) admits no finite-cost mechanism\0",
        DpnStatus::InvalidDistribution => "invalid distribution\0",
        DpnStatus::InvalidCost => "invalid cost\0",
        DpnStatus::IntegralityViolated => "integrality condition violated\0",
        DpnStatus::EpsilonZero => "epsilon must be positive\0",
        DpnStatus::TooLarge => "problem too large\0",
        DpnStatus::NoCertificate => "no feasible certificate\0",
        DpnStatus::LpFailure => "linear program failed\0",
        DpnStatus::Unsupported => "unsupported\0",
        DpnStatus::BufferTooSmall => "buffer too small\0",
        DpnStatus::Panic => "internal panic\0",
    };
    s.as_ptr().cast()
}

// ---- costs ----

/// `m` = 1 gives l1, 2 gives l2, m >= 3 gives |k|^m.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dpn_cost_new_power(m: u32, out: *mut *mut DpnCost) -> DpnStatus {
    guard(|| {
        let inner = match m {
            1 => CostFn::L1,
            2 => CostFn::L2,
            m => CostFn::Power { m },
        };
        lift(inner.validate())?;
        put(out, DpnCost { inner })
    })
}

/// Table cost indexed by |k|; evaluating past the end is an error.
///
/// # Safety
/// `values` must point to `len` readable doubles and `out` to storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dpn_cost_new_table(values: *const f64, len: usize, out: *mut *mut DpnCost) -> DpnStatus {
    guard(|| {
        if values.is_null() {
            return Err(null());
        }
        let inner = CostFn::table(std::slice::from_raw_parts(values, len).to_vec());
        lift(inner.validate())?;
        put(out, DpnCost { inner })
    })
}

/// # Safety
/// `cost` must be null or a handle from `dpn_cost_new_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dpn_cost_free(cost: *mut DpnCost) {
    if !cost.is_null() {
        drop(Box::from_raw(cost));
    }
}

/// # Safety
/// `cost` must be a live handle, `point` must hold `dims` integers, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpn_cost_value(
    cost: *const DpnCost,
    point: *const i64,
    dims: usize,
    out: *mut f64,
) -> DpnStatus {
    guard(|| {
        let c = get(cost)?;
        if point.is_null() || out.is_null() {
            return Err(null());
        }
        *out = lift(c.inner.value(std::slice::from_raw_parts(point, dims)))?;
        Ok(())
    })
}

// ---- distributions ----

/// Uniform mechanism of width Delta/delta per axis.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpn_dist_new_uniform(
    sensitivity: u32,
    delta: f64,
    dims: u32,
    out: *mut *mut DpnDistribution,
) -> DpnStatus {
    guard(|| {
        let p = lift(PrivacyParams::new(0.0, delta, sensitivity, dims))?;
        lift(p.validate_nontrivial())?;
        let inner = lift(uniform_mechanism_multi(&p))?;
        put(out, DpnDistribution { inner })
    })
}

/// Discrete Laplacian with lambda = exp(-epsilon/Delta) per axis.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpn_dist_new_laplace(
    epsilon: f64,
    sensitivity: u32,
    dims: u32,
    out: *mut *mut DpnDistribution,
) -> DpnStatus {
    guard(|| {
        let p = lift(PrivacyParams::new(epsilon, 0.0, sensitivity, dims))?;
        let inner = lift(discrete_laplace(&p))?;
        put(out, DpnDistribution { inner })
    })
}

/// One-dimensional pmf with `probs[j]` at `offset + j`.
///
/// # Safety
/// `probs` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpn_dist_new_finite(
    offset: i64,
    probs: *const f64,
    len: usize,
    out: *mut *mut DpnDistribution,
) -> DpnStatus {
    guard(|| {
        if probs.is_null() {
            return Err(null());
        }
        let inner = NoiseDistribution::finite(offset, std::slice::from_raw_parts(probs, len).to_vec());
        lift(inner.validate())?;
        put(out, DpnDistribution { inner })
    })
}

/// Distribution from its JSON form (`{"type":"finite",...}` etc.).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpn_dist_from_json(json: *const c_char, out: *mut *mut DpnDistribution) -> DpnStatus {
    guard(|| {
        if json.is_null() {
            return Err(null());
        }
        let text = CStr::from_ptr(json).to_str().map_err(|_| {
            set_error("json is not valid UTF-8");
            DpnStatus::InvalidDistribution
        })?;
        let inner: NoiseDistribution = serde_json::from_str(text).map_err(|e| {
            set_error(&e.to_string());
            DpnStatus::InvalidDistribution
        })?;
        lift(inner.validate())?;
        put(out, DpnDistribution { inner })
    })
}

/// # Safety
/// `dist` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dpn_dist_free(dist: *mut DpnDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

/// # Safety
/// `dist` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dpn_dist_dims(dist: *const DpnDistribution) -> usize {
    dist.as_ref().map_or(0, |d| d.inner.dims())
}

/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpn_expected_cost(
    dist: *const DpnDistribution,
    cost: *const DpnCost,
    out: *mut f64,
) -> DpnStatus {
    guard(|| {
        let (d, c) = (get(dist)?, get(cost)?);
        if out.is_null() {
            return Err(null());
        }
        *out = lift(d.inner.expected_cost(&c.inner))?;
        Ok(())
    })
}

/// Smallest delta for which `dist` is (epsilon, delta)-DP at the given sensitivity.
///
/// # Safety
/// `dist` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpn_tightest_delta(
    dist: *const DpnDistribution,
    epsilon: f64,
    sensitivity: u32,
    out: *mut f64,
) -> DpnStatus {
    guard(|| {
        let d = get(dist)?;
        if out.is_null() {
            return Err(null());
        }
        let p = lift(PrivacyParams::new(epsilon, 0.0, sensitivity, d.inner.dims() as u32))?;
        *out = lift(check_dp(&d.inner, &p))?.tightest_delta;
        Ok(())
    })
}

/// Writes `n` draws (row-major, `dims` values each) into `out`, which must hold
/// `capacity >= n * dims` integers.
///
/// # Safety
/// `dist` must be live and `out` must point to `capacity` writable integers.
#[no_mangle]
pub unsafe extern "C" fn dpn_sample(
    dist: *const DpnDistribution,
    seed: u64,
    n: usize,
    out: *mut i64,
    capacity: usize,
) -> DpnStatus {
    guard(|| {
        let d = get(dist)?;
        if out.is_null() {
            return Err(null());
        }
        let need = n.checked_mul(d.inner.dims()).unwrap_or(usize::MAX);
        if capacity < need {
            set_error(&format!("need {need} slots, got {capacity}"));
            return Err(DpnStatus::BufferTooSmall);
        }
        let batch = lift(sample(&d.inner, seed, n))?;
        ptr::copy_nonoverlapping(batch.values.as_ptr(), out, batch.values.len());
        Ok(())
    })
}

// ---- bounds ----

/// Best certified lower bound, mechanism upper bounds and their ratio.
/// `use_lp` nonzero lets a one-dimensional LP supply a missing lower bound.
///
/// # Safety
/// `cost` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpn_bounds(
    cost: *const DpnCost,
    epsilon: f64,
    delta: f64,
    sensitivity: u32,
    dims: u32,
    use_lp: i32,
    out: *mut DpnGap,
) -> DpnStatus {
    guard(|| {
        let c = get(cost)?;
        if out.is_null() {
            return Err(null());
        }
        let p = lift(PrivacyParams::new(epsilon, delta, sensitivity, dims))?;
        let g = lift(gap_report_with(&c.inner, &p, use_lp != 0))?;
        let nan = |v: Option<f64>| v.unwrap_or(f64::NAN);
        *out = DpnGap {
            v_lb: nan(g.v_lb),
            v_ub_uniform: nan(g.v_ub_uniform),
            v_ub_laplace: nan(g.v_ub_laplace),
            v_ub_min: nan(g.v_ub_min),
            ratio: nan(g.ratio),
            lb_certified: g.lower.as_ref().map_or(0, |b| b.preconditions_ok as i32),
        };
        Ok(())
    })
}

/// Optimum of the truncated relaxed LP (one dimension); `truncation` 0 picks the default.
///
/// # Safety
/// `cost` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpn_lp_optimum(
    cost: *const DpnCost,
    epsilon: f64,
    delta: f64,
    sensitivity: u32,
    truncation: u64,
    out: *mut f64,
) -> DpnStatus {
    guard(|| {
        let c = get(cost)?;
        if out.is_null() {
            return Err(null());
        }
        let p = lift(PrivacyParams::one_dim(epsilon, delta, sensitivity))?;
        let n = (truncation > 0).then_some(truncation);
        *out = lift(lp_lower_bound(&c.inner, &p, n))?.value;
        Ok(())
    })
}

/// Writes the three boundary vertices as p_fa0, p_md0, p_fa1, p_md1, p_fa2, p_md2.
///
/// # Safety
/// `out` must point to 6 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dpn_tradeoff_vertices(epsilon: f64, delta: f64, out: *mut f64) -> DpnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let r = lift(tradeoff_region(epsilon, delta))?;
        for (i, &(a, b)) in r.vertices.iter().enumerate() {
            *out.add(2 * i) = a;
            *out.add(2 * i + 1) = b;
        }
        Ok(())
    })
}
