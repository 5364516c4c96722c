//! C interface to the `pcmb` link simulator.
//!
//! Objects cross the boundary as opaque handles created by `*_new` and
//! released by `*_free`. Every fallible call returns a `PcmbStatus`; the
//! message of the most recent failure on the calling thread is available
//! from `pcmb_last_error`. Complex arrays are interleaved `re, im` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use num_complex::Complex64;
use pcmb::harness::{validate_with, Scheme, SimConfig, Simulator, ValidationInputs};
use pcmb::modulation::Constellation;
use pcmb::numerics::CMatrix;
use pcmb::pcmb_decoder::{closed_form_r, decode_with, precompute};
use pcmb::pstbc::{generation_matrix, PerfectCode};
use pcmb::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcmbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DegenerateChannel = 3,
    UnsupportedDimension = 4,
    UnsupportedModulation = 5,
    Infeasible = 6,
    Config = 7,
    Io = 8,
    Panic = 9,
}

/// Perfect space-time block code of dimension 2 or 4.
pub struct PcmbCode(PerfectCode);

/// Square QAM constellation.
pub struct PcmbConstellation(Constellation);

/// Simulation settings; each call to `pcmb_simulator_run_point` runs one SNR.
pub struct PcmbSimulator(SimConfig);

/// One measured operating point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PcmbPoint {
    pub snr_db: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub avg_real_mults: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn status_of(e: &Error) -> PcmbStatus {
    match e {
        Error::InvalidInput(_) | Error::Usage(_) => PcmbStatus::InvalidInput,
        Error::DegenerateChannel(_) => PcmbStatus::DegenerateChannel,
        Error::UnsupportedDimension(_) => PcmbStatus::UnsupportedDimension,
        Error::UnsupportedModulation(_) => PcmbStatus::UnsupportedModulation,
        Error::Infeasible(_) => PcmbStatus::Infeasible,
        Error::Config(_) => PcmbStatus::Config,
        Error::Io(_) | Error::Csv(_) => PcmbStatus::Io,
    }
}

fn fail(status: PcmbStatus, msg: impl Into<String>) -> PcmbStatus {
    LAST_ERROR.with(|l| *l.borrow_mut() = msg.into());
    status
}

/// Runs `f`, mapping library errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), PcmbStatus>) -> PcmbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PcmbStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(PcmbStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: pcmb::Result<T>) -> Result<T, PcmbStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn null() -> PcmbStatus {
    fail(PcmbStatus::NullPointer, "null pointer argument")
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, PcmbStatus> {
    p.as_ref().ok_or_else(null)
}

unsafe fn input<'a, T>(p: *const T, len: usize) -> Result<&'a [T], PcmbStatus> {
    if p.is_null() {
        return Err(null());
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize) -> Result<&'a mut [T], PcmbStatus> {
    if p.is_null() {
        return Err(null());
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

fn boxed<T>(out: *mut *mut T, value: T) -> Result<(), PcmbStatus> {
    if out.is_null() {
        return Err(null());
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pcmb_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|l| {
        let msg = l.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates the perfect code of dimension `d` (2 or 4).
///
/// # Safety
/// `out` must be a valid pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn pcmb_code_new(d: usize, out: *mut *mut PcmbCode) -> PcmbStatus {
    guard(|| boxed(out, PcmbCode(lift(generation_matrix(d))?)))
}

/// # Safety
/// `code` must be null or a handle from `pcmb_code_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pcmb_code_free(code: *mut PcmbCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// Dimension D of the code, or 0 for a null handle.
///
/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcmb_code_dimension(code: *const PcmbCode) -> usize {
    code.as_ref().map_or(0, |c| c.0.dimension())
}

/// Creates an `m`-QAM constellation (4, 16, 64 or 256).
///
/// # Safety
/// `out` must be a valid pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn pcmb_constellation_new(m: usize, out: *mut *mut PcmbConstellation) -> PcmbStatus {
    guard(|| boxed(out, PcmbConstellation(lift(Constellation::qam(m))?)))
}

/// # Safety
/// `c` must be null or a handle from `pcmb_constellation_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pcmb_constellation_free(c: *mut PcmbConstellation) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Writes the closed-form upper-triangular R for singular values `lambda`
/// (D entries, descending) into `r_out` (D*D doubles, row-major).
///
/// # Safety
/// `lambda` must hold D doubles and `r_out` D*D writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pcmb_closed_form_r(code: *const PcmbCode, lambda: *const f64, r_out: *mut f64) -> PcmbStatus {
    guard(|| {
        let code = &handle(code)?.0;
        let d = code.dimension();
        let lambda = input(lambda, d)?;
        let out = output(r_out, d * d)?;
        let r = lift(closed_form_r(lambda, code))?;
        for (i, row) in r.iter().enumerate() {
            out[i * d..(i + 1) * d].copy_from_slice(row);
        }
        Ok(())
    })
}

/// Decodes one received block. `y` is the D×D post-beamforming block,
/// row-major, interleaved (2*D*D doubles). Writes the D*D symbol indices in
/// column-major order (column v is thread v) to `indices_out`.
///
/// # Safety
/// Pointers must reference arrays of the sizes stated above.
#[no_mangle]
pub unsafe extern "C" fn pcmb_decode(
    code: *const PcmbCode,
    constellation: *const PcmbConstellation,
    lambda: *const f64,
    y: *const f64,
    indices_out: *mut u32,
) -> PcmbStatus {
    guard(|| {
        let code = &handle(code)?.0;
        let c = &handle(constellation)?.0;
        let d = code.dimension();
        let lambda = input(lambda, d)?;
        let y = input(y, 2 * d * d)?;
        let out = output(indices_out, d * d)?;
        let y = CMatrix::from_fn(d, d, |u, v| Complex64::new(y[2 * (u * d + v)], y[2 * (u * d + v) + 1]));
        let pre = lift(precompute(lambda, code))?;
        let (x, _) = lift(decode_with(&y, &pre, c))?;
        for (o, &i) in out.iter_mut().zip(x.as_column_major()) {
            *o = i as u32;
        }
        Ok(())
    })
}

/// Creates a simulator for `scheme` ("gc", "fpmb", "gcmb", "bicmb-gc",
/// "bicmb-fp", ...). Code rate and frame defaults apply to coded schemes.
///
/// # Safety
/// `scheme` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pcmb_simulator_new(
    scheme: *const c_char,
    d: usize,
    m: usize,
    seed: u64,
    target_errors: u64,
    max_trials: u64,
    out: *mut *mut PcmbSimulator,
) -> PcmbStatus {
    guard(|| {
        if scheme.is_null() {
            return Err(null());
        }
        let name = CStr::from_ptr(scheme)
            .to_str()
            .map_err(|_| fail(PcmbStatus::InvalidInput, "scheme name is not UTF-8"))?;
        let mut cfg = SimConfig::new(lift(Scheme::parse(name))?, d, m, vec![0.0]);
        cfg.seed = seed;
        cfg.target_errors = target_errors;
        cfg.max_trials = max_trials;
        cfg.timing = false;
        lift(cfg.validate())?;
        boxed(out, PcmbSimulator(cfg))
    })
}

/// # Safety
/// `sim` must be null or a handle from `pcmb_simulator_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pcmb_simulator_free(sim: *mut PcmbSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Measures one SNR point. With `complexity` nonzero the run ignores the
/// error target and uses exactly `max_trials` trials.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pcmb_simulator_run_point(
    sim: *const PcmbSimulator,
    snr_db: f64,
    complexity: bool,
    out: *mut PcmbPoint,
) -> PcmbStatus {
    guard(|| {
        let mut cfg = handle(sim)?.0.clone();
        let out = out.as_mut().ok_or_else(null)?;
        cfg.snr_db = vec![snr_db];
        let s = lift(Simulator::new(cfg))?;
        let recs = lift(if complexity { s.run_complexity_sweep() } else { s.run_ber_sweep() })?;
        let r = &recs[0];
        *out = PcmbPoint {
            snr_db: r.snr_db,
            trials: r.trials,
            bit_errors: r.bit_errors,
            ber: r.ber,
            avg_real_mults: r.avg_real_mults,
        };
        Ok(())
    })
}

/// Runs the structural self-checks. `passed_out` receives 1 when all pass.
/// The report text goes to the last-error slot when a check fails.
///
/// # Safety
/// `passed_out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pcmb_validate(seed: u64, instances: usize, passed_out: *mut bool) -> PcmbStatus {
    guard(|| {
        let passed_out = passed_out.as_mut().ok_or_else(null)?;
        let mut inputs = lift(ValidationInputs::standard())?;
        inputs.seed = seed;
        inputs.instances = instances;
        let report = lift(validate_with(&inputs))?;
        *passed_out = report.all_passed();
        if !report.all_passed() {
            fail(PcmbStatus::Ok, report.to_string());
        }
        Ok(())
    })
}
