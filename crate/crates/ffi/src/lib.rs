//! C ABI over the `tpt` solver.
//!
//! Problems and spectra are opaque handles created and freed here. Every call
//! returns a [`TptStatus`]; on failure [`tpt_last_error`] holds the message
//! for the calling thread. Angles are in radians.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use tpt::model::{EndDatum, EnergySign, NuKind, NuValue, PotentialSpec, RenormData};
use tpt::oracle::{eigen_window, RegulatedProblem};
use tpt::spectra::{solve_spectrum, ScanConfig, SpectrumReport};
use tpt::Error;

/// Return code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TptStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    Domain = 3,
    Regime = 4,
    Unsupported = 5,
    GammaPole = 6,
    NonConvergence = 7,
    Degenerate = 8,
    Numerical = 9,
    IndexOutOfRange = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

impl From<&Error> for TptStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Validation(_) => TptStatus::Validation,
            Error::Domain(_) => TptStatus::Domain,
            Error::Regime(_) => TptStatus::Regime,
            Error::Unsupported(_) => TptStatus::Unsupported,
            Error::GammaPole { .. } => TptStatus::GammaPole,
            Error::NonConvergence { .. } => TptStatus::NonConvergence,
            Error::Degenerate(_) => TptStatus::Degenerate,
            Error::Numerical(_) => TptStatus::Numerical,
        }
    }
}

/// Which singular end a datum applies to.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TptEnd {
    Sin = 0,
    Cos = 1,
}

/// One bound state; `sign` is -1 for negative energy (`magnitude = κ/α`)
/// and +1 for positive energy (`magnitude = k/α`).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TptLevel {
    pub index: usize,
    pub sign: i32,
    pub magnitude: f64,
    pub residual: f64,
}

/// Potential plus boundary data.
pub struct TptProblem {
    spec: PotentialSpec,
    renorm: RenormData,
}

/// Result of a spectral scan.
pub struct TptSpectrum {
    report: SpectrumReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), (TptStatus, String)> + UnwindSafe) -> TptStatus {
    match catch_unwind(f) {
        Ok(Ok(())) => TptStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside tpt".into());
            TptStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (TptStatus, String) {
    (TptStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (TptStatus, String) {
    (TptStatus::NullPointer, format!("{what} is null"))
}

fn default_datum(nu: NuValue) -> EndDatum {
    match nu.kind {
        NuKind::RealPositive => EndDatum::FixedPointUV,
        NuKind::Imaginary => EndDatum::phase(0.0),
        NuKind::Zero => EndDatum::critical(0.0, 0.0),
    }
}

/// Creates a problem with default data: UV points at real-ν ends, phase 0 at
/// attractive ends, `D = 0` on the critical line.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn tpt_problem_new(alpha: f64, g_s: f64, g_c: f64, out: *mut *mut TptProblem) -> TptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = PotentialSpec::new(alpha, g_s, g_c).map_err(lib_err)?;
        let renorm = RenormData::new(default_datum(spec.nu_s()), default_datum(spec.nu_c()));
        *out = Box::into_raw(Box::new(TptProblem { spec, renorm }));
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a handle from [`tpt_problem_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tpt_problem_free(problem: *mut TptProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

unsafe fn set_datum(problem: *mut TptProblem, end: TptEnd, datum: EndDatum) -> TptStatus {
    guard(|| {
        let p = problem.as_mut().ok_or_else(|| null("problem"))?;
        let mut renorm = p.renorm;
        match end {
            TptEnd::Sin => renorm.s = datum,
            TptEnd::Cos => renorm.c = datum,
        }
        renorm.validate(&p.spec).map_err(lib_err)?;
        p.renorm = renorm;
        Ok(())
    })
}

/// UV (`ir = false`) or IR fixed point at a real-ν end.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tpt_problem_set_fixed_point(problem: *mut TptProblem, end: TptEnd, ir: bool) -> TptStatus {
    let datum = if ir {
        EndDatum::FixedPointIR
    } else {
        EndDatum::FixedPointUV
    };
    set_datum(problem, end, datum)
}

/// Scale datum from `ε(αL)^{2ν}` at a weak-medium end.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tpt_problem_set_scale(problem: *mut TptProblem, end: TptEnd, scale_term: f64) -> TptStatus {
    let Some(p) = problem.as_ref() else {
        return guard(|| Err(null("problem")));
    };
    let nu = match end {
        TptEnd::Sin => p.spec.nu_s(),
        TptEnd::Cos => p.spec.nu_c(),
    };
    match EndDatum::from_scale_term(scale_term, nu.magnitude, p.spec.alpha) {
        Ok(d) => set_datum(problem, end, d),
        Err(e) => guard(|| Err(lib_err(e))),
    }
}

/// Phase `θ` at a strongly attractive end.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tpt_problem_set_phase(problem: *mut TptProblem, end: TptEnd, theta: f64) -> TptStatus {
    set_datum(problem, end, EndDatum::phase(theta))
}

/// `(D, θ)` at a critical end.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tpt_problem_set_critical(
    problem: *mut TptProblem,
    end: TptEnd,
    d: f64,
    theta: f64,
) -> TptStatus {
    set_datum(problem, end, EndDatum::critical(d, theta))
}

/// Scans `k/α` and `κ/α` in `[lo, hi]` with the default grid.
///
/// # Safety
/// `problem` must be a live handle and `out` valid for one handle.
#[no_mangle]
pub unsafe extern "C" fn tpt_spectrum_solve(
    problem: *const TptProblem,
    lo: f64,
    hi: f64,
    out: *mut *mut TptSpectrum,
) -> TptStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = ScanConfig::with_window(lo, hi);
        let report = solve_spectrum(&p.spec, &p.renorm, &cfg).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(TptSpectrum { report }));
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be null or a handle from [`tpt_spectrum_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tpt_spectrum_free(spectrum: *mut TptSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Number of levels; 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tpt_spectrum_len(spectrum: *const TptSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.report.levels.len())
}

/// Level `i` in the solver's order: negative branch deepest first, then
/// positive ascending.
///
/// # Safety
/// `spectrum` must be a live handle and `out` valid for one `TptLevel`.
#[no_mangle]
pub unsafe extern "C" fn tpt_spectrum_level(spectrum: *const TptSpectrum, i: usize, out: *mut TptLevel) -> TptStatus {
    guard(|| {
        let s = spectrum.as_ref().ok_or_else(|| null("spectrum"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let l = s.report.levels.get(i).ok_or_else(|| {
            (
                TptStatus::IndexOutOfRange,
                format!("level {i} of {}", s.report.levels.len()),
            )
        })?;
        *out = TptLevel {
            index: l.index,
            sign: match l.point.sign {
                EnergySign::Negative => -1,
                EnergySign::Positive => 1,
            },
            magnitude: l.point.magnitude,
            residual: l.residual_at_root,
        };
        Ok(())
    })
}

/// Finite-element eigenvalues `E/α²` in `[lo, hi)`, written to `buf`.
/// `len` receives the count; if it exceeds `cap`, nothing is written and
/// the status is `BUFFER_TOO_SMALL`.
///
/// # Safety
/// `problem` must be a live handle, `buf` valid for `cap` doubles (or null
/// with `cap = 0`), and `len` valid for one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn tpt_oracle_levels(
    problem: *const TptProblem,
    lo: f64,
    hi: f64,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> TptStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let len = len.as_mut().ok_or_else(|| null("len"))?;
        let prob = RegulatedProblem::auto(&p.spec, &p.renorm).map_err(lib_err)?;
        let levels = eigen_window(&prob, lo, hi).map_err(lib_err)?;
        *len = levels.len();
        if levels.len() > cap {
            return Err((
                TptStatus::BufferTooSmall,
                format!("need {} slots, got {cap}", levels.len()),
            ));
        }
        if buf.is_null() && !levels.is_empty() {
            return Err(null("buf"));
        }
        for (j, l) in levels.iter().enumerate() {
            *buf.add(j) = l.lambda;
        }
        Ok(())
    })
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tpt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn tpt_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"",
    };
    VERSION.as_ptr()
}
