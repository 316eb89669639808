//! C interface to the `choquard` library.
//!
//! Models and solutions are opaque handles created and destroyed through this
//! API. Every fallible function returns a [`ChoquardStatus`]; the message of the
//! most recent failure on the calling thread is available from
//! [`choquard_last_error`].

use choquard::config::MassSpec;
use choquard::discretization::build_riesz_kernel;
use choquard::io::{read_solution, write_solution, Provenance};
use choquard::model::{classify_regime, ModelParams, Regime, SharpConstants};
use choquard::solvers::{
    excited_grid, ground_grid, solve_excited, solve_ground, Branch, RadialGridConfig,
    SolutionRecord, SolverConfig,
};
use choquard::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChoquardStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Regime = 3,
    Numerical = 4,
    MissingArtifact = 5,
    Io = 6,
    Panic = 7,
}

/// Problem parameters with their sharp constants.
pub struct ChoquardModel {
    params: ModelParams,
    consts: SharpConstants,
    solver: SolverConfig,
}

/// A converged or partially converged standing wave.
pub struct ChoquardSolution {
    record: SolutionRecord,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ChoquardConstants {
    pub a_alpha: f64,
    pub c_alpha: f64,
    pub s: f64,
    pub s_alpha: f64,
    pub c_nq: f64,
    pub k: f64,
    pub rho0: f64,
    pub a0: f64,
    pub bubble_level: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ChoquardSummary {
    /// 0 for the ground state, 1 for the second solution.
    pub branch: i32,
    pub converged: bool,
    pub lambda: f64,
    pub energy: f64,
    pub grad_sq: f64,
    pub pohozaev: f64,
    pub residual: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
    pub iterations: usize,
    pub nodes: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> ChoquardStatus {
    match e {
        Error::Validation { .. } | Error::Config(_) | Error::Domain(_) | Error::Unsupported(_) => {
            ChoquardStatus::InvalidArgument
        }
        Error::Regime(_) => ChoquardStatus::Regime,
        Error::MissingArtifact(_) => ChoquardStatus::MissingArtifact,
        Error::Io(_) | Error::Json(_) => ChoquardStatus::Io,
        _ => ChoquardStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (ChoquardStatus, String)>) -> ChoquardStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ChoquardStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ChoquardStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, (ChoquardStatus, String)>;
}

impl<T> OrStatus<T> for choquard::Result<T> {
    fn or_status(self) -> Result<T, (ChoquardStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (ChoquardStatus, String) {
    (ChoquardStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failure on this thread; empty if none. Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn choquard_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn choquard_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn model_new(
    n: u32,
    alpha: f64,
    mu: f64,
    q: f64,
    mass: MassSpec,
) -> choquard::Result<ChoquardModel> {
    let base = ModelParams::new(n as usize, alpha, mu, 1.0, q)?;
    let consts = SharpConstants::compute(&base)?;
    let params = ModelParams::new(n as usize, alpha, mu, mass.resolve(&consts), q)?;
    Ok(ChoquardModel {
        params,
        consts,
        solver: SolverConfig::default(),
    })
}

/// Builds a model with mass `a`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn choquard_model_new(
    n: u32,
    alpha: f64,
    mu: f64,
    a: f64,
    q: f64,
    out: *mut *mut ChoquardModel,
) -> ChoquardStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = model_new(n, alpha, mu, q, MassSpec::Absolute(a)).or_status()?;
        *out = Box::into_raw(Box::new(m));
        Ok(())
    })
}

/// Builds a model with mass `fraction·a₀`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn choquard_model_new_fraction(
    n: u32,
    alpha: f64,
    mu: f64,
    fraction: f64,
    q: f64,
    out: *mut *mut ChoquardModel,
) -> ChoquardStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(fraction > 0.0 && fraction.is_finite()) {
            return Err((
                ChoquardStatus::InvalidArgument,
                format!("fraction must be positive, got {fraction}"),
            ));
        }
        let m = model_new(n, alpha, mu, q, MassSpec::OfA0(fraction)).or_status()?;
        *out = Box::into_raw(Box::new(m));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a pointer returned by a `choquard_model_new*` function, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn choquard_model_free(model: *mut ChoquardModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live model handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn choquard_model_mass(
    model: *const ChoquardModel,
    out: *mut f64,
) -> ChoquardStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = m.params.a;
        Ok(())
    })
}

/// # Safety
/// `model` must be a live model handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn choquard_model_constants(
    model: *const ChoquardModel,
    out: *mut ChoquardConstants,
) -> ChoquardStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let c = &m.consts;
        *out = ChoquardConstants {
            a_alpha: c.a_alpha,
            c_alpha: c.c_alpha,
            s: c.s,
            s_alpha: c.s_alpha,
            c_nq: c.c_nq,
            k: c.k,
            rho0: c.rho0,
            a0: c.a0,
            bubble_level: c.bubble_level(&m.params),
        };
        Ok(())
    })
}

/// Writes 1, 2 or 3 for the regimes Omega1, Omega2, Omega3.
///
/// # Safety
/// `model` must be a live model handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn choquard_model_regime(
    model: *const ChoquardModel,
    out: *mut i32,
) -> ChoquardStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = match classify_regime(&m.params, &m.consts).regime {
            Regime::Omega1 => 1,
            Regime::Omega2 => 2,
            Regime::Omega3 => 3,
        };
        Ok(())
    })
}

/// # Safety
/// `model` must be a live model handle and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn choquard_solve_ground(
    model: *const ChoquardModel,
    out: *mut *mut ChoquardSolution,
) -> ChoquardStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = ground_grid(&m.params, &m.consts, &RadialGridConfig::ground()).or_status()?;
        let kernel = build_riesz_kernel(&grid, m.params.alpha).or_status()?;
        let record = solve_ground(&m.params, &m.consts, &kernel, &m.solver).or_status()?;
        *out = Box::into_raw(Box::new(ChoquardSolution { record }));
        Ok(())
    })
}

/// # Safety
/// `model` and `ground` must be live handles and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn choquard_solve_excited(
    model: *const ChoquardModel,
    ground: *const ChoquardSolution,
    out: *mut *mut ChoquardSolution,
) -> ChoquardStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let g = ground.as_ref().ok_or_else(|| null("ground"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = excited_grid(&m.params, &RadialGridConfig::excited()).or_status()?;
        let kernel = build_riesz_kernel(&grid, m.params.alpha).or_status()?;
        let record =
            solve_excited(&m.params, &m.consts, &kernel, &m.solver, &g.record).or_status()?;
        *out = Box::into_raw(Box::new(ChoquardSolution { record }));
        Ok(())
    })
}

/// # Safety
/// `solution` must be null or a pointer returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn choquard_solution_free(solution: *mut ChoquardSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// # Safety
/// `solution` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn choquard_solution_summary(
    solution: *const ChoquardSolution,
    out: *mut ChoquardSummary,
) -> ChoquardStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = &s.record;
        *out = ChoquardSummary {
            branch: match r.branch {
                Branch::Ground => 0,
                Branch::Excited => 1,
            },
            converged: r.converged,
            lambda: r.lambda,
            energy: r.breakdown.total,
            grad_sq: 2.0 * r.breakdown.kinetic,
            pohozaev: r.breakdown.pohozaev,
            residual: r.residual,
            tau_plus: r.fiber.tau_plus,
            tau_minus: r.fiber.tau_minus,
            iterations: r.iterations + r.newton_iterations,
            nodes: r.u.grid.len(),
        };
        Ok(())
    })
}

/// Copies the nodes and profile values into `r` and `u`, each with room for `capacity` doubles.
///
/// # Safety
/// `solution` must be a live handle; `r` and `u` must each point to `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn choquard_solution_profile(
    solution: *const ChoquardSolution,
    r: *mut f64,
    u: *mut f64,
    capacity: usize,
) -> ChoquardStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        if r.is_null() || u.is_null() {
            return Err(null("output buffer"));
        }
        let field = &s.record.u;
        let len = field.grid.len();
        if capacity < len {
            return Err((
                ChoquardStatus::InvalidArgument,
                format!("capacity {capacity} below {len} nodes"),
            ));
        }
        std::ptr::copy_nonoverlapping(field.grid.nodes().as_ptr(), r, len);
        std::ptr::copy_nonoverlapping(field.values.as_ptr(), u, len);
        Ok(())
    })
}

unsafe fn path_arg<'a>(dir: *const c_char) -> Result<&'a Path, (ChoquardStatus, String)> {
    if dir.is_null() {
        return Err(null("dir"));
    }
    CStr::from_ptr(dir).to_str().map(Path::new).map_err(|_| {
        (
            ChoquardStatus::InvalidArgument,
            "dir is not valid UTF-8".to_string(),
        )
    })
}

/// Writes the solution directory (`profile.csv`, `fiber.csv`, `meta.json`).
///
/// # Safety
/// `solution` must be a live handle and `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn choquard_solution_save(
    solution: *const ChoquardSolution,
    dir: *const c_char,
) -> ChoquardStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        let path = path_arg(dir)?;
        write_solution(path, &s.record, &Provenance::from_config_text("")).or_status()
    })
}

/// Reads a solution directory written by `choquard_solution_save` or the CLI.
///
/// # Safety
/// `dir` must be a NUL-terminated path and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn choquard_solution_load(
    dir: *const c_char,
    out: *mut *mut ChoquardSolution,
) -> ChoquardStatus {
    guard(|| {
        let path = path_arg(dir)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (record, _) = read_solution(path).or_status()?;
        *out = Box::into_raw(Box::new(ChoquardSolution { record }));
        Ok(())
    })
}
