//! C ABI over the `dgmem` solver.
//!
//! Every object crosses the boundary as an opaque handle created by a
//! `*_new`/`dgmem_solve`/`dgmem_run_convergence` call and released by the
//! matching `*_free`. Fallible calls return a [`DgmemStatus`]; the message of
//! the most recent failure on the calling thread is available through
//! [`dgmem_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dgmem::analysis::{error_norms, run_convergence, ConvergenceOptions, ConvergenceReport, ErrorMode};
use dgmem::cli::registry;
use dgmem::dg::{solve, DiscreteSolution, Problem, SolverOptions, TimeMesh};
use dgmem::kernel::{norm_continuous, norm_discrete, NormOptions};
use dgmem::space_fem::SpaceMesh1D;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgmemStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownExample = 3,
    SolverFailure = 4,
    OutOfRange = 5,
    NoExactSolution = 6,
    Panic = 7,
}

/// Problem definition (kernel, operator, data).
pub struct DgmemProblem {
    inner: Problem,
}

/// Discrete space-time solution.
pub struct DgmemSolution {
    inner: DiscreteSolution,
}

/// Rows of a convergence study.
pub struct DgmemReport {
    inner: ConvergenceReport,
}

/// One row of a convergence study. Missing rates are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgmemRow {
    pub n: usize,
    pub m: usize,
    pub e_sup: f64,
    pub rate_sup: f64,
    pub e_l2rho: f64,
    pub rate_l2rho: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let mut s = msg.into().into_bytes();
    s.retain(|&b| b != 0);
    let c = CString::new(s).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: DgmemStatus, msg: impl Into<String>) -> DgmemStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> DgmemStatus) -> DgmemStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            fail(DgmemStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn opt_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, DgmemStatus> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| fail(DgmemStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn solver_options() -> SolverOptions {
    SolverOptions {
        coercivity_check: false,
        ..SolverOptions::default()
    }
}

/// Message of the last failed call on this thread, or NULL.
///
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn dgmem_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dgmem_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a registered example (`ex1`, `ex2`, `ex3`, `zero`, `custom`).
///
/// `kernel` may be NULL to keep the example's kernel. On success `*out`
/// receives a handle to release with [`dgmem_problem_free`].
///
/// # Safety
/// `example` must be a NUL-terminated string, `kernel` NULL or one, and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dgmem_problem_new(
    example: *const c_char,
    kernel: *const c_char,
    t_end: f64,
    out: *mut *mut DgmemProblem,
) -> DgmemStatus {
    guard(|| {
        if example.is_null() || out.is_null() {
            return fail(DgmemStatus::NullPointer, "example and out must not be NULL");
        }
        *out = ptr::null_mut();
        let id = match opt_str(example, "example") {
            Ok(Some(s)) => s,
            Ok(None) => unreachable!(),
            Err(s) => return s,
        };
        let kernel = match opt_str(kernel, "kernel") {
            Ok(k) => k,
            Err(s) => return s,
        };
        if !(t_end.is_finite() && t_end > 0.0) {
            return fail(DgmemStatus::InvalidArgument, format!("t_end must be positive, got {t_end}"));
        }
        match registry(id, kernel, t_end) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(DgmemProblem { inner: p }));
                DgmemStatus::Ok
            }
            Err(e) => {
                let status = if dgmem::cli::EXAMPLES.contains(&id) {
                    DgmemStatus::InvalidArgument
                } else {
                    DgmemStatus::UnknownExample
                };
                fail(status, e.to_string())
            }
        }
    })
}

/// Releases a problem. NULL is ignored.
///
/// # Safety
/// `problem` must come from [`dgmem_problem_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn dgmem_problem_free(problem: *mut DgmemProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of solution components of a problem (0 for NULL).
///
/// # Safety
/// `problem` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dgmem_problem_components(problem: *const DgmemProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.inner.n)
}

/// Solves on `cells` uniform spatial cells and `intervals` uniform time
/// intervals with spatial degree `k`, temporal degree `q` and weight `rho`.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dgmem_solve(
    problem: *const DgmemProblem,
    k: usize,
    q: usize,
    cells: usize,
    intervals: usize,
    rho: f64,
    out: *mut *mut DgmemSolution,
) -> DgmemStatus {
    guard(|| {
        let (Some(p), false) = (problem.as_ref(), out.is_null()) else {
            return fail(DgmemStatus::NullPointer, "problem and out must not be NULL");
        };
        *out = ptr::null_mut();
        if k == 0 || cells == 0 || intervals == 0 {
            return fail(DgmemStatus::InvalidArgument, "k, cells and intervals must be positive");
        }
        let mesh = match TimeMesh::uniform(p.inner.t_end, intervals, rho, q) {
            Ok(m) => m,
            Err(e) => return fail(DgmemStatus::InvalidArgument, e.to_string()),
        };
        let space = match SpaceMesh1D::uniform(cells) {
            Ok(s) => s,
            Err(e) => return fail(DgmemStatus::InvalidArgument, e.to_string()),
        };
        match solve(&p.inner, &mesh, &space, k, &solver_options()) {
            Ok(sol) => {
                *out = Box::into_raw(Box::new(DgmemSolution { inner: sol }));
                DgmemStatus::Ok
            }
            Err(e) => fail(DgmemStatus::SolverFailure, e.to_string()),
        }
    })
}

/// Releases a solution. NULL is ignored.
///
/// # Safety
/// `solution` must come from [`dgmem_solve`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn dgmem_solution_free(solution: *mut DgmemSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Writes the `n` components of `U(t, x)` (left limit in time) to `values`.
///
/// # Safety
/// `solution` must be a live handle and `values` point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dgmem_solution_eval(
    solution: *const DgmemSolution,
    t: f64,
    x: f64,
    values: *mut f64,
    len: usize,
) -> DgmemStatus {
    guard(|| {
        let Some(s) = solution.as_ref() else {
            return fail(DgmemStatus::NullPointer, "solution must not be NULL");
        };
        if values.is_null() {
            return fail(DgmemStatus::NullPointer, "values must not be NULL");
        }
        let v = match s.inner.eval(t, x) {
            Ok(v) => v,
            Err(e) => return fail(DgmemStatus::OutOfRange, e.to_string()),
        };
        if len < v.len() {
            return fail(
                DgmemStatus::InvalidArgument,
                format!("buffer holds {len} values, {} required", v.len()),
            );
        }
        std::slice::from_raw_parts_mut(values, v.len()).copy_from_slice(&v);
        DgmemStatus::Ok
    })
}

/// Errors of `solution` against the exact solution of `problem`.
///
/// # Safety
/// Both handles must be live and the output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn dgmem_error_norms(
    solution: *const DgmemSolution,
    problem: *const DgmemProblem,
    refinement: usize,
    e_sup: *mut f64,
    e_l2rho: *mut f64,
) -> DgmemStatus {
    guard(|| {
        let (Some(s), Some(p)) = (solution.as_ref(), problem.as_ref()) else {
            return fail(DgmemStatus::NullPointer, "solution and problem must not be NULL");
        };
        if e_sup.is_null() || e_l2rho.is_null() {
            return fail(DgmemStatus::NullPointer, "output pointers must not be NULL");
        }
        let Some(exact) = p.inner.exact() else {
            return fail(
                DgmemStatus::NoExactSolution,
                format!("problem '{}' has no exact solution", p.inner.name),
            );
        };
        match error_norms(&s.inner, exact, refinement) {
            Ok(e) => {
                *e_sup = e.e_sup;
                *e_l2rho = e.e_l2rho;
                DgmemStatus::Ok
            }
            Err(e) => fail(DgmemStatus::SolverFailure, e.to_string()),
        }
    })
}

/// Runs a convergence study on `N = M = levels[i]`.
///
/// With `reference` nonzero errors are measured against a finer solve
/// instead of the exact solution.
///
/// # Safety
/// `problem` must be a live handle, `levels` point to `count` values and
/// `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn dgmem_run_convergence(
    problem: *const DgmemProblem,
    k: usize,
    q: usize,
    levels: *const usize,
    count: usize,
    rho: f64,
    reference: bool,
    out: *mut *mut DgmemReport,
) -> DgmemStatus {
    guard(|| {
        let (Some(p), false, false) = (problem.as_ref(), levels.is_null(), out.is_null()) else {
            return fail(DgmemStatus::NullPointer, "problem, levels and out must not be NULL");
        };
        *out = ptr::null_mut();
        if k == 0 {
            return fail(DgmemStatus::InvalidArgument, "k must be positive");
        }
        let levels = std::slice::from_raw_parts(levels, count);
        let opts = ConvergenceOptions {
            solver: solver_options(),
            rho,
            t_end: p.inner.t_end,
            mode: if reference { ErrorMode::Reference } else { ErrorMode::Exact },
            ..ConvergenceOptions::default()
        };
        match run_convergence(&p.inner, k, q, levels, &opts) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(DgmemReport { inner: r }));
                DgmemStatus::Ok
            }
            Err(dgmem::analysis::AnalysisError::NoExactSolution(name)) => fail(
                DgmemStatus::NoExactSolution,
                format!("problem '{name}' has no exact solution"),
            ),
            Err(e @ dgmem::analysis::AnalysisError::Levels(_)) => fail(DgmemStatus::InvalidArgument, e.to_string()),
            Err(e) => fail(DgmemStatus::SolverFailure, e.to_string()),
        }
    })
}

/// Number of rows of a report (0 for NULL).
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dgmem_report_rows(report: *const DgmemReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.rows.len())
}

/// Copies row `index` of a report.
///
/// # Safety
/// `report` must be a live handle and `row` valid.
#[no_mangle]
pub unsafe extern "C" fn dgmem_report_row(report: *const DgmemReport, index: usize, row: *mut DgmemRow) -> DgmemStatus {
    guard(|| {
        let (Some(r), false) = (report.as_ref(), row.is_null()) else {
            return fail(DgmemStatus::NullPointer, "report and row must not be NULL");
        };
        let Some(src) = r.inner.rows.get(index) else {
            return fail(
                DgmemStatus::OutOfRange,
                format!("row {index} requested, report has {}", r.inner.rows.len()),
            );
        };
        *row = DgmemRow {
            n: src.n,
            m: src.m,
            e_sup: src.e_sup,
            rate_sup: src.rate_sup.unwrap_or(f64::NAN),
            e_l2rho: src.e_l2rho,
            rate_l2rho: src.rate_l2rho.unwrap_or(f64::NAN),
        };
        DgmemStatus::Ok
    })
}

/// Releases a report. NULL is ignored.
///
/// # Safety
/// `report` must come from [`dgmem_run_convergence`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn dgmem_report_free(report: *mut DgmemReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Continuous and discrete weighted kernel norms of a problem's kernel on a
/// uniform mesh with `intervals` intervals and temporal degree `q`.
///
/// # Safety
/// `problem` must be a live handle and the output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn dgmem_kernel_norms(
    problem: *const DgmemProblem,
    rho: f64,
    intervals: usize,
    q: usize,
    continuous: *mut f64,
    discrete: *mut f64,
) -> DgmemStatus {
    guard(|| {
        let Some(p) = problem.as_ref() else {
            return fail(DgmemStatus::NullPointer, "problem must not be NULL");
        };
        if continuous.is_null() || discrete.is_null() {
            return fail(DgmemStatus::NullPointer, "output pointers must not be NULL");
        }
        let mesh = match TimeMesh::uniform(p.inner.t_end, intervals, rho, q) {
            Ok(m) => m,
            Err(e) => return fail(DgmemStatus::InvalidArgument, e.to_string()),
        };
        let opts = NormOptions::default();
        *continuous = norm_continuous(&p.inner.kernel, rho, p.inner.t_end, &opts).value;
        *discrete = norm_discrete(&p.inner.kernel, &mesh, &opts).value;
        DgmemStatus::Ok
    })
}
