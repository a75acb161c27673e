//! C ABI over the mcgraph solver.
//!
//! Objects cross the boundary as opaque handles created by the
//! `mcg_domain_*` constructors and `mcg_solve`, and released by the
//! matching `*_free`. Every fallible call
//! returns an `McgStatus`; the message of the most recent failure on the
//! calling thread is available from `mcg_last_error`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mcgraph::boundary_data::BoundaryData;
use mcgraph::estimates;
use mcgraph::geometry::{check_serrin, DomainSpec, Point, PrescribedCurvature};
use mcgraph::grid::Grid;
use mcgraph::harness;
use mcgraph::scenario::Scenario;
use mcgraph::solver::{solve_dirichlet, Problem, SolveConfig, SolveOutcome, Verdict};

/// Status codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Geometry = 3,
    Expression = 4,
    Config = 5,
    /// The solve ran but did not converge; the solution handle is still
    /// returned and its verdict says why.
    NotConverged = 6,
    BufferTooSmall = 7,
    Io = 8,
    Panic = 9,
}

/// Solver verdicts.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McgVerdict {
    Converged = 0,
    DivergedGradient = 1,
    Stagnated = 2,
    LinearFailure = 3,
}

impl From<Verdict> for McgVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Converged => McgVerdict::Converged,
            Verdict::DivergedGradient => McgVerdict::DivergedGradient,
            Verdict::Stagnated => McgVerdict::Stagnated,
            Verdict::LinearFailure => McgVerdict::LinearFailure,
        }
    }
}

/// Opaque planar domain.
pub struct McgDomain(DomainSpec);

/// Opaque converged (or last) iterate of a solve.
pub struct McgSolution(SolveOutcome);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

fn fail(status: McgStatus, msg: impl Into<String>) -> McgStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning a panic into `McgStatus::Panic`.
fn guard<F: FnOnce() -> McgStatus>(f: F) -> McgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == McgStatus::Ok {
                set_error("");
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(McgStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, McgStatus> {
    if p.is_null() {
        return Err(fail(McgStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(McgStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn store<T>(out: *mut *mut T, value: T) {
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

fn domain_result(out: *mut *mut McgDomain, d: Result<DomainSpec, mcgraph::geometry::GeometryError>) -> McgStatus {
    if out.is_null() {
        return fail(McgStatus::NullPointer, "out is null");
    }
    unsafe { *out = ptr::null_mut() };
    match d {
        Ok(d) => {
            store(out, McgDomain(d));
            McgStatus::Ok
        }
        Err(e) => fail(McgStatus::Geometry, e.to_string()),
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn mcg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mcg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn mcg_domain_disk(cx: f64, cy: f64, radius: f64, out: *mut *mut McgDomain) -> McgStatus {
    guard(|| domain_result(out, DomainSpec::disk(Point::new(cx, cy), radius)))
}

#[no_mangle]
pub extern "C" fn mcg_domain_ellipse(cx: f64, cy: f64, a: f64, b: f64, out: *mut *mut McgDomain) -> McgStatus {
    guard(|| domain_result(out, DomainSpec::ellipse(Point::new(cx, cy), a, b)))
}

#[no_mangle]
pub extern "C" fn mcg_domain_rounded_rect(
    cx: f64,
    cy: f64,
    half_width: f64,
    half_height: f64,
    corner_radius: f64,
    out: *mut *mut McgDomain,
) -> McgStatus {
    guard(|| domain_result(out, DomainSpec::rounded_rect(Point::new(cx, cy), half_width, half_height, corner_radius)))
}

/// Cassini oval with a concave neck; needs 0 < c < b < √2·c.
#[no_mangle]
pub extern "C" fn mcg_domain_dumbbell(c: f64, b: f64, out: *mut *mut McgDomain) -> McgStatus {
    guard(|| domain_result(out, DomainSpec::dumbbell(c, b)))
}

/// The component of {f < 0} containing the seed, inside a box of half
/// side `extent` around it.
///
/// # Safety
/// `expression` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mcg_domain_level_set(
    expression: *const c_char,
    seed_x: f64,
    seed_y: f64,
    extent: f64,
    out: *mut *mut McgDomain,
) -> McgStatus {
    guard(|| {
        let src = match str_arg(expression, "expression") {
            Ok(s) => s,
            Err(s) => return s,
        };
        domain_result(out, DomainSpec::level_set(src, Point::new(seed_x, seed_y), extent))
    })
}

/// # Safety
/// `domain` must come from an `mcg_domain_*` constructor and not be freed
/// twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mcg_domain_free(domain: *mut McgDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// Serrin margin min over ∂Ω of (n−1)κ − n|H| for constant H; `satisfied`
/// is set to 1 or 0. Either output may be null.
///
/// # Safety
/// `domain` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcg_check_serrin(
    domain: *const McgDomain,
    curvature: f64,
    n: u32,
    margin: *mut f64,
    satisfied: *mut i32,
) -> McgStatus {
    guard(|| {
        let Some(d) = domain.as_ref() else {
            return fail(McgStatus::NullPointer, "domain is null");
        };
        if n < 2 || !curvature.is_finite() {
            return fail(McgStatus::InvalidArgument, "need n >= 2 and finite curvature");
        }
        let a = check_serrin(&d.0, &PrescribedCurvature::constant(curvature), n as usize);
        if !margin.is_null() {
            *margin = a.margin;
        }
        if !satisfied.is_null() {
            *satisfied = a.satisfied as i32;
        }
        McgStatus::Ok
    })
}

/// A priori bound on sup|u| given sup|u| over ∂Ω.
///
/// # Safety
/// `domain` must be a live handle and `bound` writable.
#[no_mangle]
pub unsafe extern "C" fn mcg_height_bound(
    domain: *const McgDomain,
    curvature: f64,
    n: u32,
    boundary_sup: f64,
    bound: *mut f64,
) -> McgStatus {
    guard(|| {
        let (Some(d), false) = (domain.as_ref(), bound.is_null()) else {
            return fail(McgStatus::NullPointer, "domain or bound is null");
        };
        if n < 2 || !curvature.is_finite() || !(boundary_sup >= 0.0) {
            return fail(McgStatus::InvalidArgument, "need n >= 2, finite curvature and boundary_sup >= 0");
        }
        *bound = estimates::height_bound(&d.0, &PrescribedCurvature::constant(curvature), n as usize, boundary_sup).0;
        McgStatus::Ok
    })
}

/// Solves for constant H with Dirichlet data given as an expression in x
/// and y (null means zero data) on a grid of spacing `h`, using the default
/// solver settings. On `Ok` or `NotConverged`, `*out` holds a solution
/// handle; on any other status it is null.
///
/// # Safety
/// `domain` must be a live handle, `data` null or NUL-terminated, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mcg_solve(
    domain: *const McgDomain,
    curvature: f64,
    data: *const c_char,
    h: f64,
    out: *mut *mut McgSolution,
) -> McgStatus {
    guard(|| {
        if out.is_null() {
            return fail(McgStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let Some(d) = domain.as_ref() else {
            return fail(McgStatus::NullPointer, "domain is null");
        };
        if !curvature.is_finite() {
            return fail(McgStatus::InvalidArgument, "curvature must be finite");
        }
        let data = if data.is_null() {
            BoundaryData::Zero
        } else {
            let src = match str_arg(data, "data") {
                Ok(s) => s,
                Err(s) => return s,
            };
            match BoundaryData::expression(src) {
                Ok(b) => b,
                Err(e) => return fail(McgStatus::Expression, e.to_string()),
            }
        };
        let grid = match Grid::build(&d.0, h) {
            Ok(g) => g,
            Err(e) => return fail(McgStatus::InvalidArgument, e.to_string()),
        };
        let problem = Problem {
            domain: d.0.clone(),
            curvature: PrescribedCurvature::constant(curvature),
            data,
            n: 2,
        };
        let outcome = solve_dirichlet(&problem, &grid, &SolveConfig::default());
        let converged = outcome.report.converged();
        let message = outcome.report.message.clone().unwrap_or_else(|| outcome.report.verdict.label().to_string());
        store(out, McgSolution(outcome));
        if converged {
            McgStatus::Ok
        } else {
            fail(McgStatus::NotConverged, message)
        }
    })
}

/// # Safety
/// `solution` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcg_solution_verdict(solution: *const McgSolution) -> McgVerdict {
    match solution.as_ref() {
        Some(s) => s.0.report.verdict.into(),
        None => McgVerdict::LinearFailure,
    }
}

/// Total Picard iterations over all continuation stages; 0 for null.
///
/// # Safety
/// `solution` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mcg_solution_iterations(solution: *const McgSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.0.report.iterations.len())
}

/// Number of interior grid nodes; 0 for null.
///
/// # Safety
/// `solution` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mcg_solution_node_count(solution: *const McgSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.0.field.grid.interior.len())
}

/// Copies node coordinates and values into caller buffers of length `len`
/// (any of them may be null to skip). Returns `BufferTooSmall` when `len`
/// is below the node count.
///
/// # Safety
/// Non-null buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mcg_solution_nodes(
    solution: *const McgSolution,
    xs: *mut f64,
    ys: *mut f64,
    values: *mut f64,
    len: usize,
) -> McgStatus {
    guard(|| {
        let Some(s) = solution.as_ref() else {
            return fail(McgStatus::NullPointer, "solution is null");
        };
        let u = &s.0.field;
        let g = &u.grid;
        if len < g.interior.len() {
            return fail(
                McgStatus::BufferTooSmall,
                format!("need {} entries, got {len}", g.interior.len()),
            );
        }
        for (i, &k) in g.interior.iter().enumerate() {
            let p = g.position(k);
            if !xs.is_null() {
                *xs.add(i) = p.x;
            }
            if !ys.is_null() {
                *ys.add(i) = p.y;
            }
            if !values.is_null() {
                *values.add(i) = u.values[k];
            }
        }
        McgStatus::Ok
    })
}

/// sup|u| over interior nodes; NaN for null.
///
/// # Safety
/// `solution` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mcg_solution_sup(solution: *const McgSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.0.field.sup_norm())
}

/// # Safety
/// `solution` must come from `mcg_solve` and not be freed twice. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn mcg_solution_free(solution: *mut McgSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Runs a scenario given as config text and writes its artifacts to
/// `out_dir`, as the `run` command does. `exit_code` receives the command's
/// exit code (0 ok, 2 solver failure, 3 audit failure).
///
/// # Safety
/// `config` and `out_dir` must be NUL-terminated; `exit_code` writable or
/// null.
#[no_mangle]
pub unsafe extern "C" fn mcg_run_config(config: *const c_char, out_dir: *const c_char, exit_code: *mut i32) -> McgStatus {
    guard(|| {
        let text = match str_arg(config, "config") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let dir = match str_arg(out_dir, "out_dir") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let scenario = match Scenario::parse(text) {
            Ok(s) => s,
            Err(e) => return fail(McgStatus::Config, e.to_string()),
        };
        let (report, fields) = match harness::execute(&scenario, text, None) {
            Ok(r) => r,
            Err(e) => return fail(McgStatus::Config, e.to_string()),
        };
        if let Err(e) = harness::write_artifacts(Path::new(dir), &report, &fields) {
            return fail(McgStatus::Io, e.to_string());
        }
        if !exit_code.is_null() {
            *exit_code = report.exit_code;
        }
        McgStatus::Ok
    })
}
