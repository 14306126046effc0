//! C ABI for `surf-rd`.
//!
//! Objects cross the boundary as opaque handles returned through
//! out-pointers and released with the matching `srd_*_free`. Every fallible
//! call returns an [`SrdStatus`]; on failure `srd_last_error` describes the
//! most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use surf_rd::analysis::rayleigh_quotient;
use surf_rd::assembly::FemOperators;
use surf_rd::cli::runner::{simulate_observed, CliError, RunOutcome, RunSettings};
use surf_rd::cli::{preset, Experiment};
use surf_rd::kinetics::max_stable_timestep;
use surf_rd::mesh::{generate_fibonacci_delaunay, generate_icosphere, read_off, validate, SurfaceMesh};
use surf_rd::timestepper::{MassMode, RunStatus, TimestepError};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    MeshError = 3,
    SolverError = 4,
    BufferTooSmall = 5,
    Internal = 6,
}

/// Mass matrix used by a run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrdMethod {
    /// Consistent mass.
    Sfem = 0,
    /// Lumped mass.
    Lsfem = 1,
}

/// Triangulated closed surface.
pub struct SrdMesh {
    mesh: SurfaceMesh,
}

/// Stiffness, lumped mass and consistent mass of a mesh.
pub struct SrdOperators {
    ops: FemOperators,
}

/// Finished simulation.
pub struct SrdRun {
    outcome: RunOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: SrdStatus, msg: impl Into<String>) -> SrdStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning panics into [`SrdStatus::Internal`].
fn guard(f: impl FnOnce() -> SrdStatus) -> SrdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(SrdStatus::Internal, "internal panic"),
    }
}

fn boxed<T>(value: T, out: *mut *mut T) -> SrdStatus {
    // SAFETY: callers check `out` for null before building the value.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    SrdStatus::Ok
}

fn cli_status(e: &CliError) -> SrdStatus {
    match e {
        CliError::Timestep(TimestepError::Solver { .. }) => SrdStatus::SolverError,
        CliError::Mesh(_) | CliError::InvalidMesh(_) => SrdStatus::MeshError,
        CliError::Config(_) | CliError::Timestep(_) => SrdStatus::InvalidArgument,
        _ => SrdStatus::Internal,
    }
}

fn experiment_from(id: u32) -> Option<Experiment> {
    match id {
        1 => Some(Experiment::Exp1),
        2 => Some(Experiment::Exp2),
        3 => Some(Experiment::Exp3),
        4 => Some(Experiment::Exp4),
        _ => None,
    }
}

/// Message for the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn srd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Icosphere with `level` subdivisions on the unit sphere.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn srd_mesh_icosphere(level: u32, out: *mut *mut SrdMesh) -> SrdStatus {
    guard(|| {
        if out.is_null() {
            return fail(SrdStatus::NullPointer, "out is null");
        }
        match generate_icosphere(level) {
            Ok(mesh) => boxed(SrdMesh { mesh }, out),
            Err(e) => fail(SrdStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Delaunay triangulation of `n_points` Fibonacci points on the unit sphere.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn srd_mesh_fibonacci(n_points: usize, out: *mut *mut SrdMesh) -> SrdStatus {
    guard(|| {
        if out.is_null() {
            return fail(SrdStatus::NullPointer, "out is null");
        }
        match generate_fibonacci_delaunay(n_points) {
            Ok(mesh) => boxed(SrdMesh { mesh }, out),
            Err(e) => fail(SrdStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Reads and validates an OFF file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer to
/// writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn srd_mesh_read_off(path: *const c_char, out: *mut *mut SrdMesh) -> SrdStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(SrdStatus::NullPointer, "path or out is null");
        }
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(SrdStatus::InvalidArgument, "path is not UTF-8");
        };
        let mesh = match read_off(path) {
            Ok(m) => m,
            Err(e) => return fail(SrdStatus::MeshError, e.to_string()),
        };
        let report = validate(&mesh);
        if !report.is_valid() {
            return fail(SrdStatus::MeshError, report.summary());
        }
        boxed(SrdMesh { mesh }, out)
    })
}

/// # Safety
/// `mesh` must be null or a handle from an `srd_mesh_*` constructor that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn srd_mesh_free(mesh: *mut SrdMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `mesh` must be null or a live mesh handle.
#[no_mangle]
pub unsafe extern "C" fn srd_mesh_n_vertices(mesh: *const SrdMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.n_vertices())
}

/// Number of triangles, or 0 for a null handle.
///
/// # Safety
/// `mesh` must be null or a live mesh handle.
#[no_mangle]
pub unsafe extern "C" fn srd_mesh_n_triangles(mesh: *const SrdMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.n_triangles())
}

/// Longest edge length, or NaN for a null handle.
///
/// # Safety
/// `mesh` must be null or a live mesh handle.
#[no_mangle]
pub unsafe extern "C" fn srd_mesh_size(mesh: *const SrdMesh) -> f64 {
    mesh.as_ref().map_or(f64::NAN, |m| m.mesh.mesh_size())
}

/// Copies vertex coordinates as `x0 y0 z0 x1 ...` into `xyz`, which holds
/// `len` doubles and needs at least `3 * n_vertices`.
///
/// # Safety
/// `mesh` must be a live mesh handle and `xyz` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn srd_mesh_vertices(mesh: *const SrdMesh, xyz: *mut f64, len: usize) -> SrdStatus {
    guard(|| {
        let (Some(m), false) = (mesh.as_ref(), xyz.is_null()) else {
            return fail(SrdStatus::NullPointer, "mesh or buffer is null");
        };
        let need = 3 * m.mesh.n_vertices();
        if len < need {
            return fail(SrdStatus::BufferTooSmall, format!("need {need} doubles, got {len}"));
        }
        let dst = std::slice::from_raw_parts_mut(xyz, need);
        for (chunk, p) in dst.chunks_exact_mut(3).zip(m.mesh.vertices()) {
            chunk.copy_from_slice(p);
        }
        SrdStatus::Ok
    })
}

/// Assembles the finite element matrices of `mesh`.
///
/// # Safety
/// `mesh` must be a live mesh handle and `out` a valid pointer to writable
/// storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn srd_operators_assemble(mesh: *const SrdMesh, out: *mut *mut SrdOperators) -> SrdStatus {
    guard(|| {
        let (Some(m), false) = (mesh.as_ref(), out.is_null()) else {
            return fail(SrdStatus::NullPointer, "mesh or out is null");
        };
        match FemOperators::assemble(&m.mesh) {
            Ok(ops) => boxed(SrdOperators { ops }, out),
            Err(e) => fail(SrdStatus::MeshError, e.to_string()),
        }
    })
}

/// # Safety
/// `ops` must be null or a live operators handle.
#[no_mangle]
pub unsafe extern "C" fn srd_operators_free(ops: *mut SrdOperators) {
    if !ops.is_null() {
        drop(Box::from_raw(ops));
    }
}

/// Sum of the lumped mass, i.e. the surface area.
///
/// # Safety
/// `ops` must be null or a live operators handle.
#[no_mangle]
pub unsafe extern "C" fn srd_operators_total_area(ops: *const SrdOperators) -> f64 {
    ops.as_ref().map_or(f64::NAN, |o| o.ops.total_area)
}

/// `x^T A x / x^T M x` for nodal values `x` of length `n`.
///
/// # Safety
/// `ops` must be a live operators handle, `x` must point to `n` doubles and
/// `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn srd_operators_rayleigh_quotient(
    ops: *const SrdOperators,
    x: *const f64,
    n: usize,
    out: *mut f64,
) -> SrdStatus {
    guard(|| {
        let (Some(o), false, false) = (ops.as_ref(), x.is_null(), out.is_null()) else {
            return fail(SrdStatus::NullPointer, "null argument");
        };
        match rayleigh_quotient(&o.ops, std::slice::from_raw_parts(x, n)) {
            Ok(q) => {
                *out = q;
                SrdStatus::Ok
            }
            Err(e) => fail(SrdStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Largest reaction time step keeping the invariant rectangle of experiment
/// `experiment` (1 to 4). Infinite when the reaction imposes no limit.
///
/// # Safety
/// `out` must point to one writable double.
#[no_mangle]
pub unsafe extern "C" fn srd_max_stable_timestep(experiment: u32, out: *mut f64) -> SrdStatus {
    guard(|| {
        if out.is_null() {
            return fail(SrdStatus::NullPointer, "out is null");
        }
        let Some(e) = experiment_from(experiment) else {
            return fail(SrdStatus::InvalidArgument, format!("unknown experiment {experiment}"));
        };
        match max_stable_timestep(preset(e).model.as_ref()) {
            Ok(t) => {
                *out = t;
                SrdStatus::Ok
            }
            Err(e) => fail(SrdStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Runs experiment `experiment` (1 to 4) on `mesh` with `method` one of the
/// [`SrdMethod`] values. Non-positive `tau` or
/// `t_final` select the experiment defaults. A blow-up is a successful run
/// whose status reports it; see [`srd_run_blew_up`].
///
/// # Safety
/// `mesh` must be a live mesh handle and `out` a valid pointer to writable
/// storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn srd_run_experiment(
    mesh: *const SrdMesh,
    experiment: u32,
    method: u32,
    tau: f64,
    t_final: f64,
    out: *mut *mut SrdRun,
) -> SrdStatus {
    guard(|| {
        let (Some(m), false) = (mesh.as_ref(), out.is_null()) else {
            return fail(SrdStatus::NullPointer, "mesh or out is null");
        };
        let Some(e) = experiment_from(experiment) else {
            return fail(SrdStatus::InvalidArgument, format!("unknown experiment {experiment}"));
        };
        if tau.is_nan() || t_final.is_nan() {
            return fail(SrdStatus::InvalidArgument, "tau and t_final must not be NaN");
        }
        let mode = match method {
            m if m == SrdMethod::Sfem as u32 => MassMode::Consistent,
            m if m == SrdMethod::Lsfem as u32 => MassMode::Lumped,
            _ => return fail(SrdStatus::InvalidArgument, format!("unknown method {method}")),
        };
        let settings = RunSettings {
            tau: (tau > 0.0).then_some(tau),
            t_final: (t_final > 0.0).then_some(t_final),
            ..RunSettings::default()
        };
        let ops = match FemOperators::assemble(&m.mesh) {
            Ok(ops) => ops,
            Err(err) => return fail(SrdStatus::MeshError, err.to_string()),
        };
        match simulate_observed(e, &m.mesh, &ops, mode, &settings, |_, _, _| {}) {
            Ok(outcome) => boxed(SrdRun { outcome }, out),
            Err(err) => fail(cli_status(&err), err.to_string()),
        }
    })
}

/// # Safety
/// `run` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn srd_run_free(run: *mut SrdRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// True when the run stopped on a non-finite or huge value.
///
/// # Safety
/// `run` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn srd_run_blew_up(run: *const SrdRun) -> bool {
    run.as_ref().is_some_and(|r| r.outcome.blow_up())
}

/// Time step actually used.
///
/// # Safety
/// `run` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn srd_run_tau(run: *const SrdRun) -> f64 {
    run.as_ref().map_or(f64::NAN, |r| r.outcome.tau)
}

/// Number of completed steps.
///
/// # Safety
/// `run` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn srd_run_n_steps(run: *const SrdRun) -> usize {
    run.as_ref().map_or(0, |r| r.outcome.result.records.len())
}

/// Number of solution components.
///
/// # Safety
/// `run` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn srd_run_n_components(run: *const SrdRun) -> usize {
    run.as_ref().map_or(0, |r| r.outcome.result.final_state.n_components())
}

/// Maximum over steps of the L2 error against the exact solution. Fails with
/// `InvalidArgument` for experiments without one.
///
/// # Safety
/// `run` must be a live run handle and `out` must point to one writable
/// double.
#[no_mangle]
pub unsafe extern "C" fn srd_run_error(run: *const SrdRun, out: *mut f64) -> SrdStatus {
    guard(|| {
        let (Some(r), false) = (run.as_ref(), out.is_null()) else {
            return fail(SrdStatus::NullPointer, "run or out is null");
        };
        match r.outcome.error {
            Some(e) => {
                *out = e;
                SrdStatus::Ok
            }
            None => fail(SrdStatus::InvalidArgument, "experiment has no exact solution"),
        }
    })
}

/// Minimum and maximum of component `k` over steps `1..=n`. After a blow-up
/// these are the last finite extrema.
///
/// # Safety
/// `run` must be a live run handle; `min` and `max` must each point to one
/// writable double.
#[no_mangle]
pub unsafe extern "C" fn srd_run_extrema(run: *const SrdRun, k: usize, min: *mut f64, max: *mut f64) -> SrdStatus {
    guard(|| {
        let (Some(r), false, false) = (run.as_ref(), min.is_null(), max.is_null()) else {
            return fail(SrdStatus::NullPointer, "null argument");
        };
        let result = &r.outcome.result;
        if k >= result.final_state.n_components() {
            return fail(SrdStatus::InvalidArgument, format!("component {k} out of range"));
        }
        let (lo, hi) = match &result.status {
            RunStatus::BlowUp { last_min, last_max, .. } if result.records.is_empty() => {
                (last_min.clone(), last_max.clone())
            }
            _ => (result.global_min(), result.global_max()),
        };
        *min = lo[k];
        *max = hi[k];
        SrdStatus::Ok
    })
}

/// Copies component `k` of the final state (one value per vertex) into
/// `values`, which holds `len` doubles.
///
/// # Safety
/// `run` must be a live run handle and `values` must point to `len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn srd_run_final_state(run: *const SrdRun, k: usize, values: *mut f64, len: usize) -> SrdStatus {
    guard(|| {
        let (Some(r), false) = (run.as_ref(), values.is_null()) else {
            return fail(SrdStatus::NullPointer, "run or buffer is null");
        };
        let state = &r.outcome.result.final_state;
        if k >= state.n_components() {
            return fail(SrdStatus::InvalidArgument, format!("component {k} out of range"));
        }
        let src = state.component(k);
        if len < src.len() {
            return fail(SrdStatus::BufferTooSmall, format!("need {} doubles, got {len}", src.len()));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), values, src.len());
        SrdStatus::Ok
    })
}
