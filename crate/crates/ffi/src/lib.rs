//! C ABI over `mcflow`.
//!
//! Conventions:
//! * every fallible call returns an `McflowStatus`; results go through out
//!   pointers that are only written on `MCFLOW_OK`;
//! * handles are opaque and released with the matching `*_free`;
//! * `mcflow_last_error` returns a message for the calling thread's most
//!   recent failure, valid until that thread's next call.
//!
//! No call unwinds across the boundary; a panic is reported as
//! `MCFLOW_ERR_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mcflow::analysis::{michael_simon_ratio, moser_constants};
use mcflow::flow::{estimate_singular_time, run, FlowConfig, FlowStatus, FlowTrajectory, RemeshPolicy};
use mcflow::monitors::{monitor, FunctionalSpec, LogShift, DEFAULT_DIVERGENCE_SLOPE};
use mcflow::oracle::{Evaluation, SphereSolution};
use mcflow::surface::{
    build_surface, icosphere, read_surface, regular_polygon, Connectivity, DiscreteHypersurface, Point,
    ScalarField,
};
use mcflow::Error;

/// Result code of every fallible call.
#[repr(C)]
#[allow(non_camel_case_types)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McflowStatus {
    MCFLOW_OK = 0,
    MCFLOW_ERR_NULL_POINTER = 1,
    MCFLOW_ERR_INVALID_INPUT = 2,
    MCFLOW_ERR_NON_MANIFOLD = 3,
    MCFLOW_ERR_DEGENERATE = 4,
    MCFLOW_ERR_FIELD_MISMATCH = 5,
    MCFLOW_ERR_SOLVE_FAILURE = 6,
    MCFLOW_ERR_INSUFFICIENT_DATA = 7,
    MCFLOW_ERR_TRAJECTORY_TOO_SHORT = 8,
    MCFLOW_ERR_UNSUPPORTED_DIMENSION = 9,
    MCFLOW_ERR_ZERO_DENOMINATOR = 10,
    MCFLOW_ERR_EXPONENT_ORDER = 11,
    MCFLOW_ERR_SUBCRITICAL_EXPONENT = 12,
    MCFLOW_ERR_EMPTY_REGION = 13,
    MCFLOW_ERR_TRAJECTORY_RANGE = 14,
    MCFLOW_ERR_BELOW_THRESHOLD = 15,
    MCFLOW_ERR_DOMAIN = 16,
    MCFLOW_ERR_MISSING_MONITORS = 17,
    MCFLOW_ERR_OUT_OF_RANGE = 18,
    MCFLOW_ERR_SHAPE_MISMATCH = 19,
    MCFLOW_ERR_PARSE = 20,
    MCFLOW_ERR_IO = 21,
    MCFLOW_ERR_BUFFER_TOO_SMALL = 22,
    MCFLOW_ERR_PANIC = 99,
}

use McflowStatus::*;

fn status_of(e: &Error) -> McflowStatus {
    match e {
        Error::NonManifold(_) => MCFLOW_ERR_NON_MANIFOLD,
        Error::Degenerate(_) => MCFLOW_ERR_DEGENERATE,
        Error::FieldMismatch { .. } => MCFLOW_ERR_FIELD_MISMATCH,
        Error::SolveFailure { .. } => MCFLOW_ERR_SOLVE_FAILURE,
        Error::InsufficientData(_) => MCFLOW_ERR_INSUFFICIENT_DATA,
        Error::TrajectoryTooShort { .. } => MCFLOW_ERR_TRAJECTORY_TOO_SHORT,
        Error::UnsupportedDimension(_) => MCFLOW_ERR_UNSUPPORTED_DIMENSION,
        Error::ZeroDenominator => MCFLOW_ERR_ZERO_DENOMINATOR,
        Error::ExponentOrder { .. } => MCFLOW_ERR_EXPONENT_ORDER,
        Error::SubcriticalExponent { .. } => MCFLOW_ERR_SUBCRITICAL_EXPONENT,
        Error::EmptyRegion => MCFLOW_ERR_EMPTY_REGION,
        Error::TrajectoryRange(_) => MCFLOW_ERR_TRAJECTORY_RANGE,
        Error::BelowThreshold { .. } => MCFLOW_ERR_BELOW_THRESHOLD,
        Error::DomainError(_) => MCFLOW_ERR_DOMAIN,
        Error::MissingMonitors => MCFLOW_ERR_MISSING_MONITORS,
        Error::OutOfRange { .. } => MCFLOW_ERR_OUT_OF_RANGE,
        Error::ShapeMismatch(_) => MCFLOW_ERR_SHAPE_MISMATCH,
        Error::InvalidInput(_) => MCFLOW_ERR_INVALID_INPUT,
        Error::Parse { .. } | Error::Json(_) => MCFLOW_ERR_PARSE,
        Error::Io { .. } => MCFLOW_ERR_IO,
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Failure {
    Core(Error),
    Status(McflowStatus, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> McflowStatus {
    set_last_error(String::new());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MCFLOW_OK,
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_last_error(msg);
            s
        }
        Err(_) => {
            set_last_error("internal panic".into());
            MCFLOW_ERR_PANIC
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(MCFLOW_ERR_NULL_POINTER, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Closed polygon or triangle mesh.
pub struct McflowSurface(DiscreteHypersurface);

/// Recorded flow from `t = 0` to its stop.
pub struct McflowTrajectory(FlowTrajectory);

/// NUL-terminated library version.
#[no_mangle]
pub extern "C" fn mcflow_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the calling thread's last failure; empty after success.
#[no_mangle]
pub extern "C" fn mcflow_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

fn boxed_surface(s: DiscreteHypersurface) -> *mut McflowSurface {
    Box::into_raw(Box::new(McflowSurface(s)))
}

/// Reads a `.obj` mesh or a `.json` curve.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcflow_surface_read(path: *const c_char, out: *mut *mut McflowSurface) -> McflowStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure::Status(MCFLOW_ERR_INVALID_INPUT, "path is not UTF-8".into()))?;
        let s = read_surface(p)?;
        write_out(out, boxed_surface(s), "out")
    })
}

/// Icosphere with `20·4^level` faces.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcflow_surface_icosphere(
    level: u32,
    radius: f64,
    out: *mut *mut McflowSurface,
) -> McflowStatus {
    guard(|| write_out(out, boxed_surface(icosphere(level as usize, radius)?), "out"))
}

/// Regular `k`-gon in the plane.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcflow_surface_polygon(k: usize, radius: f64, out: *mut *mut McflowSurface) -> McflowStatus {
    guard(|| write_out(out, boxed_surface(regular_polygon(k, radius)?), "out"))
}

/// Triangle mesh from `3·vertex_count` coordinates and `3·triangle_count`
/// zero-based indices.
///
/// # Safety
/// The arrays must hold the stated number of elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcflow_surface_from_mesh(
    coords: *const f64,
    vertex_count: usize,
    indices: *const u32,
    triangle_count: usize,
    out: *mut *mut McflowSurface,
) -> McflowStatus {
    guard(|| {
        let c = slice(coords, 3 * vertex_count, "coords")?;
        let t = slice(indices, 3 * triangle_count, "indices")?;
        let positions = c.chunks_exact(3).map(|v| Point::new(v[0], v[1], v[2])).collect();
        let tris = t
            .chunks_exact(3)
            .map(|f| [f[0] as usize, f[1] as usize, f[2] as usize])
            .collect();
        let s = build_surface(positions, Connectivity::Triangles(tris))?;
        write_out(out, boxed_surface(s), "out")
    })
}

/// Releases a surface; null is ignored.
///
/// # Safety
/// `surface` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mcflow_surface_free(surface: *mut McflowSurface) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}

/// Scalar summary of a surface.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct McflowSurfaceInfo {
    /// 1 for curves, 2 for meshes.
    pub n: u32,
    pub vertex_count: usize,
    pub measure: f64,
    pub max_abs_a: f64,
}

/// # Safety
/// `surface` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcflow_surface_info(
    surface: *const McflowSurface,
    out: *mut McflowSurfaceInfo,
) -> McflowStatus {
    guard(|| {
        let s = &deref(surface, "surface")?.0;
        write_out(
            out,
            McflowSurfaceInfo {
                n: s.n() as u32,
                vertex_count: s.vertex_count(),
                measure: s.measure(),
                max_abs_a: s.max_abs_a(),
            },
            "out",
        )
    })
}

/// Michael–Simon ratio of a non-negative vertex field.
///
/// # Safety
/// `field` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcflow_michael_simon_ratio(
    surface: *const McflowSurface,
    field: *const f64,
    len: usize,
    out: *mut f64,
) -> McflowStatus {
    guard(|| {
        let s = &deref(surface, "surface")?.0;
        let f = ScalarField::new(slice(field, len, "field")?.to_vec())?;
        write_out(out, michael_simon_ratio(s, &f)?, "out")
    })
}

/// Subset of the flow configuration exposed over the ABI.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct McflowFlowOptions {
    /// Stop time; negative runs until a singularity is detected.
    pub t_end: f64,
    pub c_stab: f64,
    /// Non-zero enables adaptive remeshing.
    pub remesh: i32,
    pub max_steps: usize,
}

#[no_mangle]
pub extern "C" fn mcflow_flow_options_default() -> McflowFlowOptions {
    let d = FlowConfig::default();
    McflowFlowOptions {
        t_end: -1.0,
        c_stab: d.c_stab,
        remesh: 1,
        max_steps: d.max_steps,
    }
}

/// Flow status codes reported by `mcflow_trajectory_info`.
#[repr(C)]
#[allow(non_camel_case_types)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McflowFlowStatus {
    MCFLOW_FLOW_RUNNING = 0,
    MCFLOW_FLOW_REACHED_T_END = 1,
    MCFLOW_FLOW_SINGULARITY_DETECTED = 2,
    MCFLOW_FLOW_STEP_UNDERFLOW = 3,
}

/// Evolves `surface`; a null `options` uses the defaults.
///
/// # Safety
/// `surface` must be a live handle, `options` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcflow_flow_run(
    surface: *const McflowSurface,
    options: *const McflowFlowOptions,
    out: *mut *mut McflowTrajectory,
) -> McflowStatus {
    guard(|| {
        let s = &deref(surface, "surface")?.0;
        let o = options.as_ref().copied().unwrap_or_else(|| mcflow_flow_options_default());
        let config = FlowConfig {
            t_end: (o.t_end >= 0.0).then_some(o.t_end),
            c_stab: o.c_stab,
            remesh: if o.remesh != 0 {
                RemeshPolicy::default()
            } else {
                RemeshPolicy::disabled()
            },
            max_steps: o.max_steps,
            ..FlowConfig::default()
        };
        let traj = run(s, &config)?;
        write_out(out, Box::into_raw(Box::new(McflowTrajectory(traj))), "out")
    })
}

/// # Safety
/// `traj` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mcflow_trajectory_free(traj: *mut McflowTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct McflowTrajectoryInfo {
    pub status: McflowFlowStatus,
    pub snapshot_count: usize,
    pub final_time: f64,
    pub final_sup_a: f64,
}

/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcflow_trajectory_info(
    traj: *const McflowTrajectory,
    out: *mut McflowTrajectoryInfo,
) -> McflowStatus {
    guard(|| {
        let t = &deref(traj, "traj")?.0;
        let status = match t.status() {
            FlowStatus::Running => McflowFlowStatus::MCFLOW_FLOW_RUNNING,
            FlowStatus::ReachedTEnd => McflowFlowStatus::MCFLOW_FLOW_REACHED_T_END,
            FlowStatus::SingularityDetected => McflowFlowStatus::MCFLOW_FLOW_SINGULARITY_DETECTED,
            FlowStatus::StepUnderflow => McflowFlowStatus::MCFLOW_FLOW_STEP_UNDERFLOW,
        };
        write_out(
            out,
            McflowTrajectoryInfo {
                status,
                snapshot_count: t.len(),
                final_time: t.duration(),
                final_sup_a: t.last().surface.max_abs_a(),
            },
            "out",
        )
    })
}

/// Copies snapshot times and `sup|A|` into caller buffers of `capacity`
/// entries each (either may be null). Fails with
/// `MCFLOW_ERR_BUFFER_TOO_SMALL` if `capacity` is below the snapshot count.
///
/// # Safety
/// Non-null buffers must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn mcflow_trajectory_series(
    traj: *const McflowTrajectory,
    times: *mut f64,
    sup_a: *mut f64,
    capacity: usize,
) -> McflowStatus {
    guard(|| {
        let t = &deref(traj, "traj")?.0;
        if capacity < t.len() {
            return Err(Failure::Status(
                MCFLOW_ERR_BUFFER_TOO_SMALL,
                format!("need {} entries, got {capacity}", t.len()),
            ));
        }
        if !times.is_null() {
            ptr::copy_nonoverlapping(t.times().as_ptr(), times, t.len());
        }
        if !sup_a.is_null() {
            ptr::copy_nonoverlapping(t.sup_a().as_ptr(), sup_a, t.len());
        }
        Ok(())
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct McflowSingularFit {
    pub t_est: f64,
    pub alpha: f64,
    pub residual: f64,
    pub points: usize,
}

/// Fits `log sup|A| = −α log(T − t) + β` to the final decade.
///
/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcflow_trajectory_singular_time(
    traj: *const McflowTrajectory,
    out: *mut McflowSingularFit,
) -> McflowStatus {
    guard(|| {
        let fit = estimate_singular_time(&deref(traj, "traj")?.0)?;
        write_out(
            out,
            McflowSingularFit {
                t_est: fit.t_est,
                alpha: fit.alpha,
                residual: fit.residual,
                points: fit.points,
            },
            "out",
        )
    })
}

#[repr(C)]
#[allow(non_camel_case_types)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McflowFunctionalKind {
    /// `∫ (∫|A|^p)^{q/p} dt`
    MCFLOW_MIXED_NORM = 0,
    /// `∫∫ |A|^{n+2} / ln(2 + |A|)`
    MCFLOW_SUBCRITICAL_LOG = 1,
    /// `∫∫ |A|^{n+3}`
    MCFLOW_SUPERCRITICAL = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct McflowFunctional {
    pub kind: McflowFunctionalKind,
    /// Used by the mixed norm only.
    pub p: f64,
    pub q: f64,
}

fn spec_of(f: &McflowFunctional) -> FunctionalSpec {
    match f.kind {
        McflowFunctionalKind::MCFLOW_MIXED_NORM => FunctionalSpec::MixedNorm { p: f.p, q: f.q },
        McflowFunctionalKind::MCFLOW_SUBCRITICAL_LOG => FunctionalSpec::SubcriticalLog { shift: LogShift::Two },
        McflowFunctionalKind::MCFLOW_SUPERCRITICAL => FunctionalSpec::Supercritical,
    }
}

/// Cumulative value of `functional` at time `t` along `traj`.
///
/// # Safety
/// Pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcflow_trajectory_cumulative(
    traj: *const McflowTrajectory,
    functional: *const McflowFunctional,
    t: f64,
    out: *mut f64,
) -> McflowStatus {
    guard(|| {
        let tr = &deref(traj, "traj")?.0;
        let spec = spec_of(deref(functional, "functional")?);
        let r = monitor(tr, spec, DEFAULT_DIVERGENCE_SLOPE)?;
        write_out(out, r.cumulative_at(t)?, "out")
    })
}

/// Exact cumulative value on the shrinking sphere `R(t)² = R₀² − 2nt`.
///
/// # Safety
/// Pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcflow_sphere_cumulative(
    n: u32,
    r0: f64,
    functional: *const McflowFunctional,
    t: f64,
    out: *mut f64,
) -> McflowStatus {
    guard(|| {
        let o = SphereSolution::new(n as usize, r0)?;
        let spec = spec_of(deref(functional, "functional")?);
        write_out(out, o.functional(t, spec, Evaluation::Cumulative)?, "out")
    })
}

/// Exact sphere radius at time `t`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcflow_sphere_radius(n: u32, r0: f64, t: f64, out: *mut f64) -> McflowStatus {
    guard(|| write_out(out, SphereSolution::new(n as usize, r0)?.radius(t)?, "out"))
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct McflowMoserConstants {
    pub nu: f64,
    pub c_a: f64,
    pub c_z: f64,
    /// `C_b(β)`; may be `inf` when it overflows, see `ln_c_b`.
    pub c_b: f64,
    pub ln_c_b: f64,
    pub big_lambda: f64,
}

/// Moser iteration constants; `beta` must be at least 2.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcflow_moser_constants(
    n: u32,
    q: f64,
    c0: f64,
    c1: f64,
    c_n: f64,
    beta: f64,
    out: *mut McflowMoserConstants,
) -> McflowStatus {
    guard(|| {
        let m = moser_constants(n as usize, q, c0, c1, c_n)?;
        let ln_c_b = m.ln_c_b(beta)?;
        write_out(
            out,
            McflowMoserConstants {
                nu: m.nu,
                c_a: m.c_a,
                c_z: m.c_z,
                c_b: ln_c_b.exp(),
                ln_c_b,
                big_lambda: m.big_lambda(beta),
            },
            "out",
        )
    })
}
