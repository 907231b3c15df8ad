//! C ABI over the beam solver: opaque mesh handles, status codes, and a
//! thread-local last-error message. `include/pencil_beam.h` is generated
//! from this file at build time.
//!
//! Ownership rules: every `*mut PbMesh` returned through an out-pointer is
//! owned by the caller and must be released with `pb_mesh_free`. All other
//! pointers are borrowed for the duration of the call. Handles are not
//! thread-safe; share them only with external synchronization.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use pencil_beam::analytic::{exact_2d, scalar_flux, InitialData};
use pencil_beam::mesh::{Rect, TriMesh};
use pencil_beam::stepper::{MarchConfig, Marcher, Scheme};
use pencil_beam::Error;

/// Status code returned by every fallible entry point. `pb_last_error`
/// holds a human-readable message for the most recent non-OK return on
/// the calling thread.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SolverFailure = 3,
    InvariantViolation = 4,
    OutOfDomain = 5,
    Io = 6,
    Panic = 7,
}

/// Marching scheme selector; mirrors the solver's scheme enum.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbScheme {
    StandardGalerkin = 0,
    SemiStreamlineDiffusion = 1,
    CharacteristicStreamlineDiffusion = 2,
}

/// Entry-profile family selector for `pb_initial_data_eval`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbInitialKind {
    Dirac = 0,
    Maxwellian = 1,
    Hyperbolic = 2,
}

/// Slab-marching configuration; field meanings match the solver's native
/// configuration one-to-one.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PbMarchConfig {
    pub scheme: PbScheme,
    /// Transport cross-section (velocity diffusion coefficient).
    pub sigma_tr: f64,
    /// Streamline stabilization weight; ignored by the characteristic
    /// scheme.
    pub delta: f64,
    /// Slab thickness in the penetration coordinate.
    pub step: f64,
    /// Total penetration depth.
    pub length: f64,
    /// Relative residual target for the linear solves.
    pub solver_tol: f64,
    /// Drop the O(delta*sigma) cross terms from the streamline form.
    pub drop_delta_sigma: bool,
}

/// Opaque triangulation handle.
pub struct PbMesh(TriMesh);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let owned = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn status_of(err: &Error) -> PbStatus {
    match err {
        Error::DegenerateDomain(_) | Error::DimensionMismatch(_) | Error::InvalidArgument(_) => {
            PbStatus::InvalidArgument
        }
        Error::SolverFailure { .. } => PbStatus::SolverFailure,
        Error::PointLocation { .. } => PbStatus::OutOfDomain,
        Error::InvariantViolation(_) => PbStatus::InvariantViolation,
        Error::MeshFormat(_) | Error::Io(_) => PbStatus::Io,
    }
}

fn fail(err: &Error) -> PbStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn null_pointer(what: &str) -> PbStatus {
    set_error(&format!("null pointer: {what}"));
    PbStatus::NullPointer
}

/// Runs `body` with a panic boundary: panics become `PB_STATUS_PANIC`
/// instead of unwinding across the C frame.
fn guarded(body: impl FnOnce() -> PbStatus) -> PbStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            PbStatus::Panic
        }
    }
}

/// Copies the last error message into `buf` (NUL-terminated, truncated to
/// `cap` bytes) and returns the full message length excluding the NUL.
/// Call with a null `buf` or zero `cap` to query the required length.
#[no_mangle]
pub extern "C" fn pb_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Builds a conforming triangulation of the rectangle
/// `[y_min, y_max] x [eta_min, eta_max]` with at least `target_elements`
/// triangles. On success `*out` owns the new mesh.
#[no_mangle]
pub extern "C" fn pb_mesh_rectangle(
    y_min: f64,
    y_max: f64,
    eta_min: f64,
    eta_max: f64,
    target_elements: usize,
    out: *mut *mut PbMesh,
) -> PbStatus {
    guarded(|| {
        if out.is_null() {
            return null_pointer("out");
        }
        let rect = match Rect::new(y_min, y_max, eta_min, eta_max) {
            Ok(r) => r,
            Err(e) => return fail(&e),
        };
        match TriMesh::rectangle(rect, target_elements) {
            Ok(mesh) => {
                unsafe { *out = Box::into_raw(Box::new(PbMesh(mesh))) };
                PbStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Red-green refinement of the triangles listed in
/// `marked[0..marked_len]`. The input mesh is left untouched; on success
/// `*out` owns the refined mesh.
#[no_mangle]
pub extern "C" fn pb_mesh_refine(
    mesh: *const PbMesh,
    marked: *const usize,
    marked_len: usize,
    out: *mut *mut PbMesh,
) -> PbStatus {
    guarded(|| {
        if mesh.is_null() {
            return null_pointer("mesh");
        }
        if out.is_null() {
            return null_pointer("out");
        }
        if marked.is_null() && marked_len > 0 {
            return null_pointer("marked");
        }
        let list: &[usize] =
            if marked_len == 0 { &[] } else { unsafe { slice::from_raw_parts(marked, marked_len) } };
        match unsafe { &(*mesh).0 }.refine(list) {
            Ok(refined) => {
                unsafe { *out = Box::into_raw(Box::new(PbMesh(refined))) };
                PbStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

#[no_mangle]
pub extern "C" fn pb_mesh_free(mesh: *mut PbMesh) {
    if !mesh.is_null() {
        drop(unsafe { Box::from_raw(mesh) });
    }
}

/// Vertex count, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn pb_mesh_num_vertices(mesh: *const PbMesh) -> usize {
    if mesh.is_null() { 0 } else { unsafe { &(*mesh).0 }.num_vertices() }
}

/// Triangle count, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn pb_mesh_num_triangles(mesh: *const PbMesh) -> usize {
    if mesh.is_null() { 0 } else { unsafe { &(*mesh).0 }.num_triangles() }
}

/// Coordinates of vertex `index`.
#[no_mangle]
pub extern "C" fn pb_mesh_vertex(
    mesh: *const PbMesh,
    index: usize,
    y: *mut f64,
    eta: *mut f64,
) -> PbStatus {
    guarded(|| {
        if mesh.is_null() {
            return null_pointer("mesh");
        }
        if y.is_null() || eta.is_null() {
            return null_pointer("y/eta");
        }
        let m = unsafe { &(*mesh).0 };
        if index >= m.num_vertices() {
            set_error(&format!(
                "vertex index {index} out of range ({} vertices)",
                m.num_vertices()
            ));
            return PbStatus::InvalidArgument;
        }
        unsafe {
            *y = m.vertices[index][0];
            *eta = m.vertices[index][1];
        }
        PbStatus::Ok
    })
}

fn native_config(cfg: &PbMarchConfig) -> MarchConfig {
    MarchConfig {
        scheme: match cfg.scheme {
            PbScheme::StandardGalerkin => Scheme::StandardGalerkin,
            PbScheme::SemiStreamlineDiffusion => Scheme::SemiStreamlineDiffusion,
            PbScheme::CharacteristicStreamlineDiffusion => {
                Scheme::CharacteristicStreamlineDiffusion
            }
        },
        sigma_tr: cfg.sigma_tr,
        delta: cfg.delta,
        step: cfg.step,
        length: cfg.length,
        solver_tol: cfg.solver_tol,
        drop_delta_sigma: cfg.drop_delta_sigma,
    }
}

/// Marches the nodal entry field through the slab and writes the exit
/// field to `exit_values`. Both arrays must hold exactly
/// `pb_mesh_num_vertices(mesh)` values (`len` is checked).
#[no_mangle]
pub extern "C" fn pb_march(
    mesh: *const PbMesh,
    config: *const PbMarchConfig,
    entry: *const f64,
    len: usize,
    exit_values: *mut f64,
) -> PbStatus {
    guarded(|| {
        if mesh.is_null() {
            return null_pointer("mesh");
        }
        if config.is_null() {
            return null_pointer("config");
        }
        if entry.is_null() {
            return null_pointer("entry");
        }
        if exit_values.is_null() {
            return null_pointer("exit_values");
        }
        let m = unsafe { &(*mesh).0 };
        if len != m.num_vertices() {
            set_error(&format!(
                "entry length {len} does not match the {} mesh vertices",
                m.num_vertices()
            ));
            return PbStatus::InvalidArgument;
        }
        let cfg = native_config(unsafe { &*config });
        let entry = unsafe { slice::from_raw_parts(entry, len) };
        let marcher = match Marcher::new(m, cfg) {
            Ok(marcher) => marcher,
            Err(e) => return fail(&e),
        };
        match marcher.march(entry) {
            Ok(run) => {
                unsafe {
                    ptr::copy_nonoverlapping(run.final_values.as_ptr(), exit_values, len)
                };
                PbStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Closed-form exit profile of the planar beam problem.
#[no_mangle]
pub extern "C" fn pb_exact_2d(sigma_tr: f64, x: f64, y: f64, eta: f64) -> f64 {
    exact_2d(sigma_tr, x, y, eta)
}

/// Closed-form transverse dose profile (velocity-integrated 3D beam).
#[no_mangle]
pub extern "C" fn pb_scalar_flux(sigma_tr: f64, x: f64, y: f64, z: f64) -> f64 {
    scalar_flux(sigma_tr, x, y, z)
}

/// Evaluates one of the benchmark entry profiles at `(y, eta)`. The
/// smoothing parameter `alpha` must lie in (0, 1).
#[no_mangle]
pub extern "C" fn pb_initial_data_eval(
    kind: PbInitialKind,
    alpha: f64,
    y: f64,
    eta: f64,
    out: *mut f64,
) -> PbStatus {
    guarded(|| {
        if out.is_null() {
            return null_pointer("out");
        }
        let data = match kind {
            PbInitialKind::Dirac => InitialData::DiracType { alpha },
            PbInitialKind::Maxwellian => InitialData::MaxwellianType { alpha },
            PbInitialKind::Hyperbolic => InitialData::HyperbolicType { alpha },
        };
        if let Err(e) = data.validate() {
            return fail(&e);
        }
        unsafe { *out = data.eval(y, eta) };
        PbStatus::Ok
    })
}
