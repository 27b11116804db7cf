//! C ABI over the solver: opaque mesh and solution handles, status codes
//! and a thread-local message for the last failure.
//!
//! Every function returning [`VemStatus`] leaves its out-pointer untouched
//! on failure. Handles are released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use vem_elasticity::assembly::{LinearSolver, SolveOptions, Solution};
use vem_elasticity::harness::{solve_manufactured, CaseParams, ErrorPair};
use vem_elasticity::mesh::{read_mesh, write_mesh, MeshFamily, PolygonalMesh, DEFAULT_LLOYD_ITERATIONS};
use vem_elasticity::vem::Method;
use vem_elasticity::VemError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VemStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    MeshError = 3,
    /// Singular, indefinite or non-convergent linear algebra.
    SolverError = 4,
    IoError = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VemMethod {
    Nonconforming = 0,
    KouhiaStenberg = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VemFamily {
    Square = 0,
    Hex = 1,
    Voronoi = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VemSolver {
    Cg = 0,
    Direct = 1,
    Auto = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VemSolveParams {
    pub method: VemMethod,
    pub mu: f64,
    pub lambda: f64,
    /// Jump penalty of the nonconforming method.
    pub gamma: f64,
    /// Relative residual for CG.
    pub tol: f64,
    pub solver: VemSolver,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VemErrors {
    /// Discrete energy error.
    pub energy: f64,
    /// Weighted DOF error.
    pub l2: f64,
}

/// Opaque mesh handle.
pub struct VemMesh(PolygonalMesh);

/// Opaque solution handle.
pub struct VemSolution {
    solution: Solution,
    errors: ErrorPair,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &VemError) -> VemStatus {
    match err {
        VemError::InvalidInput(_) | VemError::Config(_) | VemError::UnsupportedDegree(_) | VemError::TooLarge { .. } => {
            VemStatus::InvalidArgument
        }
        VemError::DuplicateVertex { .. }
        | VemError::NonManifoldEdge { .. }
        | VemError::DegeneratePolygon { .. }
        | VemError::Coverage(_)
        | VemError::Regularity { .. }
        | VemError::NoFreeDofs
        | VemError::Parse { .. } => VemStatus::MeshError,
        VemError::SingularProjector { .. }
        | VemError::SingularMatrix { .. }
        | VemError::NotPositiveDefinite { .. }
        | VemError::NoConvergence { .. } => VemStatus::SolverError,
        VemError::Io(_) => VemStatus::IoError,
    }
}

fn fail(status: VemStatus, msg: impl Into<String>) -> VemStatus {
    set_last_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), VemStatus>>(f: F) -> VemStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VemStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(VemStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn check<T>(r: vem_elasticity::Result<T>) -> Result<T, VemStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, VemStatus> {
    if path.is_null() {
        return Err(fail(VemStatus::NullPointer, "path is null"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| fail(VemStatus::InvalidArgument, "path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vem_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn vem_solve_params_default() -> VemSolveParams {
    VemSolveParams {
        method: VemMethod::Nonconforming,
        mu: 1.0,
        lambda: 1.0,
        gamma: 1.0,
        tol: SolveOptions::default().tol,
        solver: VemSolver::Cg,
    }
}

/// Generates level `n` of a mesh family. `seed` only affects Voronoi meshes.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn vem_mesh_generate(family: VemFamily, n: usize, seed: u64, out: *mut *mut VemMesh) -> VemStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(VemStatus::NullPointer, "out is null"));
        }
        let family = match family {
            VemFamily::Square => MeshFamily::Square,
            VemFamily::Hex => MeshFamily::Hex,
            VemFamily::Voronoi => MeshFamily::Voronoi,
        };
        let mesh = check(family.generate(n, seed, DEFAULT_LLOYD_ITERATIONS))?;
        *out = Box::into_raw(Box::new(VemMesh(mesh)));
        Ok(())
    })
}

/// Reads a mesh in the text mesh format.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vem_mesh_load(path: *const c_char, out: *mut *mut VemMesh) -> VemStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(VemStatus::NullPointer, "out is null"));
        }
        let path = path_arg(path)?;
        let file = check(std::fs::File::open(&path).map_err(VemError::from))?;
        let mesh = check(read_mesh(std::io::BufReader::new(file)))?;
        *out = Box::into_raw(Box::new(VemMesh(mesh)));
        Ok(())
    })
}

/// # Safety
/// `mesh` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn vem_mesh_save(mesh: *const VemMesh, path: *const c_char) -> VemStatus {
    guard(|| {
        let Some(mesh) = mesh.as_ref() else {
            return Err(fail(VemStatus::NullPointer, "mesh is null"));
        };
        let path = path_arg(path)?;
        let file = check(std::fs::File::create(&path).map_err(VemError::from))?;
        check(write_mesh(&mesh.0, std::io::BufWriter::new(file)))
    })
}

/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vem_mesh_num_polygons(mesh: *const VemMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.num_polygons())
}

/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vem_mesh_num_vertices(mesh: *const VemMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.num_vertices())
}

/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vem_mesh_num_edges(mesh: *const VemMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.edges().len())
}

/// Largest element diameter, or NaN for a null handle.
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vem_mesh_h(mesh: *const VemMesh) -> f64 {
    mesh.as_ref().map_or(f64::NAN, |m| m.0.h())
}

/// # Safety
/// `mesh` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn vem_mesh_free(mesh: *mut VemMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Solves the manufactured problem on `mesh` and measures its errors.
///
/// # Safety
/// `mesh` must be a live handle, `params` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vem_solve_manufactured(
    mesh: *const VemMesh,
    params: *const VemSolveParams,
    out: *mut *mut VemSolution,
) -> VemStatus {
    guard(|| {
        let (Some(mesh), Some(p)) = (mesh.as_ref(), params.as_ref()) else {
            return Err(fail(VemStatus::NullPointer, "mesh or params is null"));
        };
        if out.is_null() {
            return Err(fail(VemStatus::NullPointer, "out is null"));
        }
        let case = CaseParams {
            method: match p.method {
                VemMethod::Nonconforming => Method::Nc,
                VemMethod::KouhiaStenberg => Method::Ks,
            },
            mu: p.mu,
            lambda: p.lambda,
            gamma: p.gamma,
        };
        let opts = SolveOptions {
            tol: p.tol,
            solver: match p.solver {
                VemSolver::Cg => LinearSolver::Cg,
                VemSolver::Direct => LinearSolver::Direct,
                VemSolver::Auto => LinearSolver::Auto,
            },
            ..Default::default()
        };
        let (solution, errors) = check(solve_manufactured(&mesh.0, &case, opts))?;
        *out = Box::into_raw(Box::new(VemSolution { solution, errors }));
        Ok(())
    })
}

/// # Safety
/// `solution` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vem_solution_errors(solution: *const VemSolution, out: *mut VemErrors) -> VemStatus {
    guard(|| {
        let (Some(s), Some(out)) = (solution.as_ref(), out.as_mut()) else {
            return Err(fail(VemStatus::NullPointer, "solution or out is null"));
        };
        *out = VemErrors {
            energy: s.errors.energy,
            l2: s.errors.l2,
        };
        Ok(())
    })
}

/// Number of free DOFs.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vem_solution_num_dofs(solution: *const VemSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.solution.dofs())
}

/// CG iterations, 0 when the direct solver was used.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vem_solution_iterations(solution: *const VemSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.solution.iterations)
}

/// Copies the free DOF values into `buf`, which must hold at least
/// `vem_solution_num_dofs` entries.
///
/// # Safety
/// `solution` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn vem_solution_copy_values(solution: *const VemSolution, buf: *mut f64, len: usize) -> VemStatus {
    guard(|| {
        let Some(s) = solution.as_ref() else {
            return Err(fail(VemStatus::NullPointer, "solution is null"));
        };
        if buf.is_null() {
            return Err(fail(VemStatus::NullPointer, "buf is null"));
        }
        let values = &s.solution.values;
        if len < values.len() {
            return Err(fail(
                VemStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {}", values.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, values.len()).copy_from_slice(values);
        Ok(())
    })
}

/// # Safety
/// `solution` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn vem_solution_free(solution: *mut VemSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}
