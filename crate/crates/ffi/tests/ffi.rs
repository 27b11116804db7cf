use std::ffi::{CStr, CString};
use std::ptr;

use vem_elasticity_ffi::*;

fn last_error() -> String {
    let p = vem_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn generate(family: VemFamily, n: usize) -> *mut VemMesh {
    let mut mesh = ptr::null_mut();
    assert_eq!(unsafe { vem_mesh_generate(family, n, 7, &mut mesh) }, VemStatus::Ok);
    assert!(!mesh.is_null());
    mesh
}

#[test]
fn generate_solve_and_read_back() {
    let mesh = generate(VemFamily::Square, 4);
    unsafe {
        assert_eq!(vem_mesh_num_polygons(mesh), 16);
        assert_eq!(vem_mesh_num_vertices(mesh), 25);
        assert_eq!(vem_mesh_num_edges(mesh), 40);
        assert!((vem_mesh_h(mesh) - 2f64.sqrt() / 4.0).abs() < 1e-15);

        let params = vem_solve_params_default();
        let mut sol = ptr::null_mut();
        assert_eq!(vem_solve_manufactured(mesh, &params, &mut sol), VemStatus::Ok);
        // interior edges times two components
        assert_eq!(vem_solution_num_dofs(sol), 48);
        assert!(vem_solution_iterations(sol) > 0);
        let mut e = VemErrors::default();
        assert_eq!(vem_solution_errors(sol, &mut e), VemStatus::Ok);
        assert!(e.energy > 0.0 && e.l2 > 0.0);

        let mut small = vec![0.0; 10];
        assert_eq!(
            vem_solution_copy_values(sol, small.as_mut_ptr(), small.len()),
            VemStatus::BufferTooSmall
        );
        assert!(last_error().contains("need 48"));
        let mut buf = vec![f64::NAN; 48];
        assert_eq!(vem_solution_copy_values(sol, buf.as_mut_ptr(), buf.len()), VemStatus::Ok);
        assert!(buf.iter().all(|v| v.is_finite()));

        vem_solution_free(sol);
        vem_mesh_free(mesh);
    }
}

#[test]
fn save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("v.mesh").to_str().unwrap()).unwrap();
    let mesh = generate(VemFamily::Voronoi, 3);
    unsafe {
        assert_eq!(vem_mesh_save(mesh, path.as_ptr()), VemStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(vem_mesh_load(path.as_ptr(), &mut loaded), VemStatus::Ok);
        assert_eq!(vem_mesh_num_polygons(loaded), vem_mesh_num_polygons(mesh));
        assert_eq!(vem_mesh_num_edges(loaded), vem_mesh_num_edges(mesh));
        assert_eq!(vem_mesh_h(loaded), vem_mesh_h(mesh));
        vem_mesh_free(loaded);
        vem_mesh_free(mesh);
    }
}

#[test]
fn error_codes() {
    unsafe {
        assert_eq!(vem_mesh_generate(VemFamily::Hex, 2, 0, ptr::null_mut()), VemStatus::NullPointer);

        let mut mesh = ptr::null_mut();
        let missing = CString::new("/nonexistent/dir/x.mesh").unwrap();
        assert_eq!(vem_mesh_load(missing.as_ptr(), &mut mesh), VemStatus::IoError);
        assert!(mesh.is_null());

        let mut mesh = ptr::null_mut();
        assert_eq!(vem_mesh_generate(VemFamily::Square, 0, 0, &mut mesh), VemStatus::InvalidArgument);
        assert!(mesh.is_null());

        // one square has no interior edge
        let single = generate(VemFamily::Square, 1);
        let mut sol = ptr::null_mut();
        let params = vem_solve_params_default();
        assert_eq!(vem_solve_manufactured(single, &params, &mut sol), VemStatus::MeshError);
        assert!(last_error().contains("no free degrees of freedom"));
        assert!(sol.is_null());

        let mesh = generate(VemFamily::Square, 2);
        let bad = VemSolveParams { mu: -1.0, ..params };
        assert_eq!(vem_solve_manufactured(mesh, &bad, &mut sol), VemStatus::InvalidArgument);
        vem_mesh_free(mesh);
        vem_mesh_free(single);

        // null handles are tolerated by the accessors
        assert_eq!(vem_mesh_num_polygons(ptr::null()), 0);
        assert!(vem_mesh_h(ptr::null()).is_nan());
        vem_mesh_free(ptr::null_mut());
        vem_solution_free(ptr::null_mut());
    }
}

#[test]
fn stalled_cg_reports_solver_error() {
    let mesh = generate(VemFamily::Square, 16);
    let params = VemSolveParams {
        lambda: 1e4,
        ..vem_solve_params_default()
    };
    let mut sol = ptr::null_mut();
    unsafe {
        assert_eq!(vem_solve_manufactured(mesh, &params, &mut sol), VemStatus::SolverError);
        let auto = VemSolveParams {
            solver: VemSolver::Auto,
            ..params
        };
        assert_eq!(vem_solve_manufactured(mesh, &auto, &mut sol), VemStatus::Ok);
        assert_eq!(vem_solution_iterations(sol), 0);
        vem_solution_free(sol);
        vem_mesh_free(mesh);
    }
}
