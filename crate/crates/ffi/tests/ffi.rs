use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use surf_rd_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(srd_last_error()) }.to_string_lossy().into_owned()
}

fn icosphere(level: u32) -> *mut SrdMesh {
    let mut mesh = ptr::null_mut();
    assert_eq!(unsafe { srd_mesh_icosphere(level, &mut mesh) }, SrdStatus::Ok);
    mesh
}

#[test]
fn mesh_handles() {
    let mesh = icosphere(2);
    unsafe {
        assert_eq!(srd_mesh_n_vertices(mesh), 162);
        assert_eq!(srd_mesh_n_triangles(mesh), 320);
        assert!(srd_mesh_size(mesh) > 0.0);
        let mut xyz = vec![0.0; 3 * 162];
        assert_eq!(srd_mesh_vertices(mesh, xyz.as_mut_ptr(), xyz.len()), SrdStatus::Ok);
        for p in xyz.chunks(3) {
            assert!(((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 1.0).abs() < 1e-14);
        }
        assert_eq!(srd_mesh_vertices(mesh, xyz.as_mut_ptr(), 10), SrdStatus::BufferTooSmall);
        assert!(last_error().contains("486"));
        srd_mesh_free(mesh);

        let mut fib = ptr::null_mut();
        assert_eq!(srd_mesh_fibonacci(500, &mut fib), SrdStatus::Ok);
        assert_eq!(srd_mesh_n_vertices(fib), 500);
        srd_mesh_free(fib);
    }
}

#[test]
fn errors_and_null_handles() {
    unsafe {
        let mut mesh = ptr::null_mut();
        assert_eq!(srd_mesh_icosphere(50, &mut mesh), SrdStatus::InvalidArgument);
        assert!(mesh.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(srd_mesh_icosphere(1, ptr::null_mut()), SrdStatus::NullPointer);
        assert_eq!(srd_mesh_n_vertices(ptr::null()), 0);
        assert!(srd_mesh_size(ptr::null()).is_nan());
        srd_mesh_free(ptr::null_mut());
        srd_operators_free(ptr::null_mut());
        srd_run_free(ptr::null_mut());

        let missing = CString::new("/nonexistent/mesh.off").unwrap();
        assert_eq!(srd_mesh_read_off(missing.as_ptr(), &mut mesh), SrdStatus::MeshError);
        let mut tau = 0.0;
        assert_eq!(srd_max_stable_timestep(9, &mut tau), SrdStatus::InvalidArgument);
    }
}

#[test]
fn read_off_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ico.off");
    let mesh = surf_rd::mesh::generate_icosphere(1).unwrap();
    surf_rd::mesh::write_off(&mesh, &path).unwrap();
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut handle = ptr::null_mut();
    unsafe {
        assert_eq!(srd_mesh_read_off(c_path.as_ptr(), &mut handle), SrdStatus::Ok);
        assert_eq!(srd_mesh_n_vertices(handle), 42);
        srd_mesh_free(handle);
    }
}

#[test]
fn operators_and_rayleigh_quotient() {
    let mesh = icosphere(5);
    unsafe {
        let mut ops = ptr::null_mut();
        assert_eq!(srd_operators_assemble(mesh, &mut ops), SrdStatus::Ok);
        let area = srd_operators_total_area(ops);
        assert!((area - 4.0 * std::f64::consts::PI).abs() < 0.01);
        let n = srd_mesh_n_vertices(mesh);
        let mut xyz = vec![0.0; 3 * n];
        srd_mesh_vertices(mesh, xyz.as_mut_ptr(), xyz.len());
        let xy: Vec<f64> = xyz.chunks(3).map(|p| p[0] * p[1]).collect();
        let mut q = 0.0;
        assert_eq!(srd_operators_rayleigh_quotient(ops, xy.as_ptr(), n, &mut q), SrdStatus::Ok);
        assert!((q - 6.0).abs() < 0.01 * 6.0);
        assert_eq!(srd_operators_rayleigh_quotient(ops, xy.as_ptr(), 3, &mut q), SrdStatus::InvalidArgument);
        srd_operators_free(ops);
        srd_mesh_free(mesh);
    }
}

#[test]
fn time_step_bound() {
    let mut tau = 0.0;
    unsafe {
        assert_eq!(srd_max_stable_timestep(3, &mut tau), SrdStatus::Ok);
        assert!((tau - 1.413e-3).abs() < 1e-6);
        assert_eq!(srd_max_stable_timestep(2, &mut tau), SrdStatus::Ok);
        assert!(tau.is_infinite());
    }
}

#[test]
fn runs() {
    let mesh = icosphere(3);
    unsafe {
        let mut run = ptr::null_mut();
        assert_eq!(srd_run_experiment(mesh, 1, SrdMethod::Lsfem as u32, 0.0, 0.0, &mut run), SrdStatus::Ok);
        assert!(!srd_run_blew_up(run));
        assert!(srd_run_n_steps(run) > 10);
        let mut err = 0.0;
        assert_eq!(srd_run_error(run, &mut err), SrdStatus::Ok);
        assert!(err > 0.0 && err < 2e-3);
        let n = srd_mesh_n_vertices(mesh);
        let mut u = vec![0.0; n];
        assert_eq!(srd_run_final_state(run, 0, u.as_mut_ptr(), n), SrdStatus::Ok);
        assert!(u.iter().all(|v| v.abs() <= 1.0 / 27f64.sqrt()));
        assert_eq!(srd_run_final_state(run, 1, u.as_mut_ptr(), n), SrdStatus::InvalidArgument);
        srd_run_free(run);

        assert_eq!(srd_run_experiment(mesh, 2, SrdMethod::Lsfem as u32, 0.05, 0.5, &mut run), SrdStatus::Ok);
        assert_eq!(srd_run_n_steps(run), 10);
        assert!((srd_run_tau(run) - 0.05).abs() < 1e-15);
        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(srd_run_extrema(run, 0, &mut lo, &mut hi), SrdStatus::Ok);
        assert!(lo >= 0.0 && hi <= 1.0);
        assert_eq!(srd_run_error(run, &mut lo), SrdStatus::InvalidArgument);
        srd_run_free(run);

        assert_eq!(srd_run_experiment(mesh, 1, 7, 0.0, 0.0, &mut run), SrdStatus::InvalidArgument);
        assert_eq!(srd_run_experiment(mesh, 5, 0, 0.0, 0.0, &mut run), SrdStatus::InvalidArgument);
        srd_mesh_free(mesh);
    }
}

#[test]
fn blow_up_is_a_status_not_an_error() {
    let mesh = icosphere(1);
    unsafe {
        let mut run = ptr::null_mut();
        assert_eq!(srd_run_experiment(mesh, 3, SrdMethod::Sfem as u32, 0.0, 0.0, &mut run), SrdStatus::Ok);
        assert!(srd_run_blew_up(run));
        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(srd_run_extrema(run, 1, &mut lo, &mut hi), SrdStatus::Ok);
        assert!(lo.is_finite() && hi.is_finite());
        srd_run_free(run);
        srd_mesh_free(mesh);
    }
}

#[test]
fn header_is_valid_c_and_cpp() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/surf_rd.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["srd_mesh_icosphere", "srd_run_experiment", "srd_last_error", "SRD_STATUS_SOLVER_ERROR"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    for (compiler, file) in [("cc", "check.c"), ("c++", "check.cpp")] {
        let src = dir.path().join(file);
        std::fs::write(
            &src,
            format!(
                "#include \"{}\"\nint main(void) {{ SrdMesh *m = 0; return srd_mesh_icosphere(1, &m) == SRD_STATUS_OK ? 0 : 1; }}\n",
                header.display()
            ),
        )
        .unwrap();
        match Command::new(compiler).arg("-fsyntax-only").arg(&src).output() {
            Ok(out) => assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr)),
            Err(_) => eprintln!("{compiler} not available, skipping"),
        }
    }
}
