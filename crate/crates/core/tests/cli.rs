use std::path::Path;
use std::process::{Command, Output};

use surf_rd::cli::{load_config, read_vtk, Experiment, MeshSpec};
use surf_rd::timestepper::MassMode;

fn surf_rd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surf-rd")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("exp1");
    let out = surf_rd(&[
        "run", "--experiment", "exp1", "--level", "2", "--method", "lsfem", "--out", path(&out_dir),
        "--snapshot-stride", "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["final.vtk", "run.csv", "summary.txt", "error.txt", "snapshot_000000.vtk", "snapshot_000002.vtk"] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }
    let vtk = read_vtk(out_dir.join("final.vtk")).unwrap();
    assert_eq!(vtk.points.len(), 162);
    assert_eq!(vtk.scalars[0].0, "u");
    let csv = std::fs::read_to_string(out_dir.join("run.csv")).unwrap();
    assert!(csv.lines().count() > 2);
    let error: f64 = std::fs::read_to_string(out_dir.join("error.txt")).unwrap().trim().parse().unwrap();
    assert!(error > 0.0 && error < 1e-2);
}

#[test]
fn config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("cfg");
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "[mesh]\nkind = \"fibonacci\"\npoints = 200\n\n[model]\nexperiment = \"exp2\"\nmethod = \"lsfem\"\n\n\
             [time]\ntau = 0.05\nt_final = 0.2\n\n[output]\ndir = \"{}\"\n",
            out_dir.display()
        ),
    )
    .unwrap();
    let parsed = load_config(&cfg).unwrap();
    assert_eq!(parsed.mesh, Some(MeshSpec::Fibonacci(200)));
    assert_eq!(parsed.experiment, Some(Experiment::Exp2));
    assert_eq!(parsed.method, Some(MassMode::Lumped));
    let out = surf_rd(&["run", "--config", path(&cfg)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("final.vtk").exists());
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[time]\ntau = -1.0\n").unwrap();
    let out = surf_rd(&["run", "--config", path(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let o = path(dir.path());
    assert_eq!(code(&surf_rd(&["run", "--experiment", "exp9", "--level", "1", "--method", "lsfem", "--out", o])), 2);
    assert_eq!(code(&surf_rd(&["run", "--experiment", "exp1", "--level", "1", "--method", "fem", "--out", o])), 2);
    assert_eq!(code(&surf_rd(&["run", "--experiment", "exp1", "--level", "1", "--method", "lsfem", "--tau", "0", "--out", o])), 2);
    assert_eq!(code(&surf_rd(&["sweep", "--experiment", "exp1", "--levels", "2..2", "--method", "lsfem", "--out", o])), 2);
    assert_eq!(code(&surf_rd(&["frobnicate"])), 2);
}

#[test]
fn solver_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("solver.toml");
    std::fs::write(&cfg, "[solver]\nkind = \"cg\"\ntol = 1e-14\nmax_iter = 1\n").unwrap();
    let out = surf_rd(&[
        "run", "--config", path(&cfg), "--experiment", "exp1", "--level", "3", "--method", "sfem", "--out",
        path(&dir.path().join("o")),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn blow_up_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = surf_rd(&[
        "run", "--experiment", "exp3", "--level", "1", "--method", "sfem", "--out", path(&dir.path().join("o")),
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("o/summary.txt").exists());
}

#[test]
fn mesh_generation_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let off = dir.path().join("ico.off");
    assert_eq!(code(&surf_rd(&["mesh", "gen", "--kind", "icosphere", "--level", "2", "--out", path(&off)])), 0);
    let out = surf_rd(&["mesh", "check", path(&off)]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("162"));

    let fib = dir.path().join("fib.off");
    assert_eq!(code(&surf_rd(&["mesh", "gen", "--kind", "fibonacci", "--points", "300", "--out", path(&fib)])), 0);
    assert_eq!(code(&surf_rd(&["mesh", "check", path(&fib)])), 0);

    // Drop one triangle: the surface is no longer closed.
    let text = std::fs::read_to_string(&off).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.pop();
    let header = lines[1].replace("320", "319");
    lines[1] = &header;
    let open = dir.path().join("open.off");
    std::fs::write(&open, lines.join("\n")).unwrap();
    assert_eq!(code(&surf_rd(&["mesh", "check", path(&open)])), 1);

    assert_eq!(code(&surf_rd(&["mesh", "check", path(&dir.path().join("missing.off"))])), 2);
    assert_eq!(code(&surf_rd(&["mesh", "gen", "--kind", "icosphere", "--points", "5", "--out", path(&off)])), 2);
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = surf_rd(&[
        "sweep", "--experiment", "exp1", "--levels", "1..3", "--method", "lsfem", "--out", path(dir.path()),
        "--threads", "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "i,N,h,error,rate,tau,status");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1,42,"));
    assert!(dir.path().join("level_3/final.vtk").exists());
}

#[test]
fn verify_passes_on_small_icospheres() {
    let out = surf_rd(&["verify", "--level", "2"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("overall: pass"));
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for o in [&a, &b] {
        let out = surf_rd(&["run", "--experiment", "exp4", "--level", "2", "--method", "sfem", "--out", path(o)]);
        assert_eq!(code(&out), 0);
    }
    for f in ["run.csv", "final.vtk", "error.txt"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}
