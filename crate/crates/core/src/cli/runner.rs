//! Experiment runs, level sweeps and the verification suite.

use std::fmt::Write as _;
use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use super::config::{method_name, ConfigError, MeshSpec};
use super::output::{sci, write_vtk, VtkError};
use super::presets::{preset, Experiment, Preset};
use crate::analysis::{
    convergence_rates, region_violation_scan, verify_matrix_properties, AnalysisError, ErrorTracker,
    MatrixPropertyReport, RegionReport,
};
use crate::assembly::{interpolate, AssemblyError, FemOperators};
use crate::mesh::{generate_fibonacci_delaunay, generate_icosphere, read_off, validate, MeshError, SurfaceMesh};
use crate::timestepper::{
    run_with, LinearSolver, MassMode, RunStatus, SimulationConfig, SimulationResult, Stepper, TimestepError,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("mesh is not a valid closed surface: {0}")]
    InvalidMesh(String),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Timestep(#[from] TimestepError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Vtk(#[from] VtkError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_BLOW_UP: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Mesh(_) | CliError::InvalidMesh(_) => EXIT_CONFIG,
            CliError::Timestep(TimestepError::Solver { .. }) => EXIT_SOLVER,
            CliError::Timestep(_) => EXIT_CONFIG,
            CliError::Assembly(_) | CliError::Analysis(_) | CliError::Vtk(_) | CliError::Io { .. } => EXIT_FAILURE,
        }
    }
}

fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

pub fn build_mesh(spec: &MeshSpec) -> Result<SurfaceMesh, CliError> {
    let mesh = match spec {
        MeshSpec::Icosphere(level) => generate_icosphere(*level)?,
        MeshSpec::Fibonacci(points) => generate_fibonacci_delaunay(*points)?,
        MeshSpec::File(path) => read_off(path)?,
    };
    let report = validate(&mesh);
    if !report.is_valid() {
        return Err(CliError::InvalidMesh(report.summary()));
    }
    Ok(mesh)
}

/// Overrides applied on top of a preset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSettings {
    pub tau: Option<f64>,
    pub t_final: Option<f64>,
    pub diffusion: Option<Vec<f64>>,
    pub solver: Option<LinearSolver>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

/// Outcome of one simulation.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub experiment: Experiment,
    pub method: MassMode,
    pub n_nodes: usize,
    pub h: f64,
    pub tau: f64,
    pub result: SimulationResult,
    /// `max_n ||U^n - I_h u(t_n)||` when an exact solution is known.
    pub error: Option<f64>,
    pub region: Option<RegionReport>,
}

impl RunOutcome {
    pub fn blow_up(&self) -> bool {
        matches!(self.result.status, RunStatus::BlowUp { .. })
    }

    pub fn exit_code(&self) -> i32 {
        if self.blow_up() {
            EXIT_BLOW_UP
        } else {
            EXIT_OK
        }
    }
}

pub fn simulation_config(preset: &Preset, h: f64, method: MassMode, settings: &RunSettings) -> SimulationConfig {
    let t_final = settings.t_final.unwrap_or(preset.t_final);
    let tau = settings.tau.unwrap_or_else(|| preset.tau_rule.tau(h, t_final));
    let diffusion = settings.diffusion.clone().unwrap_or_else(|| preset.diffusion.clone());
    let mut cfg = SimulationConfig::new(diffusion, tau, t_final, method);
    if let Some(solver) = settings.solver {
        cfg.solver = solver;
        cfg.tol = solver.default_tolerance();
    }
    if let Some(tol) = settings.tol {
        cfg.tol = tol;
    }
    if let Some(max_iter) = settings.max_iter {
        cfg.max_iter = max_iter;
    }
    cfg
}

/// Runs `experiment` on `mesh`, calling `observer` on every state.
pub fn simulate_observed(
    experiment: Experiment,
    mesh: &SurfaceMesh,
    ops: &FemOperators,
    method: MassMode,
    settings: &RunSettings,
    mut observer: impl FnMut(usize, f64, &crate::assembly::NodalField),
) -> Result<RunOutcome, CliError> {
    let preset = preset(experiment);
    let h = mesh.mesh_size();
    let config = simulation_config(&preset, h, method, settings);
    let r = preset.model.n_components();
    let u0 = interpolate(mesh, r, preset.initial)?;
    let stepper = Stepper::new(mesh, ops, preset.model.as_ref(), &config)?;
    let mut tracker = preset.exact.as_ref().map(|e| ErrorTracker::new(mesh, ops, e));
    let result = run_with(&stepper, &u0, |step, t, state| {
        if let Some(tr) = tracker.as_mut() {
            tr.observe(step, t, state);
        }
        observer(step, t, state);
    })?;
    let error = match tracker {
        Some(tr) => Some(tr.finish()?.0),
        None => None,
    };
    let region = preset.rectangle.as_ref().map(|rect| region_violation_scan(&result, rect));
    Ok(RunOutcome {
        experiment,
        method,
        n_nodes: mesh.n_vertices(),
        h,
        tau: config.tau,
        result,
        error,
        region,
    })
}

pub fn simulate(
    experiment: Experiment,
    mesh: &SurfaceMesh,
    method: MassMode,
    settings: &RunSettings,
) -> Result<RunOutcome, CliError> {
    let ops = FemOperators::assemble(mesh)?;
    simulate_observed(experiment, mesh, &ops, method, settings, |_, _, _| {})
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub experiment: Experiment,
    pub mesh: MeshSpec,
    pub method: MassMode,
    pub settings: RunSettings,
    pub out: PathBuf,
    /// Write a VTK snapshot every this many steps; zero writes only the
    /// initial and final states.
    pub snapshot_stride: usize,
}

fn component_headers(names: &[&str]) -> String {
    names.iter().map(|n| format!(",min_{n},max_{n}")).collect()
}

/// Per-step extrema as CSV.
pub fn run_csv(result: &SimulationResult, names: &[&str]) -> String {
    let mut s = format!("step,time{},iterations\n", component_headers(names));
    for rec in &result.records {
        let _ = write!(s, "{},{}", rec.step, sci(rec.time));
        for k in 0..rec.min.len() {
            let _ = write!(s, ",{},{}", sci(rec.min[k]), sci(rec.max[k]));
        }
        let _ = writeln!(s, ",{}", rec.iterations);
    }
    s
}

fn status_text(outcome: &RunOutcome) -> String {
    match &outcome.result.status {
        RunStatus::Completed => "completed".into(),
        RunStatus::BlowUp { step, .. } => format!("blow-up at step {step}"),
    }
}

pub fn summary_text(outcome: &RunOutcome, names: &[&str]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "experiment: {}", outcome.experiment);
    let _ = writeln!(s, "method: {}", method_name(outcome.method));
    let _ = writeln!(s, "nodes: {}", outcome.n_nodes);
    let _ = writeln!(s, "h: {}", sci(outcome.h));
    let _ = writeln!(s, "tau: {}", sci(outcome.tau));
    let _ = writeln!(s, "steps: {}", outcome.result.records.len());
    let _ = writeln!(s, "status: {}", status_text(outcome));
    let (min, max) = (outcome.result.global_min(), outcome.result.global_max());
    for (k, name) in names.iter().enumerate() {
        let _ = writeln!(s, "min {name} over [tau, T]: {}", sci(min[k]));
        let _ = writeln!(s, "max {name} over [tau, T]: {}", sci(max[k]));
    }
    if let Some(e) = outcome.error {
        let _ = writeln!(s, "linf-l2 error: {}", sci(e));
    }
    if let Some(region) = &outcome.region {
        match &region.first_violation {
            Some(v) => {
                let _ = writeln!(
                    s,
                    "region: violated at step {} node {} component {} value {}",
                    v.step,
                    v.node,
                    names.get(v.component).unwrap_or(&"?"),
                    sci(v.value)
                );
            }
            None if region.blow_up => {
                let _ = writeln!(s, "region: blow-up");
            }
            None => {
                let _ = writeln!(s, "region: preserved");
            }
        }
    }
    s
}

/// Runs one experiment and writes `run.csv`, `summary.txt`, `error.txt`
/// (when an exact solution exists) and VTK snapshots under `opts.out`.
pub fn run(opts: &RunOptions) -> Result<RunOutcome, CliError> {
    fs::create_dir_all(&opts.out).map_err(io(format!("creating {}", opts.out.display())))?;
    let mesh = build_mesh(&opts.mesh)?;
    let ops = FemOperators::assemble(&mesh)?;
    let names = preset(opts.experiment).component_names;
    let mut last_step = 0;
    let mut vtk_error = None;
    let stride = opts.snapshot_stride;
    let outcome = simulate_observed(opts.experiment, &mesh, &ops, opts.method, &opts.settings, |step, _, state| {
        last_step = step;
        if step == 0 || (stride > 0 && step % stride == 0) {
            let path = opts.out.join(format!("snapshot_{step:06}.vtk"));
            if let Err(e) = write_vtk(&mesh, state, &names, path) {
                vtk_error.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = vtk_error {
        return Err(e.into());
    }
    write_vtk(&mesh, &outcome.result.final_state, &names, opts.out.join("final.vtk"))?;
    let write = |name: &str, content: String| fs::write(opts.out.join(name), content).map_err(io(format!("writing {name}")));
    write("run.csv", run_csv(&outcome.result, &names))?;
    write("summary.txt", summary_text(&outcome, &names))?;
    if let Some(e) = outcome.error {
        write("error.txt", format!("{}\n", sci(e)))?;
    }
    let _ = last_step;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub experiment: Experiment,
    pub levels: RangeInclusive<u32>,
    pub method: MassMode,
    pub settings: RunSettings,
    pub out: PathBuf,
    /// Worker threads; `None` reads `SURF_RD_THREADS`.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub level: u32,
    pub n_nodes: usize,
    pub h: f64,
    pub outcome: Result<RunOutcome, String>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub experiment: Experiment,
    pub method: MassMode,
    pub rows: Vec<SweepRow>,
    /// Rates between successive successful levels, aligned with `rows`.
    pub rates: Vec<Option<f64>>,
    pub table: String,
}

impl SweepReport {
    pub fn errors(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.outcome.as_ref().ok().and_then(|o| o.error)).collect()
    }

    pub fn mean_last_rates(&self, k: usize) -> Option<f64> {
        let rates: Vec<f64> = self.rates.iter().flatten().copied().collect();
        (k > 0 && rates.len() >= k).then(|| rates[rates.len() - k..].iter().sum::<f64>() / k as f64)
    }
}

pub fn thread_count(explicit: Option<usize>) -> Option<usize> {
    explicit
        .or_else(|| std::env::var("SURF_RD_THREADS").ok().and_then(|v| v.trim().parse().ok()))
        .filter(|&n| n > 0)
}

fn run_level(opts: &SweepOptions, level: u32) -> SweepRow {
    let mesh = match generate_icosphere(level) {
        Ok(m) => m,
        Err(e) => {
            return SweepRow {
                level,
                n_nodes: 0,
                h: f64::NAN,
                outcome: Err(e.to_string()),
            }
        }
    };
    let run_opts = RunOptions {
        experiment: opts.experiment,
        mesh: MeshSpec::Icosphere(level),
        method: opts.method,
        settings: opts.settings.clone(),
        out: opts.out.join(format!("level_{level}")),
        snapshot_stride: 0,
    };
    SweepRow {
        level,
        n_nodes: mesh.n_vertices(),
        h: mesh.mesh_size(),
        outcome: run(&run_opts).map_err(|e| e.to_string()),
    }
}

fn sweep_table(experiment: Experiment, rows: &[SweepRow], rates: &[Option<f64>]) -> String {
    let names = preset(experiment).component_names;
    let has_exact = preset(experiment).exact.is_some();
    let mut s = String::new();
    if has_exact {
        s.push_str("i,N,h,error,rate,tau,status\n");
    } else {
        let _ = writeln!(s, "i,N,h,tau{},region,status", component_headers(&names));
    }
    for (row, rate) in rows.iter().zip(rates) {
        let _ = write!(s, "{},{},{}", row.level, row.n_nodes, sci(row.h));
        match &row.outcome {
            Ok(o) => {
                let status = status_text(o);
                if has_exact {
                    let rate = rate.map(sci).unwrap_or_default();
                    let _ = writeln!(s, ",{},{},{},{}", o.error.map_or("nan".into(), sci), rate, sci(o.tau), status);
                } else {
                    let _ = write!(s, ",{}", sci(o.tau));
                    let (min, max) = match &o.result.status {
                        RunStatus::BlowUp { last_min, last_max, .. } if o.result.records.is_empty() => {
                            (last_min.clone(), last_max.clone())
                        }
                        _ => (o.result.global_min(), o.result.global_max()),
                    };
                    for k in 0..names.len() {
                        let _ = write!(s, ",{},{}", sci(min[k]), sci(max[k]));
                    }
                    let region = match &o.region {
                        Some(r) if r.violated() => "violated",
                        Some(_) => "preserved",
                        None => "",
                    };
                    let _ = writeln!(s, ",{region},{status}");
                }
            }
            Err(msg) => {
                let blanks = if has_exact { ",,,".to_string() } else { ",".repeat(2 + 2 * names.len()) };
                let _ = writeln!(s, "{blanks},failed: {}", msg.replace([',', '\n'], ";"));
            }
        }
    }
    s
}

/// Runs every level (in parallel when threads allow) and writes `table.csv`.
pub fn sweep(opts: &SweepOptions) -> Result<SweepReport, CliError> {
    if opts.levels.is_empty() || opts.levels.start() == opts.levels.end() {
        return Err(ConfigError::Argument("a sweep needs at least two levels".into()).into());
    }
    fs::create_dir_all(&opts.out).map_err(io(format!("creating {}", opts.out.display())))?;
    let levels: Vec<u32> = opts.levels.clone().collect();
    let rows: Vec<SweepRow> = match thread_count(opts.threads) {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| ConfigError::Argument(format!("thread pool: {e}")))?;
            pool.install(|| levels.par_iter().map(|&l| run_level(opts, l)).collect())
        }
        None => levels.par_iter().map(|&l| run_level(opts, l)).collect(),
    };
    let mut rates = vec![None; rows.len()];
    let ok: Vec<(usize, f64, f64)> = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| match &r.outcome {
            Ok(o) if !o.blow_up() => o.error.filter(|e| *e > 0.0).map(|e| (i, e, r.h)),
            _ => None,
        })
        .collect();
    if ok.len() >= 2 {
        let errors: Vec<f64> = ok.iter().map(|t| t.1).collect();
        let hs: Vec<f64> = ok.iter().map(|t| t.2).collect();
        for (slot, rate) in ok.iter().zip(convergence_rates(&errors, &hs)?) {
            rates[slot.0] = rate;
        }
    }
    let table = sweep_table(opts.experiment, &rows, &rates);
    fs::write(opts.out.join("table.csv"), &table).map_err(io("writing table.csv"))?;
    Ok(SweepReport {
        experiment: opts.experiment,
        method: opts.method,
        rows,
        rates,
        table,
    })
}

pub const VERIFY_SHIFTS: [f64; 3] = [1e-3, 1e-1, 1.0];

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub level: u32,
    pub n_nodes: usize,
    pub valid: bool,
    pub matrix: MatrixPropertyReport,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.valid && self.angle_pass() && self.matrix.pass()
    }

    fn angle_pass(&self) -> bool {
        self.matrix.angle.pass
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "icosphere level {}: {} nodes", self.level, self.n_nodes);
        let _ = writeln!(s, "mesh valid: {}", self.valid);
        let _ = writeln!(
            s,
            "angle condition: {} (worst opposite-angle sum {:.6} rad, {} violations)",
            if self.angle_pass() { "pass" } else { "FAIL" },
            self.matrix.angle.worst_sum,
            self.matrix.angle.violations.len()
        );
        let _ = writeln!(
            s,
            "positive off-diagonal stiffness entries: {} (consistent with angle check: {})",
            self.matrix.positive_off_diagonals.len(),
            self.matrix.sign_pattern_consistent
        );
        for sh in &self.matrix.shifts {
            let _ = writeln!(
                s,
                "s = {}: min entry {}, row-sum defect {}, max CG iterations {} -> {}",
                sci(sh.s),
                sci(sh.min_entry),
                sci(sh.row_sum_defect),
                sh.max_iterations,
                if sh.pass(1e-12, 1e-9) { "pass" } else { "FAIL" }
            );
        }
        let _ = writeln!(s, "overall: {}", if self.pass() { "pass" } else { "FAIL" });
        s
    }
}

pub fn verify(level: u32) -> Result<VerifyReport, CliError> {
    let mesh = generate_icosphere(level)?;
    let valid = validate(&mesh).is_valid();
    let ops = FemOperators::assemble(&mesh)?;
    let matrix = verify_matrix_properties(&mesh, &ops, &VERIFY_SHIFTS)?;
    Ok(VerifyReport {
        level,
        n_nodes: mesh.n_vertices(),
        valid,
        matrix,
    })
}

/// Text report for `mesh check`; the flag says whether the mesh is valid.
pub fn check_mesh_file(path: &Path) -> Result<(String, bool), CliError> {
    let mesh = read_off(path)?;
    let report = validate(&mesh);
    let angle = crate::mesh::check_angle_condition(&mesh);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{}: {} vertices, {} triangles, {} edges",
        path.display(),
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.n_edges()
    );
    let _ = writeln!(s, "valid: {}", report.is_valid());
    if !report.is_valid() {
        let _ = writeln!(s, "{}", report.summary());
    } else {
        let _ = writeln!(s, "h: {}", sci(mesh.mesh_size()));
        let _ = writeln!(s, "area: {}", sci(mesh.surface_area()));
    }
    let _ = writeln!(
        s,
        "angle condition: {} (worst sum {:.6} rad, {} violating edges)",
        if angle.pass { "pass" } else { "fail" },
        angle.worst_sum,
        angle.violations.len()
    );
    Ok((s, report.is_valid()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config(ConfigError::Argument("x".into())).exit_code(), EXIT_CONFIG);
        let solver = TimestepError::Solver {
            step: 1,
            component: 0,
            source: crate::sparse::SparseError::NonFinite,
        };
        assert_eq!(CliError::Timestep(solver).exit_code(), EXIT_SOLVER);
    }

    #[test]
    fn exp2_lumped_run_on_coarse_mesh_keeps_sign() {
        let mesh = generate_icosphere(2).unwrap();
        let out = simulate(Experiment::Exp2, &mesh, MassMode::Lumped, &RunSettings::default()).unwrap();
        assert!(out.result.completed());
        assert!(out.result.global_min()[0] >= 0.0);
        assert!(!out.region.unwrap().violated());
    }

    #[test]
    fn csv_layout() {
        let mesh = generate_icosphere(1).unwrap();
        let settings = RunSettings {
            t_final: Some(0.2),
            tau: Some(0.1),
            ..RunSettings::default()
        };
        let out = simulate(Experiment::Exp4, &mesh, MassMode::Consistent, &settings).unwrap();
        let csv = run_csv(&out.result, &["u", "v"]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "step,time,min_u,max_u,min_v,max_v,iterations");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,1.00000e-01,"));
    }
}
