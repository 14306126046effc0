//! IMEX Euler time stepping: diffusion implicit, reaction explicit.
//!
//! Each step and component solves
//! `(M + d_k tau A) xi_k^{n+1} = M (xi_k^n + tau f_k(xi^n, x, t_n))`
//! with `M` the lumped mass (LSFEM) or the consistent mass (SFEM). The
//! reaction is evaluated nodewise in both modes.

use thiserror::Error;

use crate::assembly::{FemOperators, NodalField};
use crate::kinetics::Kinetics;
use crate::mesh::SurfaceMesh;
use crate::sparse::{
    cg_solve_preconditioned, gauss_seidel_solve, CsrMatrix, JacobiPreconditioner, SolveStats, SparseError,
};

/// Values beyond this magnitude count as blow-up.
pub const BLOW_UP_THRESHOLD: f64 = 1e100;

#[derive(Debug, Error, PartialEq)]
pub enum TimestepError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("linear solve failed at step {step}, component {component}: {source}")]
    Solver {
        step: usize,
        component: usize,
        source: SparseError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassMode {
    /// Diagonal lumped mass (LSFEM).
    Lumped,
    /// Consistent mass (SFEM).
    Consistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearSolver {
    /// Jacobi-preconditioned conjugate gradients.
    ConjugateGradient,
    /// Gauss-Seidel sweeps warm-started from the explicit stage. Iterates keep
    /// the bounds of the lumped scheme when `M + d tau A` is an M-matrix.
    GaussSeidel,
}

impl MassMode {
    pub fn default_solver(self) -> LinearSolver {
        match self {
            MassMode::Lumped => LinearSolver::GaussSeidel,
            MassMode::Consistent => LinearSolver::ConjugateGradient,
        }
    }
}

impl LinearSolver {
    pub fn default_tolerance(self) -> f64 {
        match self {
            LinearSolver::ConjugateGradient => 1e-10,
            LinearSolver::GaussSeidel => 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub diffusion: Vec<f64>,
    pub tau: f64,
    pub t_final: f64,
    pub mass_mode: MassMode,
    pub solver: LinearSolver,
    pub tol: f64,
    pub max_iter: usize,
    /// Keep every `snapshot_stride`-th state (including the initial one);
    /// zero keeps none.
    pub snapshot_stride: usize,
}

impl SimulationConfig {
    pub fn new(diffusion: Vec<f64>, tau: f64, t_final: f64, mass_mode: MassMode) -> Self {
        let solver = mass_mode.default_solver();
        SimulationConfig {
            diffusion,
            tau,
            t_final,
            mass_mode,
            solver,
            tol: solver.default_tolerance(),
            max_iter: 10_000,
            snapshot_stride: 0,
        }
    }

    pub fn validate(&self) -> Result<(), TimestepError> {
        let bad = |m: String| Err(TimestepError::InvalidConfig(m));
        if self.diffusion.is_empty() {
            return bad("no diffusion coefficients".into());
        }
        if let Some(d) = self.diffusion.iter().find(|&&d| !(d > 0.0 && d.is_finite())) {
            return bad(format!("diffusion coefficient {d} must be positive"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau = {} must be positive", self.tau));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final = {} must be positive", self.t_final));
        }
        if self.tau > self.t_final {
            return bad(format!("tau = {} exceeds t_final = {}", self.tau, self.t_final));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return bad("solver tolerance and max_iter must be positive".into());
        }
        Ok(())
    }

    /// `ceil(t_final / tau)`, treating ratios within `1e-9` of an integer as
    /// exact.
    pub fn n_steps(&self) -> usize {
        let ratio = self.t_final / self.tau;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            ratio.ceil() as usize
        }
    }
}

/// Per-step nodal extrema.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub argmin: Vec<usize>,
    pub argmax: Vec<usize>,
    /// Solver iterations summed over components.
    pub iterations: usize,
}

impl StepRecord {
    pub fn from_field(step: usize, time: f64, field: &NodalField, iterations: usize) -> Self {
        let r = field.n_components();
        let mut rec = StepRecord {
            step,
            time,
            min: vec![f64::INFINITY; r],
            max: vec![f64::NEG_INFINITY; r],
            argmin: vec![0; r],
            argmax: vec![0; r],
            iterations,
        };
        for k in 0..r {
            for (i, &v) in field.component(k).iter().enumerate() {
                if v < rec.min[k] {
                    rec.min[k] = v;
                    rec.argmin[k] = i;
                }
                if v > rec.max[k] {
                    rec.max[k] = v;
                    rec.argmax[k] = i;
                }
            }
        }
        rec
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub field: NodalField,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    /// A non-finite value or one beyond [`BLOW_UP_THRESHOLD`] appeared at
    /// `step`; the extrema are those of the last finite state.
    BlowUp {
        step: usize,
        last_min: Vec<f64>,
        last_max: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    /// Last accepted state.
    pub final_state: NodalField,
    /// Extrema of steps `1..=n`; the initial state is not included.
    pub records: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot>,
    pub status: RunStatus,
    pub tau: f64,
}

impl SimulationResult {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    /// Per-component minima over all recorded steps.
    pub fn global_min(&self) -> Vec<f64> {
        let r = self.final_state.n_components();
        self.records.iter().fold(vec![f64::INFINITY; r], |acc, rec| {
            acc.iter().zip(&rec.min).map(|(a, b)| a.min(*b)).collect()
        })
    }

    /// Per-component maxima over all recorded steps.
    pub fn global_max(&self) -> Vec<f64> {
        let r = self.final_state.n_components();
        self.records.iter().fold(vec![f64::NEG_INFINITY; r], |acc, rec| {
            acc.iter().zip(&rec.max).map(|(a, b)| a.max(*b)).collect()
        })
    }
}

/// System matrix `M + d tau A` and its preconditioner for one diffusion
/// coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveContext {
    pub diffusion: f64,
    pub matrix: CsrMatrix,
    pub preconditioner: JacobiPreconditioner,
}

impl SolveContext {
    pub fn new(ops: &FemOperators, diffusion: f64, tau: f64, mode: MassMode) -> Result<Self, SparseError> {
        let s = diffusion * tau;
        let matrix = match mode {
            MassMode::Lumped => ops.stiffness.shifted(ops.lumped_mass.values(), s)?,
            MassMode::Consistent => ops.consistent_mass.linear_combination(1.0, &ops.stiffness, s)?,
        };
        let preconditioner = JacobiPreconditioner::new(&matrix.diagonal())?;
        Ok(SolveContext {
            diffusion,
            matrix,
            preconditioner,
        })
    }
}

/// Solve contexts for every component; components with equal diffusion
/// share one context.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorCache {
    contexts: Vec<SolveContext>,
    component: Vec<usize>,
}

impl FactorCache {
    pub fn contexts(&self) -> &[SolveContext] {
        &self.contexts
    }

    pub fn context(&self, k: usize) -> &SolveContext {
        &self.contexts[self.component[k]]
    }
}

pub fn factor_cache(
    ops: &FemOperators,
    diffusion: &[f64],
    tau: f64,
    mode: MassMode,
) -> Result<FactorCache, SparseError> {
    let mut contexts: Vec<SolveContext> = Vec::new();
    let mut component = Vec::with_capacity(diffusion.len());
    for &d in diffusion {
        match contexts.iter().position(|c| c.diffusion == d) {
            Some(i) => component.push(i),
            None => {
                contexts.push(SolveContext::new(ops, d, tau, mode)?);
                component.push(contexts.len() - 1);
            }
        }
    }
    Ok(FactorCache { contexts, component })
}

/// Everything that stays fixed during a run.
pub struct Stepper<'a> {
    mesh: &'a SurfaceMesh,
    ops: &'a FemOperators,
    model: &'a dyn Kinetics,
    config: &'a SimulationConfig,
    cache: Option<FactorCache>,
}

impl<'a> Stepper<'a> {
    pub fn new(
        mesh: &'a SurfaceMesh,
        ops: &'a FemOperators,
        model: &'a dyn Kinetics,
        config: &'a SimulationConfig,
    ) -> Result<Self, TimestepError> {
        let mut stepper = Self::uncached(mesh, ops, model, config)?;
        stepper.cache = Some(
            factor_cache(ops, &config.diffusion, config.tau, config.mass_mode)
                .map_err(|source| TimestepError::Solver { step: 0, component: 0, source })?,
        );
        Ok(stepper)
    }

    /// Rebuilds the system matrices on every step.
    pub fn uncached(
        mesh: &'a SurfaceMesh,
        ops: &'a FemOperators,
        model: &'a dyn Kinetics,
        config: &'a SimulationConfig,
    ) -> Result<Self, TimestepError> {
        config.validate()?;
        let r = model.n_components();
        if config.diffusion.len() != r {
            return Err(TimestepError::DimensionMismatch {
                expected: r,
                got: config.diffusion.len(),
            });
        }
        if ops.n_nodes() != mesh.n_vertices() {
            return Err(TimestepError::DimensionMismatch {
                expected: mesh.n_vertices(),
                got: ops.n_nodes(),
            });
        }
        Ok(Stepper {
            mesh,
            ops,
            model,
            config,
            cache: None,
        })
    }

    /// Explicit stage `w = xi^n + tau f(xi^n, x, t_n)`.
    fn explicit_stage(&self, state: &NodalField, n: usize) -> NodalField {
        let r = state.n_components();
        let t = n as f64 * self.config.tau;
        let mut w = state.clone();
        let mut u = vec![0.0; r];
        let mut f = vec![0.0; r];
        for (i, &x) in self.mesh.vertices().iter().enumerate() {
            for (k, uk) in u.iter_mut().enumerate() {
                *uk = state.component(k)[i];
            }
            self.model.eval(&u, x, t, &mut f);
            for (k, fk) in f.iter().enumerate() {
                w.component_mut(k)[i] += self.config.tau * fk;
            }
        }
        w
    }

    /// Advances `state` (the solution at step `n`) by one step. Returns the
    /// new state and the solver iterations summed over components.
    pub fn step(&self, state: &NodalField, n: usize) -> Result<(NodalField, usize), TimestepError> {
        if state.n_components() != self.model.n_components() || state.n_nodes() != self.mesh.n_vertices() {
            return Err(TimestepError::DimensionMismatch {
                expected: self.model.n_components() * self.mesh.n_vertices(),
                got: state.values().len(),
            });
        }
        let w = self.explicit_stage(state, n);
        let mut next = w.clone();
        let mut iterations = 0;
        if !w.is_finite() {
            // Reaction overflow: hand the non-finite stage to blow-up detection.
            return Ok((next, 0));
        }
        for k in 0..state.n_components() {
            let fresh;
            let ctx = match &self.cache {
                Some(cache) => cache.context(k),
                None => {
                    fresh = SolveContext::new(self.ops, self.config.diffusion[k], self.config.tau, self.config.mass_mode)
                        .map_err(|source| TimestepError::Solver { step: n + 1, component: k, source })?;
                    &fresh
                }
            };
            let wk = w.component(k);
            let rhs = match self.config.mass_mode {
                MassMode::Lumped => self.ops.lumped_mass.apply_to(wk),
                MassMode::Consistent => self.ops.consistent_mass.matvec(wk).expect("sizes checked"),
            };
            let stats = self
                .solve(ctx, &rhs, state.component(k), next.component_mut(k))
                .map_err(|source| TimestepError::Solver { step: n + 1, component: k, source })?;
            iterations += stats.iterations;
        }
        Ok((next, iterations))
    }

    /// Solves with the initial guess already stored in `x` for Gauss-Seidel
    /// (the explicit stage) and `previous` for CG.
    fn solve(&self, ctx: &SolveContext, rhs: &[f64], previous: &[f64], x: &mut [f64]) -> Result<SolveStats, SparseError> {
        let cfg = self.config;
        match cfg.solver {
            LinearSolver::GaussSeidel => gauss_seidel_solve(&ctx.matrix, rhs, x, cfg.tol, cfg.max_iter),
            LinearSolver::ConjugateGradient => {
                let (sol, stats) = cg_solve_preconditioned(
                    &ctx.matrix,
                    rhs,
                    Some(previous),
                    cfg.tol,
                    cfg.max_iter,
                    Some(&ctx.preconditioner),
                )?;
                x.copy_from_slice(&sol);
                Ok(stats)
            }
        }
    }
}

fn blown_up(field: &NodalField) -> bool {
    field.values().iter().any(|v| !(v.abs() <= BLOW_UP_THRESHOLD))
}

/// Single step, exposed for property tests.
pub fn imex_euler_step(
    mesh: &SurfaceMesh,
    ops: &FemOperators,
    model: &dyn Kinetics,
    config: &SimulationConfig,
    state: &NodalField,
    n: usize,
) -> Result<NodalField, TimestepError> {
    Ok(Stepper::uncached(mesh, ops, model, config)?.step(state, n)?.0)
}

pub fn imex_euler_run(
    mesh: &SurfaceMesh,
    ops: &FemOperators,
    model: &dyn Kinetics,
    u0: &NodalField,
    config: &SimulationConfig,
) -> Result<SimulationResult, TimestepError> {
    imex_euler_run_observed(mesh, ops, model, u0, config, |_, _, _| {})
}

/// [`imex_euler_run`] calling `observer(step, time, state)` for the initial
/// state and after every accepted step.
pub fn imex_euler_run_observed(
    mesh: &SurfaceMesh,
    ops: &FemOperators,
    model: &dyn Kinetics,
    u0: &NodalField,
    config: &SimulationConfig,
    observer: impl FnMut(usize, f64, &NodalField),
) -> Result<SimulationResult, TimestepError> {
    let stepper = Stepper::new(mesh, ops, model, config)?;
    run_with(&stepper, u0, observer)
}

/// Runs the full time loop on a prepared [`Stepper`].
pub fn run_with(
    stepper: &Stepper<'_>,
    u0: &NodalField,
    mut observer: impl FnMut(usize, f64, &NodalField),
) -> Result<SimulationResult, TimestepError> {
    let config = stepper.config;
    if u0.n_components() != stepper.model.n_components() || u0.n_nodes() != stepper.mesh.n_vertices() {
        return Err(TimestepError::DimensionMismatch {
            expected: stepper.model.n_components() * stepper.mesh.n_vertices(),
            got: u0.values().len(),
        });
    }
    let n_steps = config.n_steps();
    let stride = config.snapshot_stride;
    let mut snapshots = Vec::new();
    if stride > 0 {
        snapshots.push(Snapshot {
            step: 0,
            time: 0.0,
            field: u0.clone(),
        });
    }
    observer(0, 0.0, u0);
    let mut records: Vec<StepRecord> = Vec::with_capacity(n_steps);
    let mut state = u0.clone();
    for n in 0..n_steps {
        let (next, iterations) = stepper.step(&state, n)?;
        let step = n + 1;
        let time = step as f64 * config.tau;
        if blown_up(&next) {
            let last = StepRecord::from_field(n, n as f64 * config.tau, &state, 0);
            return Ok(SimulationResult {
                final_state: state,
                records,
                snapshots,
                status: RunStatus::BlowUp {
                    step,
                    last_min: last.min,
                    last_max: last.max,
                },
                tau: config.tau,
            });
        }
        records.push(StepRecord::from_field(step, time, &next, iterations));
        if stride > 0 && step % stride == 0 {
            snapshots.push(Snapshot {
                step,
                time,
                field: next.clone(),
            });
        }
        observer(step, time, &next);
        state = next;
    }
    Ok(SimulationResult {
        final_state: state,
        records,
        snapshots,
        status: RunStatus::Completed,
        tau: config.tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{interpolate_scalar, FemOperators};
    use crate::kinetics::SemilinearDecay;
    use crate::mesh::generate_icosphere;

    fn setup(level: u32) -> (SurfaceMesh, FemOperators) {
        let mesh = generate_icosphere(level).unwrap();
        let ops = FemOperators::assemble(&mesh).unwrap();
        (mesh, ops)
    }

    #[test]
    fn step_count_rounds_up() {
        let c = |tau: f64, t: f64| SimulationConfig::new(vec![1.0], tau, t, MassMode::Lumped).n_steps();
        assert_eq!(c(0.1, 1.0), 10);
        assert_eq!(c(0.3, 1.0), 4);
        assert_eq!(c(1e-3, 5.0), 5000);
        assert_eq!(c(1.0 / 3.0, 1.0), 3);
    }

    #[test]
    fn config_validation() {
        let ok = SimulationConfig::new(vec![0.1], 0.1, 1.0, MassMode::Lumped);
        assert!(ok.validate().is_ok());
        for bad in [
            SimulationConfig { diffusion: vec![0.0], ..ok.clone() },
            SimulationConfig { tau: -1.0, ..ok.clone() },
            SimulationConfig { tau: 2.0, ..ok.clone() },
            SimulationConfig { t_final: f64::NAN, ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(TimestepError::InvalidConfig(_))));
        }
    }

    #[test]
    fn constant_heat_is_stationary() {
        let (mesh, ops) = setup(2);
        let model = SemilinearDecay::heat(1.0);
        let u0 = NodalField::constant(1, mesh.n_vertices(), 0.7);
        for mode in [MassMode::Lumped, MassMode::Consistent] {
            let cfg = SimulationConfig::new(vec![0.3], 0.05, 0.5, mode);
            let res = imex_euler_run(&mesh, &ops, &model, &u0, &cfg).unwrap();
            for v in res.final_state.values() {
                assert!((v - 0.7).abs() < 1e-13);
            }
            assert_eq!(res.records.len(), 10);
        }
    }

    #[test]
    fn constant_decay_follows_scalar_recursion() {
        let (mesh, ops) = setup(2);
        let model = SemilinearDecay::new(0.5, 1.0, 1.0).unwrap();
        let u0 = NodalField::constant(1, mesh.n_vertices(), 1.0);
        let cfg = SimulationConfig::new(vec![0.1], 0.1, 1.0, MassMode::Lumped);
        let res = imex_euler_run(&mesh, &ops, &model, &u0, &cfg).unwrap();
        let mut expect = 1.0;
        for rec in &res.records {
            expect *= 1.0 - 0.1 * 0.5;
            assert!((rec.min[0] - expect).abs() < 1e-12);
            assert!((rec.max[0] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_step_is_near_identity() {
        let (mesh, ops) = setup(2);
        let model = SemilinearDecay::heat(1.0);
        let u0 = interpolate_scalar(&mesh, |p| p[0] * p[1] * p[2]).unwrap();
        let cfg = SimulationConfig::new(vec![1.0], 1e-300, 1.0, MassMode::Lumped);
        let next = imex_euler_step(&mesh, &ops, &model, &cfg, &u0, 0).unwrap();
        for (a, b) in next.values().iter().zip(u0.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn equal_diffusion_shares_one_context() {
        let (_, ops) = setup(1);
        let cache = factor_cache(&ops, &[0.1, 0.1], 0.01, MassMode::Lumped).unwrap();
        assert_eq!(cache.contexts().len(), 1);
        assert_eq!(cache.context(0), cache.context(1));
        let cache = factor_cache(&ops, &[0.1, 0.2], 0.01, MassMode::Consistent).unwrap();
        assert_eq!(cache.contexts().len(), 2);
        for ctx in cache.contexts() {
            assert!(ctx.matrix.symmetry_defect() == 0.0);
            assert!(ctx.matrix.diagonal().iter().all(|&d| d > 0.0));
        }
    }

    #[test]
    fn blow_up_is_reported_with_last_finite_extrema() {
        struct Explode;
        impl Kinetics for Explode {
            fn n_components(&self) -> usize {
                1
            }
            fn eval(&self, u: &[f64], _x: crate::geometry::Vec3, _t: f64, out: &mut [f64]) {
                out[0] = 1e60 * u[0] * u[0];
            }
            fn name(&self) -> &str {
                "explode"
            }
        }
        let (mesh, ops) = setup(1);
        let u0 = NodalField::constant(1, mesh.n_vertices(), 1.0);
        let cfg = SimulationConfig::new(vec![0.1], 0.1, 1.0, MassMode::Lumped);
        let res = imex_euler_run(&mesh, &ops, &Explode, &u0, &cfg).unwrap();
        match res.status {
            RunStatus::BlowUp { step, ref last_max, .. } => {
                assert!((1..=3).contains(&step));
                assert!(last_max[0].is_finite());
                assert_eq!(res.records.len(), step - 1);
            }
            RunStatus::Completed => panic!("expected blow-up"),
        }
    }

    #[test]
    fn snapshots_follow_stride() {
        let (mesh, ops) = setup(1);
        let model = SemilinearDecay::heat(1.0);
        let u0 = NodalField::constant(1, mesh.n_vertices(), 1.0);
        let mut cfg = SimulationConfig::new(vec![0.1], 0.1, 1.0, MassMode::Lumped);
        cfg.snapshot_stride = 4;
        let res = imex_euler_run(&mesh, &ops, &model, &u0, &cfg).unwrap();
        let steps: Vec<usize> = res.snapshots.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 4, 8]);
    }
}
