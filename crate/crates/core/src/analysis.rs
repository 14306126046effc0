//! Error norms, convergence tables, invariant-region scans and checks of the
//! matrix properties behind the discrete maximum principle.

use std::fmt;

use thiserror::Error;

use crate::assembly::{interpolate, l2_norm, AssemblyError, FemOperators, NodalField};
use crate::geometry::Vec3;
use crate::kinetics::Rectangle;
use crate::mesh::{check_angle_condition, DelaunayReport, Edge, SurfaceMesh};
use crate::sparse::{operator_column, CgOptions, Preconditioner, SparseError};
use crate::timestepper::{MassMode, RunStatus, SimulationResult};

/// Tolerance for leaving an invariant rectangle.
pub const REGION_TOLERANCE: f64 = 1e-12;

/// Largest mesh for the column-by-column operator check.
pub const MAX_COLUMN_CHECK_NODES: usize = 5000;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("snapshots missing: need one per step, have {have} for {steps} steps")]
    MissingSnapshots { have: usize, steps: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("mesh has {n} nodes, column checks are limited to {max}")]
    TooLarge { n: usize, max: usize },
    #[error("zero vector")]
    ZeroVector,
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

type ExactFn = dyn Fn(Vec3, f64, &mut [f64]) + Send + Sync;

/// Closed-form solution `u(x, t)` with `n_components` components.
pub struct ExactSolution {
    name: String,
    n_components: usize,
    f: Box<ExactFn>,
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactSolution")
            .field("name", &self.name)
            .field("n_components", &self.n_components)
            .finish()
    }
}

impl ExactSolution {
    pub fn new(
        name: impl Into<String>,
        n_components: usize,
        f: impl Fn(Vec3, f64, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        ExactSolution {
            name: name.into(),
            n_components,
            f: Box::new(f),
        }
    }

    /// `xyz e^-t`.
    pub fn decaying_xyz() -> Self {
        Self::new("xyz*exp(-t)", 1, |p, t, out| out[0] = p[0] * p[1] * p[2] * (-t).exp())
    }

    /// `(xy e^-t, -xyz e^-t)`.
    pub fn schnakenberg_pair() -> Self {
        Self::new("(xy, -xyz)*exp(-t)", 2, |p, t, out| {
            let e = (-t).exp();
            out[0] = p[0] * p[1] * e;
            out[1] = -p[0] * p[1] * p[2] * e;
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn eval(&self, x: Vec3, t: f64, out: &mut [f64]) {
        (self.f)(x, t, out)
    }

    pub fn interpolate(&self, mesh: &SurfaceMesh, t: f64) -> Result<NodalField, AssemblyError> {
        interpolate(mesh, self.n_components, |x, out| self.eval(x, t, out))
    }
}

/// `L2(Gamma_h)` norm of `U - I_h u(t)`.
pub fn l2_error_at(
    mesh: &SurfaceMesh,
    ops: &FemOperators,
    exact: &ExactSolution,
    state: &NodalField,
    t: f64,
) -> Result<f64, AnalysisError> {
    let reference = exact.interpolate(mesh, t)?;
    Ok(l2_norm(&ops.consistent_mass, &state.difference(&reference)?)?)
}

/// Running maximum of the `L2(Gamma_h)` error, fed one state at a time.
pub struct ErrorTracker<'a> {
    mesh: &'a SurfaceMesh,
    ops: &'a FemOperators,
    exact: &'a ExactSolution,
    max: f64,
    worst_step: usize,
    first_error: Option<AnalysisError>,
}

impl<'a> ErrorTracker<'a> {
    pub fn new(mesh: &'a SurfaceMesh, ops: &'a FemOperators, exact: &'a ExactSolution) -> Self {
        ErrorTracker {
            mesh,
            ops,
            exact,
            max: 0.0,
            worst_step: 0,
            first_error: None,
        }
    }

    pub fn observe(&mut self, step: usize, t: f64, state: &NodalField) {
        match l2_error_at(self.mesh, self.ops, self.exact, state, t) {
            Ok(e) => {
                if e > self.max || e.is_nan() {
                    self.max = e;
                    self.worst_step = step;
                }
            }
            Err(err) => {
                self.first_error.get_or_insert(err);
            }
        }
    }

    /// Maximum error seen and the step it occurred at.
    pub fn finish(self) -> Result<(f64, usize), AnalysisError> {
        match self.first_error {
            Some(err) => Err(err),
            None => Ok((self.max, self.worst_step)),
        }
    }
}

/// `max_n ||U^n - I_h u(t_n)||_{L2}` over stored snapshots; needs stride 1.
pub fn linf_l2_error(
    result: &SimulationResult,
    exact: &ExactSolution,
    mesh: &SurfaceMesh,
    ops: &FemOperators,
) -> Result<f64, AnalysisError> {
    let steps = result.records.len();
    let contiguous = result.snapshots.len() == steps + 1
        && result.snapshots.iter().enumerate().all(|(i, s)| s.step == i);
    if !contiguous {
        return Err(AnalysisError::MissingSnapshots {
            have: result.snapshots.len(),
            steps,
        });
    }
    let mut tracker = ErrorTracker::new(mesh, ops, exact);
    for s in &result.snapshots {
        tracker.observe(s.step, s.time, &s.field);
    }
    Ok(tracker.finish()?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: u32,
    pub n_nodes: usize,
    pub h: f64,
    pub error: f64,
    /// `log(e_{i-1}/e_i) / log(h_{i-1}/h_i)`; absent on the first row.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub method: MassMode,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Mean of the last `k` rates.
    pub fn mean_last_rates(&self, k: usize) -> Option<f64> {
        let rates: Vec<f64> = self.rows.iter().filter_map(|r| r.rate).collect();
        if k == 0 || rates.len() < k {
            return None;
        }
        Some(rates[rates.len() - k..].iter().sum::<f64>() / k as f64)
    }

    pub fn rates(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.rate).collect()
    }
}

/// Rates between successive entries of `errors` against `hs`.
pub fn convergence_rates(errors: &[f64], hs: &[f64]) -> Result<Vec<Option<f64>>, AnalysisError> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(AnalysisError::InvalidInput(format!(
            "need two or more (error, h) pairs of equal length, got {} and {}",
            errors.len(),
            hs.len()
        )));
    }
    if let Some(v) = errors.iter().chain(hs).find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(AnalysisError::InvalidInput(format!("non-positive entry {v}")));
    }
    let mut rates = vec![None];
    for i in 1..errors.len() {
        rates.push(Some((errors[i - 1] / errors[i]).ln() / (hs[i - 1] / hs[i]).ln()));
    }
    Ok(rates)
}

/// Builds a table from per-level `(level, n_nodes, h, error)` rows.
pub fn convergence_table(
    method: MassMode,
    runs: &[(u32, usize, f64, f64)],
) -> Result<ConvergenceTable, AnalysisError> {
    let errors: Vec<f64> = runs.iter().map(|r| r.3).collect();
    let hs: Vec<f64> = runs.iter().map(|r| r.2).collect();
    let rates = convergence_rates(&errors, &hs)?;
    Ok(ConvergenceTable {
        method,
        rows: runs
            .iter()
            .zip(rates)
            .map(|(&(level, n_nodes, h, error), rate)| ConvergenceRow {
                level,
                n_nodes,
                h,
                error,
                rate,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub step: usize,
    pub node: usize,
    pub component: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionReport {
    /// Per-component extrema over steps `1..=n`.
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub first_violation: Option<Violation>,
    pub blow_up: bool,
}

impl RegionReport {
    pub fn violated(&self) -> bool {
        self.blow_up || self.first_violation.is_some()
    }
}

/// Extrema over the reporting window and the first exit from `rect` by more
/// than [`REGION_TOLERANCE`].
pub fn region_violation_scan(result: &SimulationResult, rect: &Rectangle) -> RegionReport {
    let mut first_violation = None;
    'steps: for rec in &result.records {
        for k in 0..rect.dim().min(rec.min.len()) {
            if rec.min[k] < rect.lo()[k] - REGION_TOLERANCE {
                first_violation = Some(Violation {
                    step: rec.step,
                    node: rec.argmin[k],
                    component: k,
                    value: rec.min[k],
                });
                break 'steps;
            }
            if rec.max[k] > rect.hi()[k] + REGION_TOLERANCE {
                first_violation = Some(Violation {
                    step: rec.step,
                    node: rec.argmax[k],
                    component: k,
                    value: rec.max[k],
                });
                break 'steps;
            }
        }
    }
    let (mut min, mut max) = (result.global_min(), result.global_max());
    let blow_up = matches!(result.status, RunStatus::BlowUp { .. });
    if let RunStatus::BlowUp { last_min, last_max, .. } = &result.status {
        if result.records.is_empty() {
            min = last_min.clone();
            max = last_max.clone();
        }
    }
    RegionReport {
        min,
        max,
        first_violation,
        blow_up,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftReport {
    pub s: f64,
    /// Smallest entry of `(Mbar + s A)^{-1} Mbar`.
    pub min_entry: f64,
    /// `max_i |((Mbar + s A)^{-1} Mbar 1)_i - 1|`.
    pub row_sum_defect: f64,
    pub max_iterations: usize,
}

impl ShiftReport {
    pub fn pass(&self, entry_tol: f64, row_sum_tol: f64) -> bool {
        self.min_entry >= -entry_tol && self.row_sum_defect <= row_sum_tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPropertyReport {
    pub angle: DelaunayReport,
    /// Off-diagonal stiffness entries above `1e-13`, as `(edge, value)`.
    pub positive_off_diagonals: Vec<(Edge, f64)>,
    /// Positive off-diagonals occur exactly on the edges failing the angle
    /// condition.
    pub sign_pattern_consistent: bool,
    pub shifts: Vec<ShiftReport>,
}

pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-13;

impl MatrixPropertyReport {
    pub fn pass(&self) -> bool {
        self.sign_pattern_consistent
            && self.positive_off_diagonals.is_empty()
            && self.shifts.iter().all(|s| s.pass(1e-12, 1e-9))
    }
}

/// Off-diagonal stiffness entries exceeding [`OFF_DIAGONAL_TOLERANCE`].
pub fn positive_off_diagonals(ops: &FemOperators) -> Vec<(Edge, f64)> {
    let a = &ops.stiffness;
    let mut out = Vec::new();
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j > i && v > OFF_DIAGONAL_TOLERANCE {
                out.push((Edge::new(i, j), v));
            }
        }
    }
    out
}

/// Checks the sign pattern of `A` against the angle condition and, for each
/// `s`, that `(Mbar + s A)^{-1} Mbar` is entrywise nonnegative with unit row
/// sums. Columns are computed one CG solve at a time.
pub fn verify_matrix_properties(
    mesh: &SurfaceMesh,
    ops: &FemOperators,
    s_values: &[f64],
) -> Result<MatrixPropertyReport, AnalysisError> {
    let n = mesh.n_vertices();
    if n > MAX_COLUMN_CHECK_NODES && !s_values.is_empty() {
        return Err(AnalysisError::TooLarge {
            n,
            max: MAX_COLUMN_CHECK_NODES,
        });
    }
    let angle = check_angle_condition(mesh);
    let positive = positive_off_diagonals(ops);
    let mut violating: Vec<Edge> = angle.violations.iter().map(|v| v.edge).collect();
    violating.sort();
    let mut flagged: Vec<Edge> = positive.iter().map(|p| p.0).collect();
    flagged.sort();
    // Entries within rounding of zero belong to right angle sums, which the
    // angle check may classify either way.
    let sign_pattern_consistent = flagged.iter().all(|e| violating.binary_search(e).is_ok())
        && violating.iter().all(|e| ops.stiffness.get(e.0, e.1) > -OFF_DIAGONAL_TOLERANCE);

    let opts = CgOptions {
        tol: 1e-13,
        max_iter: 100_000,
        preconditioner: Preconditioner::Jacobi,
    };
    let mut shifts = Vec::with_capacity(s_values.len());
    for &s in s_values {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(AnalysisError::InvalidInput(format!("shift {s} must be >= 0")));
        }
        let mut min_entry = f64::INFINITY;
        let mut row_sums = vec![0.0; n];
        let mut max_iterations = 0;
        for j in 0..n {
            let (col, stats) = operator_column(&ops.lumped_mass, &ops.stiffness, s, j, &opts)?;
            max_iterations = max_iterations.max(stats.iterations);
            for (acc, &v) in row_sums.iter_mut().zip(&col) {
                *acc += v;
                min_entry = min_entry.min(v);
            }
        }
        let row_sum_defect = row_sums.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
        shifts.push(ShiftReport {
            s,
            min_entry,
            row_sum_defect,
            max_iterations,
        });
    }
    Ok(MatrixPropertyReport {
        angle,
        positive_off_diagonals: positive,
        sign_pattern_consistent,
        shifts,
    })
}

/// `xi^T A xi / xi^T M xi` with the consistent mass.
pub fn rayleigh_quotient(ops: &FemOperators, xi: &[f64]) -> Result<f64, AnalysisError> {
    if xi.len() != ops.n_nodes() {
        return Err(AnalysisError::InvalidInput(format!(
            "vector of length {} for {} nodes",
            xi.len(),
            ops.n_nodes()
        )));
    }
    let quad = |m: &crate::sparse::CsrMatrix| -> f64 {
        let y = m.matvec(xi).expect("length checked");
        xi.iter().zip(&y).map(|(a, b)| a * b).sum()
    };
    let denom = quad(&ops.consistent_mass);
    if !(denom > 0.0) {
        return Err(AnalysisError::ZeroVector);
    }
    Ok(quad(&ops.stiffness) / denom)
}
