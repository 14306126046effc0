//! Reaction models, their invariant rectangles and Lipschitz data, and the
//! time-step restrictions that follow from them.

use std::f64::consts::SQRT_2;

use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum KineticsError {
    #[error("rectangle bounds are inconsistent: lo {lo} > hi {hi} in component {component}")]
    InvalidRectangle { component: usize, lo: f64, hi: f64 },
    #[error("rectangle has infinite extent in component {0}")]
    InfiniteRectangle(usize),
    #[error("model {0} has no Lipschitz data")]
    MissingLipschitz(String),
    #[error("model {0} has no invariant rectangle")]
    MissingRectangle(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Product of intervals `[lo_k, hi_k]`; bounds may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Rectangle {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Rectangle {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, KineticsError> {
        if lo.len() != hi.len() {
            return Err(KineticsError::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        for (k, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if l.is_nan() || h.is_nan() || l > h {
                return Err(KineticsError::InvalidRectangle { component: k, lo: l, hi: h });
            }
        }
        Ok(Rectangle { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(|v| v.is_finite())
    }

    /// Whether `u` lies in the rectangle enlarged by `tol` on every side.
    pub fn contains(&self, u: &[f64], tol: f64) -> bool {
        u.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&l, &h))| v >= l - tol && v <= h + tol)
    }

    /// Nearest point of the rectangle.
    pub fn clamp(&self, u: &mut [f64]) {
        for (v, (&l, &h)) in u.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *v = v.clamp(l, h);
        }
    }
}

/// A reaction term `f(u; x, t)` with `r` components.
pub trait Kinetics: Send + Sync {
    fn n_components(&self) -> usize;

    /// Writes `f(u; x, t)` into `out`.
    fn eval(&self, u: &[f64], x: Vec3, t: f64, out: &mut [f64]);

    fn name(&self) -> &str;

    /// Invariant rectangle claimed for the model, if any.
    fn rectangle(&self) -> Option<Rectangle> {
        None
    }

    /// Lipschitz constants `L_k` of `f_k` on [`Kinetics::rectangle`].
    fn lipschitz(&self) -> Option<Vec<f64>> {
        None
    }

    /// Largest `tau` for which the fully discrete scheme keeps the rectangle
    /// invariant: `1 / max_k L_k`.
    fn max_stable_timestep(&self) -> Result<f64, KineticsError> {
        let l = self
            .lipschitz()
            .ok_or_else(|| KineticsError::MissingLipschitz(self.name().to_string()))?;
        let max = l.iter().cloned().fold(0.0, f64::max);
        Ok(if max > 0.0 { 1.0 / max } else { f64::INFINITY })
    }
}

/// Convenience wrapper around [`Kinetics::eval`].
pub fn eval_kinetics(model: &dyn Kinetics, u: &[f64], x: Vec3, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; model.n_components()];
    model.eval(u, x, t, &mut out);
    out
}

pub fn max_stable_timestep(model: &dyn Kinetics) -> Result<f64, KineticsError> {
    model.max_stable_timestep()
}

/// Scalar decay `f(u) = -beta u^alpha`, invariant on `[0, u_max]`.
///
/// Negative arguments use the odd extension `-beta sign(u) |u|^alpha`, so the
/// term stays finite (and restoring) when a non-lumped scheme undershoots.
#[derive(Debug, Clone, PartialEq)]
pub struct SemilinearDecay {
    pub beta: f64,
    pub alpha: f64,
    pub u_max: f64,
}

impl SemilinearDecay {
    pub fn new(beta: f64, alpha: f64, u_max: f64) -> Result<Self, KineticsError> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(KineticsError::InvalidParameter(format!("beta = {beta} must be >= 0")));
        }
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(KineticsError::InvalidParameter(format!("alpha = {alpha} must be >= 1")));
        }
        if !(u_max > 0.0) {
            return Err(KineticsError::InvalidParameter(format!("u_max = {u_max} must be > 0")));
        }
        Ok(SemilinearDecay { beta, alpha, u_max })
    }

    /// Homogeneous heat equation: no reaction.
    pub fn heat(u_max: f64) -> Self {
        SemilinearDecay {
            beta: 0.0,
            alpha: 1.0,
            u_max,
        }
    }

    fn power(&self, u: f64) -> f64 {
        if self.alpha == 1.0 {
            u
        } else {
            u.signum() * u.abs().powf(self.alpha)
        }
    }
}

impl Kinetics for SemilinearDecay {
    fn n_components(&self) -> usize {
        1
    }

    fn eval(&self, u: &[f64], _x: Vec3, _t: f64, out: &mut [f64]) {
        out[0] = if self.beta == 0.0 { 0.0 } else { -self.beta * self.power(u[0]) };
    }

    fn name(&self) -> &str {
        if self.beta == 0.0 {
            "heat"
        } else {
            "semilinear-decay"
        }
    }

    fn rectangle(&self) -> Option<Rectangle> {
        Some(Rectangle {
            lo: vec![0.0],
            hi: vec![self.u_max],
        })
    }

    fn lipschitz(&self) -> Option<Vec<f64>> {
        Some(vec![self.alpha * self.beta * self.u_max.powf(self.alpha - 1.0)])
    }

    /// `beta tau u_max^(alpha - 1) <= 1`; unrestricted without reaction.
    fn max_stable_timestep(&self) -> Result<f64, KineticsError> {
        if self.beta == 0.0 {
            Ok(f64::INFINITY)
        } else {
            Ok(self.u_max.powf(1.0 - self.alpha) / self.beta)
        }
    }
}

/// Predator-prey kinetics
/// `f_1 = a u (1 - u) - b u v / (u + alpha)`, `f_2 = c u v / (u + alpha) - d v`.
#[derive(Debug, Clone, PartialEq)]
pub struct RosenzweigMacArthur {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub alpha: f64,
    /// Lower prey bound of the invariant rectangle.
    pub epsilon: f64,
}

impl RosenzweigMacArthur {
    pub fn new(a: f64, b: f64, c: f64, d: f64, alpha: f64, epsilon: f64) -> Result<Self, KineticsError> {
        for (name, v) in [("a", a), ("b", b), ("c", c), ("d", d), ("alpha", alpha)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(KineticsError::InvalidParameter(format!("{name} = {v} must be > 0")));
            }
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(KineticsError::InvalidParameter(format!("epsilon = {epsilon} must lie in [0, 1)")));
        }
        Ok(RosenzweigMacArthur { a, b, c, d, alpha, epsilon })
    }

    /// Predator bound `a alpha / (2 b)`.
    pub fn v_max(&self) -> f64 {
        self.a * self.alpha / (2.0 * self.b)
    }
}

impl Kinetics for RosenzweigMacArthur {
    fn n_components(&self) -> usize {
        2
    }

    fn eval(&self, u: &[f64], _x: Vec3, _t: f64, out: &mut [f64]) {
        let (p, q) = (u[0], u[1]);
        let holling = p * q / (p + self.alpha);
        out[0] = self.a * p * (1.0 - p) - self.b * holling;
        out[1] = self.c * holling - self.d * q;
    }

    fn name(&self) -> &str {
        "rosenzweig-macarthur"
    }

    fn rectangle(&self) -> Option<Rectangle> {
        Some(Rectangle {
            lo: vec![self.epsilon, 0.0],
            hi: vec![1.0, self.v_max()],
        })
    }

    /// Gradient bounds on the rectangle:
    /// `L_1 = sqrt(2) (3a + b / (2 alpha))`, `L_2 = sqrt(2) (c / (2 alpha) + d / 2)`.
    fn lipschitz(&self) -> Option<Vec<f64>> {
        Some(vec![
            SQRT_2 * (3.0 * self.a + self.b / (2.0 * self.alpha)),
            SQRT_2 * (self.c / (2.0 * self.alpha) + self.d / 2.0),
        ])
    }
}

/// Source terms that make `u = xy e^-t`, `v = -xyz e^-t` an exact solution
/// of the forced Schnakenberg system on the unit sphere with
/// `d_1 = 1/6`, `d_2 = 1/12`.
pub fn forced_schnakenberg_forcing(a: f64, b: f64, x: Vec3, t: f64) -> [f64; 2] {
    let xy = x[0] * x[1];
    let cubic = xy * xy * xy * x[2] * (-3.0 * t).exp();
    [xy * (-t).exp() + cubic - a, -cubic - b]
}

/// `f_1 = a - u + u^2 v + F_1`, `f_2 = b - u^2 v + F_2`, with optional
/// manufactured-solution forcing.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcedSchnakenberg {
    pub a: f64,
    pub b: f64,
    pub forced: bool,
}

impl ForcedSchnakenberg {
    pub fn new(a: f64, b: f64) -> Self {
        ForcedSchnakenberg { a, b, forced: true }
    }

    pub fn unforced(a: f64, b: f64) -> Self {
        ForcedSchnakenberg { a, b, forced: false }
    }
}

impl Kinetics for ForcedSchnakenberg {
    fn n_components(&self) -> usize {
        2
    }

    fn eval(&self, u: &[f64], x: Vec3, t: f64, out: &mut [f64]) {
        let u2v = u[0] * u[0] * u[1];
        out[0] = self.a - u[0] + u2v;
        out[1] = self.b - u2v;
        if self.forced {
            let f = forced_schnakenberg_forcing(self.a, self.b, x, t);
            out[0] += f[0];
            out[1] += f[1];
        }
    }

    fn name(&self) -> &str {
        "schnakenberg"
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxReport {
    /// Every sampled outward component is negative.
    pub strict: bool,
    /// Every sampled outward component is at most `1e-12`.
    pub weak: bool,
    /// Largest outward component found.
    pub worst: f64,
}

pub const WEAK_FLUX_TOLERANCE: f64 = 1e-12;

/// Samples the outward component of `f` on every face of `rect`.
///
/// On the face `u_k = hi_k` the outward component is `f_k`, on `u_k = lo_k`
/// it is `-f_k`. Each face is covered by a tensor grid of about
/// `samples_per_face` points (corners included). Kinetics are evaluated at
/// the north pole and `t = 0`.
pub fn check_inward_flux(
    model: &dyn Kinetics,
    rect: &Rectangle,
    samples_per_face: usize,
) -> Result<FluxReport, KineticsError> {
    let r = model.n_components();
    if rect.dim() != r {
        return Err(KineticsError::DimensionMismatch {
            expected: r,
            got: rect.dim(),
        });
    }
    for k in 0..r {
        if !(rect.lo[k].is_finite() && rect.hi[k].is_finite()) {
            return Err(KineticsError::InfiniteRectangle(k));
        }
    }
    let per_axis = if r <= 1 {
        1
    } else {
        ((samples_per_face.max(2) as f64).powf(1.0 / (r - 1) as f64).ceil() as usize).max(2)
    };
    let x = [0.0, 0.0, 1.0];
    let mut worst = f64::NEG_INFINITY;
    let mut u = vec![0.0; r];
    let mut f = vec![0.0; r];
    let mut idx = vec![0usize; r.saturating_sub(1)];
    for k in 0..r {
        for (side, sign) in [(rect.lo[k], -1.0), (rect.hi[k], 1.0)] {
            idx.iter_mut().for_each(|i| *i = 0);
            loop {
                let mut slot = 0;
                for (j, uj) in u.iter_mut().enumerate() {
                    if j == k {
                        *uj = side;
                    } else {
                        let s = idx[slot] as f64 / (per_axis - 1).max(1) as f64;
                        *uj = rect.lo[j] + s * (rect.hi[j] - rect.lo[j]);
                        slot += 1;
                    }
                }
                model.eval(&u, x, 0.0, &mut f);
                worst = worst.max(sign * f[k]);
                // Odometer over the free coordinates.
                let mut carry = true;
                for i in idx.iter_mut() {
                    *i += 1;
                    if *i < per_axis {
                        carry = false;
                        break;
                    }
                    *i = 0;
                }
                if carry {
                    break;
                }
            }
        }
    }
    Ok(FluxReport {
        strict: worst < 0.0,
        weak: worst <= WEAK_FLUX_TOLERANCE,
        worst,
    })
}

/// Largest central-difference gradient norm of each `f_k` over an
/// `n`-per-axis grid of `rect` (one- and two-component models).
pub fn sampled_lipschitz(model: &dyn Kinetics, rect: &Rectangle, n: usize) -> Result<Vec<f64>, KineticsError> {
    let r = model.n_components();
    if rect.dim() != r || !(1..=2).contains(&r) {
        return Err(KineticsError::DimensionMismatch {
            expected: r.clamp(1, 2),
            got: rect.dim(),
        });
    }
    if let Some(k) = (0..r).find(|&k| !(rect.lo[k].is_finite() && rect.hi[k].is_finite())) {
        return Err(KineticsError::InfiniteRectangle(k));
    }
    let x = [0.0, 0.0, 1.0];
    let n = n.max(2);
    let steps: Vec<f64> = (0..r).map(|k| (rect.hi[k] - rect.lo[k]) / (n - 1) as f64).collect();
    let hs: Vec<f64> = (0..r).map(|k| 1e-6 * (rect.hi[k] - rect.lo[k]).max(1e-300)).collect();
    let mut best = vec![0.0f64; r];
    let mut grad = vec![vec![0.0; r]; r];
    let mut plus = vec![0.0; r];
    let mut minus = vec![0.0; r];
    let points = if r == 1 { n } else { n * n };
    for p in 0..points {
        let ij = [p % n, p / n];
        let u: Vec<f64> = (0..r).map(|k| rect.lo[k] + ij[k] as f64 * steps[k]).collect();
        for j in 0..r {
            // One-sided at the faces so samples never leave the rectangle.
            let mut up = u.clone();
            let mut dn = u.clone();
            up[j] = (u[j] + hs[j]).min(rect.hi[j]);
            dn[j] = (u[j] - hs[j]).max(rect.lo[j]);
            model.eval(&up, x, 0.0, &mut plus);
            model.eval(&dn, x, 0.0, &mut minus);
            for k in 0..r {
                grad[k][j] = (plus[k] - minus[k]) / (up[j] - dn[j]);
            }
        }
        for k in 0..r {
            let g = grad[k].iter().map(|v| v * v).sum::<f64>().sqrt();
            best[k] = best[k].max(g);
        }
    }
    Ok(best)
}
