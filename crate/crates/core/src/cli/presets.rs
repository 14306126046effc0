//! The four reference experiments on the unit sphere.

use std::fmt;
use std::str::FromStr;

use crate::analysis::ExactSolution;
use crate::geometry::Vec3;
use crate::kinetics::{ForcedSchnakenberg, Kinetics, Rectangle, RosenzweigMacArthur, SemilinearDecay};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    /// Linear decay with a known solution; convergence in `h`.
    Exp1,
    /// Heat equation from a compactly supported cap; maximum principle.
    Exp2,
    /// Rosenzweig-MacArthur predator-prey; invariant rectangle.
    Exp3,
    /// Forced Schnakenberg with a known solution; convergence in `h`.
    Exp4,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [Experiment::Exp1, Experiment::Exp2, Experiment::Exp3, Experiment::Exp4];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::Exp1 => "exp1",
            Experiment::Exp2 => "exp2",
            Experiment::Exp3 => "exp3",
            Experiment::Exp4 => "exp4",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| format!("unknown experiment '{s}' (expected exp1, exp2, exp3 or exp4)"))
    }
}

/// How the time step follows the mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauRule {
    /// `tau = tau0 (h / h0)^2`, then shortened so that an integer number of
    /// steps reaches the final time.
    Parabolic { tau0: f64, h0: f64 },
    Fixed(f64),
}

/// Reference step and mesh size of the parabolic schedule: `tau = 1.6e-3`
/// on the finest reference mesh is `2^-7 tau0`.
pub const TAU0: f64 = 0.2048;
pub const H0: f64 = 0.4013;

impl TauRule {
    pub fn tau(self, h: f64, t_final: f64) -> f64 {
        match self {
            TauRule::Fixed(tau) => tau,
            TauRule::Parabolic { tau0, h0 } => {
                let ratio = t_final / (tau0 * (h / h0).powi(2));
                let steps = if (ratio - ratio.round()).abs() <= 1e-9 * ratio { ratio.round() } else { ratio.ceil() };
                t_final / steps.max(1.0)
            }
        }
    }
}

type InitialFn = fn(Vec3, &mut [f64]);

/// Everything needed to run one experiment on a given mesh.
pub struct Preset {
    pub experiment: Experiment,
    pub model: Box<dyn Kinetics>,
    pub diffusion: Vec<f64>,
    pub initial: InitialFn,
    pub exact: Option<ExactSolution>,
    pub rectangle: Option<Rectangle>,
    pub t_final: f64,
    pub tau_rule: TauRule,
    pub component_names: Vec<&'static str>,
}

impl fmt::Debug for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Preset")
            .field("experiment", &self.experiment)
            .field("model", &self.model.name())
            .field("diffusion", &self.diffusion)
            .field("t_final", &self.t_final)
            .field("tau_rule", &self.tau_rule)
            .finish()
    }
}

pub const EXP3_EPSILON: f64 = 1e-7;
pub const EXP3_CAP_RADIUS: f64 = 0.2;
pub const EXP2_CAP_RADIUS: f64 = 0.2;

fn exp1_initial(p: Vec3, out: &mut [f64]) {
    out[0] = p[0] * p[1] * p[2];
}

/// `sqrt(1 - (x^2 + y^2) / r^2)` on the northern cap of radius `r`, zero
/// elsewhere.
pub fn cap(p: Vec3, r: f64) -> f64 {
    let rho2 = p[0] * p[0] + p[1] * p[1];
    if rho2 <= r * r && p[2] > 0.0 {
        (1.0 - rho2 / (r * r)).max(0.0).sqrt()
    } else {
        0.0
    }
}

fn exp2_initial(p: Vec3, out: &mut [f64]) {
    out[0] = cap(p, EXP2_CAP_RADIUS);
}

fn exp3_initial(p: Vec3, out: &mut [f64]) {
    out[0] = EXP3_EPSILON + (1.0 - EXP3_EPSILON) * cap(p, EXP3_CAP_RADIUS);
    // a alpha / (2 b)
    out[1] = 0.5;
}

fn exp4_initial(p: Vec3, out: &mut [f64]) {
    out[0] = p[0] * p[1];
    out[1] = -p[0] * p[1] * p[2];
}

pub fn preset(experiment: Experiment) -> Preset {
    let parabolic = TauRule::Parabolic { tau0: TAU0, h0: H0 };
    match experiment {
        Experiment::Exp1 => Preset {
            experiment,
            model: Box::new(SemilinearDecay::new(0.5, 1.0, 1.0).expect("valid parameters")),
            diffusion: vec![1.0 / 24.0],
            initial: exp1_initial,
            exact: Some(ExactSolution::decaying_xyz()),
            rectangle: None,
            t_final: 1.0,
            tau_rule: parabolic,
            component_names: vec!["u"],
        },
        Experiment::Exp2 => Preset {
            experiment,
            model: Box::new(SemilinearDecay::heat(1.0)),
            diffusion: vec![0.1],
            initial: exp2_initial,
            exact: None,
            rectangle: Some(Rectangle::new(vec![0.0], vec![1.0]).expect("ordered bounds")),
            t_final: 1.0,
            tau_rule: parabolic,
            component_names: vec!["u"],
        },
        Experiment::Exp3 => {
            let model = RosenzweigMacArthur::new(10.0, 1e-2, 1.0, 1.0, 1e-3, EXP3_EPSILON).expect("valid parameters");
            let rectangle = model.rectangle();
            Preset {
                experiment,
                model: Box::new(model),
                diffusion: vec![1e-2, 1e-2],
                initial: exp3_initial,
                exact: None,
                rectangle,
                t_final: 5.0,
                tau_rule: TauRule::Fixed(1e-3),
                component_names: vec!["u", "v"],
            }
        }
        Experiment::Exp4 => Preset {
            experiment,
            model: Box::new(ForcedSchnakenberg::new(1.0, 1.0)),
            diffusion: vec![1.0 / 6.0, 1.0 / 12.0],
            initial: exp4_initial,
            exact: Some(ExactSolution::schnakenberg_pair()),
            rectangle: None,
            t_final: 1.0,
            tau_rule: parabolic,
            component_names: vec!["u", "v"],
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_ids() {
        for e in Experiment::ALL {
            assert_eq!(e.id().parse::<Experiment>().unwrap(), e);
        }
        assert!("exp5".parse::<Experiment>().is_err());
    }

    #[test]
    fn parabolic_schedule() {
        let rule = TauRule::Parabolic { tau0: TAU0, h0: H0 };
        assert!((rule.tau(H0, 1.0) - 0.2).abs() < 1e-15);
        // Seven halvings of h^2 from the reference mesh land on 1.6e-3.
        let h7 = H0 / 2f64.sqrt().powi(7);
        assert!((TAU0 * (h7 / H0).powi(2) - 1.6e-3).abs() < 1e-15);
        assert!((rule.tau(h7, 1.0) - 1.6e-3).abs() < 1e-15);
        let tau = rule.tau(0.3, 1.0);
        assert!(((1.0 / tau) - (1.0 / tau).round()).abs() < 1e-9);
        assert_eq!(TauRule::Fixed(1e-3).tau(0.3, 5.0), 1e-3);
    }

    #[test]
    fn initial_data() {
        let north = [0.0, 0.0, 1.0];
        let mut out = [0.0; 2];
        exp2_initial(north, &mut out);
        assert_eq!(out[0], 1.0);
        exp2_initial([0.0, 0.0, -1.0], &mut out);
        assert_eq!(out[0], 0.0);
        exp3_initial(north, &mut out);
        assert_eq!(out, [1.0, 0.5]);
        exp3_initial([1.0, 0.0, 0.0], &mut out);
        assert_eq!(out, [EXP3_EPSILON, 0.5]);
        let p = preset(Experiment::Exp3);
        let mut u = [0.0; 2];
        for q in [north, [1.0, 0.0, 0.0], [0.1, 0.05, (1.0f64 - 0.0125).sqrt()]] {
            exp3_initial(q, &mut u);
            assert!(p.rectangle.as_ref().unwrap().contains(&u, 0.0));
        }
    }

    #[test]
    fn exp3_step_respects_timestep_bound() {
        let p = preset(Experiment::Exp3);
        let tau = p.tau_rule.tau(0.1, p.t_final);
        assert!(tau <= p.model.max_stable_timestep().unwrap());
    }
}
