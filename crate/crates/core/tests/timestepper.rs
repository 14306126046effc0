use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use surf_rd::analysis::region_violation_scan;
use surf_rd::assembly::{interpolate, FemOperators, NodalField};
use surf_rd::cli::{preset, Experiment};
use surf_rd::kinetics::{Kinetics, RosenzweigMacArthur, SemilinearDecay};
use surf_rd::mesh::{generate_icosphere, SurfaceMesh};
use surf_rd::timestepper::{
    imex_euler_run, imex_euler_run_observed, run_with, MassMode, RunStatus, SimulationConfig, Stepper,
};

fn setup(level: u32) -> (SurfaceMesh, FemOperators) {
    let mesh = generate_icosphere(level).unwrap();
    let ops = FemOperators::assemble(&mesh).unwrap();
    (mesh, ops)
}

fn random_field(n: usize, lo: f64, hi: f64, seed: u64) -> NodalField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    NodalField::from_components(vec![(0..n).map(|_| rng.gen_range(lo..hi)).collect()]).unwrap()
}

fn mass(ops: &FemOperators, field: &[f64]) -> f64 {
    ops.lumped_mass.values().iter().zip(field).map(|(m, u)| m * u).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lumped_heat_obeys_maximum_principle(seed in any::<u64>(), d in 1e-3f64..1.0, tau in 1e-3f64..0.2) {
        let (mesh, ops) = setup(2);
        let n = mesh.n_vertices();
        let u0 = random_field(n, 0.0, 1.0, seed);
        let (lo, hi) = u0.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let model = SemilinearDecay::heat(1.0);
        let mut cfg = SimulationConfig::new(vec![d], tau, 10.0 * tau, MassMode::Lumped);
        cfg.snapshot_stride = 1;
        let result = imex_euler_run(&mesh, &ops, &model, &u0, &cfg).unwrap();
        let mut prev_max = hi;
        let m0 = mass(&ops, u0.values());
        for s in &result.snapshots {
            let v = s.field.values();
            let (mn, mx) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            prop_assert!(mn >= lo - 1e-14 && mx <= hi + 1e-14);
            prop_assert!(mx <= prev_max + 1e-14);
            prev_max = mx;
            prop_assert!((mass(&ops, v) - m0).abs() <= 1e-10 * m0.abs().max(1.0));
        }
    }

    #[test]
    fn predator_prey_stays_in_rectangle(seed in any::<u64>()) {
        let (mesh, ops) = setup(2);
        let n = mesh.n_vertices();
        let model = RosenzweigMacArthur::new(10.0, 1e-2, 1.0, 1.0, 1e-3, 1e-7).unwrap();
        let rect = model.rectangle().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u0 = NodalField::from_components(vec![
            (0..n).map(|_| rng.gen_range(rect.lo()[0]..=rect.hi()[0])).collect(),
            (0..n).map(|_| rng.gen_range(rect.lo()[1]..=rect.hi()[1])).collect(),
        ]).unwrap();
        let cfg = SimulationConfig::new(vec![1e-2, 1e-2], 1e-3, 0.2, MassMode::Lumped);
        let result = imex_euler_run(&mesh, &ops, &model, &u0, &cfg).unwrap();
        prop_assert!(result.completed());
        prop_assert!(!region_violation_scan(&result, &rect).violated());
    }
}

#[test]
fn consistent_mass_conserves_total_heat() {
    let (mesh, ops) = setup(3);
    let u0 = random_field(mesh.n_vertices(), -1.0, 1.0, 3);
    let cfg = SimulationConfig::new(vec![0.1], 0.01, 0.2, MassMode::Consistent);
    let result = imex_euler_run(&mesh, &ops, &SemilinearDecay::heat(1.0), &u0, &cfg).unwrap();
    // Row sums of the consistent mass equal the lumped mass.
    let before = mass(&ops, u0.values());
    let after = mass(&ops, result.final_state.values());
    assert!((before - after).abs() <= 1e-10);
}

#[test]
fn cached_and_uncached_steps_are_bitwise_identical() {
    let (mesh, ops) = setup(3);
    let p = preset(Experiment::Exp4);
    let u0 = interpolate(&mesh, 2, p.initial).unwrap();
    for mode in [MassMode::Lumped, MassMode::Consistent] {
        let cfg = SimulationConfig::new(p.diffusion.clone(), 0.01, 0.1, mode);
        let cached = Stepper::new(&mesh, &ops, p.model.as_ref(), &cfg).unwrap();
        let plain = Stepper::uncached(&mesh, &ops, p.model.as_ref(), &cfg).unwrap();
        let a = run_with(&cached, &u0, |_, _, _| {}).unwrap();
        let b = run_with(&plain, &u0, |_, _, _| {}).unwrap();
        assert_eq!(a.final_state.values(), b.final_state.values());
    }
}

#[test]
fn consistent_mass_breaks_positivity_on_a_cap() {
    let (mesh, ops) = setup(3);
    let p = preset(Experiment::Exp2);
    let u0 = interpolate(&mesh, 1, p.initial).unwrap();
    let cfg = SimulationConfig::new(vec![0.1], 0.0128, 0.1, MassMode::Consistent);
    let result = imex_euler_run(&mesh, &ops, p.model.as_ref(), &u0, &cfg).unwrap();
    let rect = p.rectangle.unwrap();
    assert!(result.global_min()[0] < 0.0);
    assert!(region_violation_scan(&result, &rect).violated());
}

#[test]
fn observer_sees_every_state() {
    let (mesh, ops) = setup(1);
    let u0 = NodalField::constant(1, mesh.n_vertices(), 1.0);
    let cfg = SimulationConfig::new(vec![1.0], 0.1, 0.5, MassMode::Lumped);
    let mut steps = Vec::new();
    let result = imex_euler_run_observed(&mesh, &ops, &SemilinearDecay::heat(1.0), &u0, &cfg, |n, t, _| {
        steps.push((n, t))
    })
    .unwrap();
    assert_eq!(steps.iter().map(|s| s.0).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4, 5]);
    assert!((steps[5].1 - 0.5).abs() < 1e-15);
    assert!(matches!(result.status, RunStatus::Completed));
    assert_eq!(result.records.len(), 5);
}

/// `f(u) = u^2`: finite-time blow-up from positive data.
struct Quadratic;

impl Kinetics for Quadratic {
    fn n_components(&self) -> usize {
        1
    }

    fn eval(&self, u: &[f64], _x: [f64; 3], _t: f64, out: &mut [f64]) {
        out[0] = u[0] * u[0];
    }

    fn name(&self) -> &str {
        "quadratic"
    }
}

#[test]
fn explosive_reaction_is_reported_as_blow_up() {
    let (mesh, ops) = setup(1);
    let u0 = NodalField::constant(1, mesh.n_vertices(), 2.0);
    let cfg = SimulationConfig::new(vec![1.0], 0.5, 100.0, MassMode::Lumped);
    let result = imex_euler_run(&mesh, &ops, &Quadratic, &u0, &cfg).unwrap();
    match result.status {
        RunStatus::BlowUp { step, last_max, .. } => {
            assert!(step < 20);
            assert!(last_max[0].is_finite() && last_max[0] <= 1e100);
        }
        RunStatus::Completed => panic!("expected blow-up"),
    }
}
