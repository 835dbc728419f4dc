use rand::Rng;
use rayon::prelude::*;

use wiprates::dynamics::{BaseMap, FlowState, Roof, SuspensionSystem, DEFAULT_BURN_IN};
use wiprates::path::PathSample;
use wiprates::process::{running_sup, ObservableKind, ObservableSpec};
use wiprates::rng::{stream, Purpose};
use wiprates::stats::lr_norm;
use wiprates::transport::{
    sample_brownian, wasserstein_1d, wasserstein_assignment, wasserstein_entropic, AbsoluteDifference,
    EmpiricalMeasure, GridSup,
};

fn systems() -> Vec<SuspensionSystem> {
    vec![
        SuspensionSystem::doubling_unit_roof(),
        SuspensionSystem::new(BaseMap::Doubling, Roof::OnePlusY),
        SuspensionSystem::new(BaseMap::lsv(0.3).unwrap(), Roof::Constant(1.0)),
        SuspensionSystem::new(BaseMap::lsv(0.3).unwrap(), Roof::OnePlusY),
        SuspensionSystem::new(BaseMap::induced(0.3).unwrap(), Roof::Constant(1.0)),
    ]
}

fn dyadic<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let k = rng.gen_range((lo * 1024.0) as u64..(hi * 1024.0) as u64);
    k as f64 / 1024.0
}

#[test]
fn semigroup_is_exact_on_dyadic_times_with_constant_roofs() {
    let mut rng = stream(1, Purpose::Generic, 0, 0);
    for system in systems().into_iter().filter(|s| s.has_constant_roof()) {
        for _ in 0..500 {
            let state = system.sample_initial_states(1, 10, &mut rng).unwrap()[0];
            let (t1, t2) = (dyadic(&mut rng, 0.0, 5.0), dyadic(&mut rng, 0.0, 5.0));
            let state = FlowState::new(state.y, (state.u * 1024.0).floor() / 1024.0);
            let whole = system.evolve(state, t1 + t2).unwrap();
            let split = system.evolve(system.evolve(state, t1).unwrap(), t2).unwrap();
            assert_eq!(whole, split, "{system:?} {state:?} {t1} {t2}");
        }
    }
}

#[test]
fn semigroup_holds_to_roundoff_for_general_times() {
    let mut rng = stream(2, Purpose::Generic, 0, 0);
    for system in systems() {
        for _ in 0..500 {
            let state = system.sample_initial_states(1, 10, &mut rng).unwrap()[0];
            let (t1, t2) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
            let whole = system.evolve(state, t1 + t2).unwrap();
            let split = system.evolve(system.evolve(state, t1).unwrap(), t2).unwrap();
            assert_eq!(whole.y, split.y, "{system:?}");
            assert!((whole.u - split.u).abs() < 1e-12);
        }
    }
}

fn random_paths<R: Rng>(rng: &mut R, n: usize, m: usize) -> EmpiricalMeasure<PathSample> {
    EmpiricalMeasure::new((0..n).map(|_| sample_brownian(1.0, m, rng).unwrap()).collect()).unwrap()
}

#[test]
fn entropic_tracks_assignment_on_small_clouds() {
    let mut rng = stream(3, Purpose::Generic, 0, 0);
    for n in [4, 16, 64] {
        for q in [1.0, 2.0] {
            let (a, b) = (random_paths(&mut rng, n, 8), random_paths(&mut rng, n, 8));
            let exact = wasserstein_assignment(&a, &b, q, &GridSup).unwrap().distance;
            let approx = wasserstein_entropic(&a, &b, q, &GridSup, 2e-3, 50_000).unwrap();
            assert!(
                (approx.value - exact).abs() <= 0.02 * exact,
                "n={n} q={q}: entropic {} vs exact {exact}",
                approx.value
            );
            assert!(approx.value >= exact - 1e-9);
        }
    }
}

#[test]
fn entropic_two_atom_example() {
    let a = EmpiricalMeasure::new(vec![0.0, 1.0]).unwrap();
    let b = EmpiricalMeasure::new(vec![0.0, 2.0]).unwrap();
    let r = wasserstein_entropic(&a, &b, 1.0, &AbsoluteDifference, 0.01, 10_000).unwrap();
    assert!((r.value - 0.5).abs() <= 0.01, "{}", r.value);
    let same = wasserstein_entropic(&a, &a, 1.0, &AbsoluteDifference, 0.01, 10_000).unwrap();
    assert!(same.value < 0.01);
}

#[test]
fn wasserstein_is_monotone_in_q() {
    let mut rng = stream(4, Purpose::Generic, 0, 0);
    for trial in 0..100 {
        let n = 2 + trial % 30;
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..5.0)).collect();
        let (a, b) = (EmpiricalMeasure::new(xs).unwrap(), EmpiricalMeasure::new(ys).unwrap());
        let (pa, pb) = (random_paths(&mut rng, n, 4), random_paths(&mut rng, n, 4));
        let mut prev = (0.0, 0.0);
        for q in [1.0, 1.5, 2.0, 3.0, 4.0] {
            let line = wasserstein_1d(&a, &b, q).unwrap().distance;
            let path = wasserstein_assignment(&pa, &pb, q, &GridSup).unwrap().distance;
            assert!(line >= prev.0 - 1e-12 && path >= prev.1 - 1e-12);
            prev = (line, path);
        }
    }
}

#[test]
fn wasserstein_satisfies_triangle_inequality() {
    let mut rng = stream(5, Purpose::Generic, 0, 0);
    for trial in 0..100 {
        let n = 1 + trial % 24;
        let q = [1.0, 2.0, 3.0][trial % 3];
        let (a, b, c) = (random_paths(&mut rng, n, 6), random_paths(&mut rng, n, 6), random_paths(&mut rng, n, 6));
        let d = |x, y| wasserstein_assignment(x, y, q, &GridSup).unwrap().distance;
        assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }
}

/// `‖sup_{t ≤ K} |v_t|‖_{L^6} / √K` stays bounded over `K = 1, 2, …, 64`.
#[test]
fn running_sup_moment_scales_like_sqrt_k() {
    let system = SuspensionSystem::doubling_unit_roof();
    let v = ObservableSpec::new(ObservableKind::Cos).with_analytic_mean(0.0);
    let scaled: Vec<f64> = (0..=6)
        .map(|e| {
            let k = (1u64 << e) as f64;
            let sups: Vec<f64> = (0..1000u64)
                .into_par_iter()
                .map(|i| {
                    let mut init = stream(6, Purpose::InitialState, e, i);
                    let start = system.sample_initial_states(1, DEFAULT_BURN_IN, &mut init).unwrap()[0];
                    let mut rng = stream(6, Purpose::Trajectory, e, i);
                    let trajectory = system.trajectory(start, k, &mut rng).unwrap();
                    running_sup(&system, &v, &trajectory, k).unwrap()
                })
                .collect();
            lr_norm(&sups, 6.0) / k.sqrt()
        })
        .collect();
    let max = scaled.iter().cloned().fold(f64::MIN, f64::max);
    let min = scaled.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max / min <= 3.0, "{scaled:?}");
}
