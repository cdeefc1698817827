mod common;

use std::f64::consts::PI;

use common::*;
use crlab_core::eigensolver::MAX_EXCITED_STATES;
use crlab_core::sum::dot;
use crlab_core::{
    assemble, excited_states, fisher_information, ground_state, ground_state_with, normalize,
    BoxState, Interval, OscillatorHalfPlaneState, Potential, SolverOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn weighted_dot(a: &crlab_core::GridField, b: &crlab_core::GridField) -> f64 {
    let w = a.grid().weights();
    let wa: Vec<f64> = a.values().iter().zip(w).map(|(u, w)| u * w).collect();
    dot(&wa, b.values())
}

fn rectangle_levels(count: usize) -> Vec<f64> {
    let mut levels: Vec<f64> = (1..=4u32)
        .flat_map(|n1| {
            (1..=4u32).map(move |n2| {
                PI * PI / 8.0 * (f64::from(n1 * n1) + 4.0 * f64::from(n2 * n2) / 9.0)
            })
        })
        .collect();
    levels.sort_by(f64::total_cmp);
    levels.truncate(count);
    levels
}

#[test]
fn enumerated_rectangle_levels() {
    let expected: Vec<f64> = [13.0, 25.0, 40.0, 45.0]
        .iter()
        .map(|k| k / 9.0 * PI * PI / 8.0)
        .collect();
    for (a, b) in rectangle_levels(4).iter().zip(&expected) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn rectangle_stencil_on_oracle_samples() {
    let bounds: Vec<Interval> = RECTANGLE
        .iter()
        .map(|&(a, b)| Interval::new(a, b))
        .collect();
    let state = BoxState::new(bounds, vec![1, 1]).unwrap();
    let residual = |n1: usize, n2: usize| {
        let grid = rectangle_grid(n1, n2);
        let u = state.sample(grid.clone()).unwrap();
        let op = assemble(grid, Potential::Zero).unwrap();
        let mut hu = vec![0.0; u.values().len()];
        op.apply(u.values(), &mut hu);
        hu.iter()
            .zip(u.values())
            .map(|(h, u)| (h - state.energy() * u).abs())
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (residual(65, 97), residual(129, 193));
    assert!(fine < 1e-3);
    assert!((3.5..4.5).contains(&(coarse / fine)), "{coarse:e} {fine:e}");
}

#[test]
fn halfplane_stencil_on_oracle_samples() {
    // the truncation wall cuts a ~1e-4 amplitude, so look away from it
    let residual = |n: usize| {
        let grid = halfplane_grid(1.0, n);
        let u = OscillatorHalfPlaneState::ground(1.0)
            .unwrap()
            .sample(grid.clone())
            .unwrap();
        let op = assemble(grid.clone(), Potential::Harmonic { beta: 1.0 }).unwrap();
        let mut hu = vec![0.0; u.values().len()];
        op.apply(u.values(), &mut hu);
        let mut x = [0.0; 2];
        (0..grid.len())
            .filter(|&i| {
                grid.node_coords(i, &mut x);
                x[0] <= 5.0 && x[1].abs() <= 5.0
            })
            .map(|i| (hu[i] - u.values()[i]).abs())
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (residual(129), residual(257));
    assert!(fine < 1e-3, "{fine:e}");
    assert!((3.5..4.5).contains(&(coarse / fine)), "{coarse:e} {fine:e}");
}

#[test]
fn unit_interval_well() {
    let grid = box_grid(&[(0.0, 1.0)], &[512]);
    let sol = ground_state(&assemble(grid, Potential::Zero).unwrap(), 1e-8, 5000).unwrap();
    assert!((sol.eigenvalue / (PI * PI / 2.0) - 1.0).abs() < 1e-3);
}

#[test]
fn rectangle_excited_states() {
    let grid = rectangle_grid(96, 144);
    let op = assemble(grid.clone(), Potential::Zero).unwrap();
    let states = excited_states(&op, 4, 1e-9).unwrap();
    for (s, e) in states.iter().zip(rectangle_levels(4)) {
        assert!(
            (s.eigenvalue / e - 1.0).abs() < 1e-3,
            "{} vs {e}",
            s.eigenvalue
        );
        assert!(!s.degenerate);
    }
    for w in states.windows(2) {
        assert!(w[0].eigenvalue <= w[1].eigenvalue);
    }
    for i in 0..states.len() {
        for j in 0..i {
            let overlap = weighted_dot(&states[i].field, &states[j].field);
            assert!(overlap.abs() < 1e-8, "⟨u{i},u{j}⟩ = {overlap:e}");
        }
    }
    let interior: Vec<usize> = (0..grid.len()).filter(|&i| grid.is_interior(i)).collect();
    let ground = &states[0].field;
    assert!(interior.iter().all(|&i| ground.values()[i] > 0.0));
    for s in &states[1..] {
        let v = s.field.values();
        assert!(interior.iter().any(|&i| v[i] > 0.0) && interior.iter().any(|&i| v[i] < 0.0));
    }

    // ⟨T⟩ = F/8 for real eigenfields in a zero potential
    for s in &states {
        let f = fisher_information(&s.field).unwrap();
        let t = op.kinetic_energy(&s.field);
        assert!((t - f / 8.0).abs() < 1e-2 * f, "T = {t}, F/8 = {}", f / 8.0);
    }
}

#[test]
fn kinetic_energy_matches_fisher_on_fine_l_shape() {
    let grid = l_shape_grid(129);
    let op = assemble(grid, Potential::Zero).unwrap();
    let sol = ground_state(&op, 1e-9, 5000).unwrap();
    let f = fisher_information(&sol.field).unwrap();
    assert!((op.kinetic_energy(&sol.field) - f / 8.0).abs() < 1e-2 * f);
}

#[test]
fn too_many_excited_states() {
    let op = assemble(rectangle_grid(16, 16), Potential::Zero).unwrap();
    assert!(excited_states(&op, MAX_EXCITED_STATES + 1, 1e-8).is_err());
    assert!(excited_states(&op, 0, 1e-8).is_err());
}

#[test]
fn ground_energy_below_random_rayleigh_quotients() {
    for grid in [rectangle_grid(48, 72), l_shape_grid(49)] {
        let op = assemble(grid.clone(), Potential::Zero).unwrap();
        let e0 = ground_state(&op, 1e-9, 5000).unwrap().eigenvalue;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let values = (0..grid.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
            let trial = crlab_core::GridField::new(grid.clone(), values).unwrap();
            assert!(e0 <= op.rayleigh_quotient(&normalize(&trial).unwrap()));
        }
    }
}

#[test]
fn repeated_solves_are_bit_identical() {
    let grid = halfplane_grid(4.0, 64);
    let op = assemble(grid, Potential::Harmonic { beta: 4.0 }).unwrap();
    let opts = SolverOptions::new(1e-9, 5000).with_seed(7);
    let a = ground_state_with(&op, &opts).unwrap();
    let b = ground_state_with(&op, &opts).unwrap();
    assert_eq!(a.eigenvalue.to_bits(), b.eigenvalue.to_bits());
    assert_eq!(a.iterations, b.iterations);
    assert!(a
        .field
        .values()
        .iter()
        .zip(b.field.values())
        .all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn repeated_solves_agree_across_thread_pools() {
    let grid = rectangle_grid(200, 300);
    let op = assemble(grid, Potential::Zero).unwrap();
    let solve = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| ground_state(&op, 1e-6, 5000).unwrap().eigenvalue)
    };
    assert_eq!(solve(1).to_bits(), solve(4).to_bits());
}

#[test]
fn eigenvalue_error_is_second_order() {
    let exact = 13.0 * PI * PI / 72.0;
    let err = |n1, n2| {
        let op = assemble(rectangle_grid(n1, n2), Potential::Zero).unwrap();
        (ground_state(&op, 1e-10, 5000).unwrap().eigenvalue - exact).abs()
    };
    let (coarse, mid, fine) = (err(33, 49), err(65, 97), err(129, 193));
    for ratio in [coarse / mid, mid / fine] {
        assert!((3.7..4.3).contains(&ratio), "{coarse:e} {mid:e} {fine:e}");
    }
}
