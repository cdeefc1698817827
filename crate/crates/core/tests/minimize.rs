mod common;

use std::f64::consts::PI;

use common::*;
use crlab_core::minimizer::default_step;
use crlab_core::{
    fisher_information, min_fisher_at_variance, min_fisher_bounded, projected_gradient_min,
    variance_of_beta_curve, Error,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn rectangle_well_minimum() {
    let star = min_fisher_bounded(&rectangle_grid(128, 192)).unwrap();
    assert_eq!(star.beta, 0.0);
    assert!((star.fisher / (13.0 * PI * PI / 9.0) - 1.0).abs() < 5e-3);
    assert!((star.variance - (7.0 / 3.0 - 13.0 / (2.0 * PI * PI))).abs() < 1e-3);
}

#[test]
fn unit_interval_well_minimum() {
    let star = min_fisher_bounded(&box_grid(&[(0.0, 1.0)], &[257])).unwrap();
    assert!((star.fisher / (4.0 * PI * PI) - 1.0).abs() < 1e-3);
}

#[test]
fn closed_form_variance_target_gives_vanishing_multiplier() {
    let grid = rectangle_grid(96, 144);
    let target = 7.0 / 3.0 - 13.0 / (2.0 * PI * PI);
    let r = min_fisher_at_variance(&grid, target).unwrap();
    // the discrete ⟨x²⟩* differs from the closed form at O(h²), and so does β
    assert!(r.beta.abs() < 1e-2, "{}", r.beta);
    assert!((r.fisher / (13.0 * PI * PI / 9.0) - 1.0).abs() < 5e-3);
}

#[test]
fn multiplier_sign_follows_target() {
    let grid = rectangle_grid(32, 48);
    let star = min_fisher_bounded(&grid).unwrap();
    let below = min_fisher_at_variance(&grid, 0.9 * star.variance).unwrap();
    let above = min_fisher_at_variance(&grid, 1.1 * star.variance).unwrap();
    assert!(below.beta > 0.0 && above.beta < 0.0);
    assert!(below.fisher > star.fisher && above.fisher > star.fisher);
    assert!((below.variance / (0.9 * star.variance) - 1.0).abs() < 1e-6);
}

#[test]
fn unattainable_target_lists_interval() {
    let grid = rectangle_grid(16, 24);
    match min_fisher_at_variance(&grid, 100.0) {
        Err(Error::TargetOutOfRange { min, max, .. }) => assert!(min < max && max < 100.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn optimal_product_is_scale_invariant_on_half_plane() {
    let grid = halfplane_grid(0.25, 160);
    let small = min_fisher_at_variance(&grid, 2.0).unwrap();
    let large = min_fisher_at_variance(&grid, 8.0).unwrap();
    let (p_small, p_large) = (small.fisher * small.variance, large.fisher * large.variance);
    assert!(small.beta > 0.0 && large.beta > 0.0);
    assert!(
        (p_small / p_large - 1.0).abs() < 5e-3,
        "{p_small} {p_large}"
    );
    assert!((p_small / 16.0 - 1.0).abs() < 5e-3 && (p_large / 16.0 - 1.0).abs() < 5e-3);
}

#[test]
fn l_shape_minimum_beats_random_trials() {
    let grid = l_shape_grid(65);
    let star = min_fisher_bounded(&grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..100 {
        let s = SineSeries::random(&mut rng, &[(0.0, 1.0), (0.0, 1.0)], 4);
        let shift = rng.gen_range(0.0..0.3);
        let trial = normalized_from_fn(&grid, |x| (s.eval(x) + shift * x[0] * x[1]) * l_cutoff(x));
        assert!(fisher_information(&trial).unwrap() > star.fisher);
    }
}

#[test]
fn projected_gradient_above_minimum_off_star() {
    let grid = rectangle_grid(24, 36);
    let star = min_fisher_bounded(&grid).unwrap();
    let init = normalized_from_fn(&grid, |_| 1.0);
    let r = projected_gradient_min(
        &grid,
        0.9 * star.variance,
        &init,
        default_step(&grid),
        200_000,
    )
    .unwrap();
    assert!(r.fisher > star.fisher);
    assert!((r.variance / (0.9 * star.variance) - 1.0).abs() < 1e-6);
    for w in r.trace.windows(2) {
        assert!(w[1].fisher <= w[0].fisher * (1.0 + 1e-10));
    }
}

#[test]
fn curve_is_monotone_and_consistent() {
    let grid = rectangle_grid(32, 48);
    let star = min_fisher_bounded(&grid).unwrap();
    let betas = [-8.0, -2.0, 0.0, 2.0, 8.0, 32.0];
    let curve = variance_of_beta_curve(&grid, &betas).unwrap();
    let values: Vec<_> = curve.iter().map(|p| p.outcome.clone().unwrap()).collect();
    for w in values.windows(2) {
        assert!(w[1].variance < w[0].variance);
    }
    let zero = &values[2];
    assert_eq!(zero.variance.to_bits(), star.variance.to_bits());
    assert_eq!(zero.fisher.to_bits(), star.fisher.to_bits());
    assert!(values[5].variance < star.variance);
}

#[test]
fn curve_satisfies_virial_identity_when_walls_are_far() {
    // ground density has standard deviation β^(-1/4); keep h at a twentieth of it
    let grid = box_grid(&[(-4.0, 4.0), (-4.0, 4.0)], &[321, 321]);
    let betas = [4.0, 16.0];
    for (beta, p) in betas
        .iter()
        .zip(variance_of_beta_curve(&grid, &betas).unwrap())
    {
        let v = p.outcome.unwrap();
        let r = (v.energy * v.energy - beta / 16.0 * v.fisher * v.variance).abs()
            / (v.energy * v.energy);
        assert!(r < 1e-3, "β={beta}: {r:e}");
    }
}
