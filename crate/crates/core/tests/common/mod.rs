#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use crlab_core::{
    build_grid, normalize, truncate_unbounded, DomainSpec, Grid, GridField, Interval, SubBox,
};
use rand::Rng;

pub fn box_grid(bounds: &[(f64, f64)], nodes: &[usize]) -> Arc<Grid> {
    let spec = DomainSpec::bounded_box(bounds.iter().map(|&(a, b)| Interval::new(a, b)).collect())
        .unwrap();
    Arc::new(build_grid(&spec, nodes).unwrap())
}

pub const RECTANGLE: [(f64, f64); 2] = [(0.0, 2.0), (-1.0, 2.0)];

pub fn rectangle_grid(n1: usize, n2: usize) -> Arc<Grid> {
    box_grid(&RECTANGLE, &[n1, n2])
}

/// Unit square with the quadrant `[0.5, 1]²` removed.
pub fn l_shape_grid(n: usize) -> Arc<Grid> {
    let spec = DomainSpec::masked_box(
        vec![Interval::new(0.0, 1.0), Interval::new(0.0, 1.0)],
        vec![SubBox::new(vec![0.5, 0.5], vec![1.0, 1.0])],
    )
    .unwrap();
    Arc::new(build_grid(&spec, &[n, n]).unwrap())
}

/// Distance-like cutoff vanishing on the re-entrant edges of the L-shape.
pub fn l_cutoff(x: &[f64]) -> f64 {
    (0.5 - x[0]).max(0.5 - x[1]).max(0.0)
}

pub fn halfplane_grid(beta: f64, n: usize) -> Arc<Grid> {
    let spec = truncate_unbounded(
        &DomainSpec::halfspace(2, 0, true, 0.0).unwrap(),
        beta,
        1e-10,
    )
    .unwrap();
    Arc::new(build_grid(&spec, &[n, n]).unwrap())
}

/// Random combination of the lowest `modes` sine modes of a box per axis,
/// coefficients decaying like `1/(j k)`.
pub struct SineSeries {
    bounds: Vec<(f64, f64)>,
    modes: usize,
    coeffs: Vec<f64>,
}

impl SineSeries {
    pub fn random<R: Rng>(rng: &mut R, bounds: &[(f64, f64)], modes: usize) -> Self {
        let d = bounds.len();
        let count = modes.pow(d as u32);
        let mut coeffs = Vec::with_capacity(count);
        for flat in 0..count {
            let mut decay = 1.0;
            let mut f = flat;
            for _ in 0..d {
                decay *= (f % modes + 1) as f64;
                f /= modes;
            }
            coeffs.push(rng.gen_range(-1.0..1.0) / decay);
        }
        Self {
            bounds: bounds.to_vec(),
            modes,
            coeffs,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for (flat, c) in self.coeffs.iter().enumerate() {
            let mut term = *c;
            let mut f = flat;
            for (a, &(lo, hi)) in self.bounds.iter().enumerate() {
                let j = (f % self.modes + 1) as f64;
                f /= self.modes;
                term *= (j * PI * (x[a] - lo) / (hi - lo)).sin();
            }
            sum += term;
        }
        sum
    }
}

/// Smooth bounded perturbation `Σ a cos(k·x + φ)` with `|s| ≤ 1`.
pub struct Wiggle {
    terms: Vec<(f64, Vec<f64>, f64)>,
}

impl Wiggle {
    pub fn random<R: Rng>(rng: &mut R, dimension: usize, terms: usize, max_k: f64) -> Self {
        let terms = (0..terms)
            .map(|_| {
                let k = (0..dimension)
                    .map(|_| rng.gen_range(-max_k..max_k))
                    .collect();
                (rng.gen_range(0.0..1.0), k, rng.gen_range(0.0..2.0 * PI))
            })
            .collect::<Vec<_>>();
        let total: f64 = terms.iter().map(|t: &(f64, Vec<f64>, f64)| t.0).sum();
        Self {
            terms: terms
                .into_iter()
                .map(|(a, k, p)| (a / total, k, p))
                .collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(a, k, p)| a * (k.iter().zip(x).map(|(k, x)| k * x).sum::<f64>() + p).cos())
            .sum()
    }
}

pub fn normalized_from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> GridField {
    normalize(&GridField::from_fn(grid.clone(), f).unwrap()).unwrap()
}

/// `base · (1 + δ·s)` on every node, renormalized.
pub fn perturbed(base: &GridField, wiggle: &Wiggle, delta: f64) -> GridField {
    let grid = base.grid();
    let mut x = vec![0.0; grid.dimension()];
    let values = base
        .values()
        .iter()
        .enumerate()
        .map(|(i, u)| {
            grid.node_coords(i, &mut x);
            u * (1.0 + delta * wiggle.eval(&x))
        })
        .collect();
    normalize(&GridField::new(grid.clone(), values).unwrap()).unwrap()
}
