//! Ground and low excited states of `H = −½∇² + V` with Dirichlet walls.
//!
//! `H` is applied matrix-free with the `(2D+1)`-point Laplacian on interior
//! nodes; exterior nodes are pinned to zero. Eigenpairs come from inverse
//! power iteration with a fixed shift below the spectrum, each step solving
//! the shifted system by conjugate gradients warm-started from the previous
//! iterate. Excited states are found one at a time against a deflated basis.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::functionals::{self, normalize, GridField};
use crate::sum::{dot, pairwise};

pub const DEFAULT_SEED: u64 = 42;
pub const MAX_EXCITED_STATES: usize = 10;

/// Relative gap below which neighbouring eigenvalues are reported as one cluster.
pub const DEGENERACY_GAP: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Potential {
    /// Infinite well: `V = 0` inside the domain.
    Zero,
    /// `V = (β/8)|x|²`.
    Harmonic { beta: f64 },
}

impl Potential {
    pub fn beta(&self) -> f64 {
        match *self {
            Potential::Zero => 0.0,
            Potential::Harmonic { beta } => beta,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianOperator {
    grid: Arc<Grid>,
    potential: Potential,
    potential_values: Vec<f64>,
    inv_h2: Vec<f64>,
}

/// Builds `H` on `grid`.
///
/// Any finite β is accepted on a bounded grid, where `H` stays bounded
/// below. On a grid standing in for an unbounded domain β must be positive.
pub fn assemble(grid: Arc<Grid>, potential: Potential) -> Result<HamiltonianOperator> {
    let potential_values = match potential {
        Potential::Zero => vec![0.0; grid.len()],
        Potential::Harmonic { beta } => {
            if !beta.is_finite() {
                return Err(Error::InvalidParameter(format!("β = {beta}")));
            }
            if grid.spec().truncated && beta <= 0.0 {
                return Err(Error::NonPositiveBeta(beta));
            }
            grid.radius_sq()
                .iter()
                .zip(grid.interior_mask())
                .map(|(&r2, &inside)| if inside { beta / 8.0 * r2 } else { 0.0 })
                .collect()
        }
    };
    let inv_h2 = grid.spacing().iter().map(|h| 1.0 / (h * h)).collect();
    Ok(HamiltonianOperator {
        grid,
        potential,
        potential_values,
        inv_h2,
    })
}

impl HamiltonianOperator {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn potential(&self) -> Potential {
        self.potential
    }

    /// `out = H u`, reading `u` only at interior nodes.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        self.apply_shifted(0.0, u, out);
    }

    /// `out = (H − σ) u`.
    pub fn apply_shifted(&self, shift: f64, u: &[f64], out: &mut [f64]) {
        let interior = self.grid.interior_mask();
        let strides = self.grid.strides();
        let v = &self.potential_values;
        let inv_h2 = &self.inv_h2;
        out.par_iter_mut()
            .enumerate()
            .with_min_len(4096)
            .for_each(|(i, o)| {
                if !interior[i] {
                    *o = 0.0;
                    return;
                }
                let ui = u[i];
                let mut lap = 0.0;
                for (a, &s) in strides.iter().enumerate() {
                    let up = if interior[i + s] { u[i + s] } else { 0.0 };
                    let um = if interior[i - s] { u[i - s] } else { 0.0 };
                    lap += (up - 2.0 * ui + um) * inv_h2[a];
                }
                *o = -0.5 * lap + (v[i] - shift) * ui;
            });
    }

    /// Lower Gershgorin bound of `H` restricted to interior nodes.
    pub fn gershgorin_lower(&self) -> f64 {
        let interior = self.grid.interior_mask();
        let strides = self.grid.strides();
        let mut lower = f64::INFINITY;
        for i in (0..self.grid.len()).filter(|&i| interior[i]) {
            let mut diag = self.potential_values[i];
            let mut off = 0.0;
            for (a, &s) in strides.iter().enumerate() {
                diag += self.inv_h2[a];
                for j in [i + s, i - s] {
                    if interior[j] {
                        off += 0.5 * self.inv_h2[a];
                    }
                }
            }
            lower = lower.min(diag - off);
        }
        lower
    }

    /// `⟨u, H u⟩ / ⟨u, u⟩` in the quadrature inner product.
    pub fn rayleigh_quotient(&self, field: &GridField) -> f64 {
        let u = field.values();
        let mut hu = vec![0.0; u.len()];
        self.apply(u, &mut hu);
        let w = self.grid.weights();
        pairwise(0, u.len(), &|i| w[i] * u[i] * hu[i]) / field.norm_sq()
    }

    /// Kinetic energy `⟨u, −½∇²u⟩` in the quadrature inner product.
    pub fn kinetic_energy(&self, field: &GridField) -> f64 {
        let free = HamiltonianOperator {
            grid: self.grid.clone(),
            potential: Potential::Zero,
            potential_values: vec![0.0; self.grid.len()],
            inv_h2: self.inv_h2.clone(),
        };
        free.rayleigh_quotient(field) * field.norm_sq()
    }

    fn residual_norm(&self, eigenvalue: f64, u: &[f64], hu: &[f64]) -> f64 {
        let w = self.grid.weights();
        let num = pairwise(0, u.len(), &|i| {
            let r = hu[i] - eigenvalue * u[i];
            w[i] * r * r
        });
        let den = pairwise(0, u.len(), &|i| w[i] * u[i] * u[i]);
        (num / den).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Warm start; replaces the seeded random field when present.
    pub start: Option<Vec<f64>>,
}

impl SolverOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            seed: DEFAULT_SEED,
            start: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_start(mut self, start: Vec<f64>) -> Self {
        self.start = Some(start);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-4) {
            return Err(Error::InvalidParameter(format!(
                "eigen tolerance {} outside (0, 1e-4]",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        Ok(())
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::new(1e-8, 5000)
    }
}

#[derive(Clone, Debug)]
pub struct EigenSolution {
    pub eigenvalue: f64,
    pub field: GridField,
    /// `‖Hu − Eu‖ / ‖u‖` in the quadrature norm.
    pub residual: f64,
    pub iterations: usize,
    /// Residual after every outer iteration.
    pub history: Vec<f64>,
    pub potential: Potential,
    /// Member of a cluster with relative gap below [`DEGENERACY_GAP`].
    pub degenerate: bool,
}

impl EigenSolution {
    pub fn to_flat_map(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        m.insert("energy".to_string(), self.eigenvalue);
        m.insert("residual".to_string(), self.residual);
        m.insert("iterations".to_string(), self.iterations as f64);
        m.insert("beta".to_string(), self.potential.beta());
        m.insert(
            "degenerate".to_string(),
            if self.degenerate { 1.0 } else { 0.0 },
        );
        m
    }
}

/// Deterministic positive start field from `seed`.
pub fn start_field(grid: &Grid, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..grid.len())
        .map(|i| {
            let v = rng.gen_range(0.5..1.5);
            if grid.is_interior(i) {
                v
            } else {
                0.0
            }
        })
        .collect()
}

pub fn ground_state(op: &HamiltonianOperator, tol: f64, max_iter: usize) -> Result<EigenSolution> {
    ground_state_with(op, &SolverOptions::new(tol, max_iter))
}

pub fn ground_state_with(op: &HamiltonianOperator, opts: &SolverOptions) -> Result<EigenSolution> {
    opts.validate()?;
    let start = match &opts.start {
        Some(s) if s.len() == op.grid.len() => s.clone(),
        Some(_) => return Err(Error::GridMismatch),
        None => start_field(&op.grid, opts.seed),
    };
    inverse_iteration(op, &[], start, opts)
}

/// The `k` lowest eigenpairs in nondecreasing order of energy.
pub fn excited_states(op: &HamiltonianOperator, k: usize, tol: f64) -> Result<Vec<EigenSolution>> {
    excited_states_with(op, k, &SolverOptions::new(tol, 20_000))
}

pub fn excited_states_with(
    op: &HamiltonianOperator,
    k: usize,
    opts: &SolverOptions,
) -> Result<Vec<EigenSolution>> {
    opts.validate()?;
    if k == 0 || k > MAX_EXCITED_STATES {
        return Err(Error::InvalidParameter(format!(
            "k = {k} outside 1..={MAX_EXCITED_STATES}"
        )));
    }
    let mut locked: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut found = Vec::with_capacity(k);
    for n in 0..k {
        let start = start_field(&op.grid, opts.seed.wrapping_add(n as u64));
        let sol = inverse_iteration(op, &locked, start, opts)?;
        let mut v = sol.field.values().to_vec();
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        locked.push(v);
        found.push(sol);
    }
    found.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue));
    for i in 1..found.len() {
        let (a, b) = (found[i - 1].eigenvalue, found[i].eigenvalue);
        if (b - a).abs() < DEGENERACY_GAP * b.abs().max(a.abs()) {
            found[i - 1].degenerate = true;
            found[i].degenerate = true;
        }
    }
    Ok(found)
}

/// Removes the components along each (Euclidean-orthonormal) locked vector.
fn deflate(x: &mut [f64], locked: &[Vec<f64>]) {
    for q in locked {
        let c = dot(x, q);
        x.iter_mut().zip(q).for_each(|(xi, qi)| *xi -= c * qi);
    }
}

fn inverse_iteration(
    op: &HamiltonianOperator,
    locked: &[Vec<f64>],
    mut u: Vec<f64>,
    opts: &SolverOptions,
) -> Result<EigenSolution> {
    let n = op.grid.len();
    let shift = op.gershgorin_lower() - 1.0;
    op.grid.apply_mask(&mut u);
    deflate(&mut u, locked);
    let norm = dot(&u, &u).sqrt();
    if !(norm > 0.0) {
        return Err(Error::NullDensity);
    }
    u.iter_mut().for_each(|x| *x /= norm);

    let mut hu = vec![0.0; n];
    op.apply(&u, &mut hu);
    let mut energy = dot(&u, &hu);
    let mut residual = op.residual_norm(energy, &u, &hu);
    let mut history = Vec::new();
    let mut x = vec![0.0; n];
    let mut cg = CgWorkspace::new(n);

    for it in 1..=opts.max_iter {
        let scale = 1.0 / (energy - shift);
        x.iter_mut().zip(&u).for_each(|(xi, ui)| *xi = ui * scale);
        let cg_tol = 0.1 * opts.tol * scale;
        cg.solve(op, shift, &u, &mut x, cg_tol, 20 * n + 1000)?;
        deflate(&mut x, locked);
        let norm = dot(&x, &x).sqrt();
        if !(norm > 0.0) {
            return Err(Error::NoConvergence {
                iterations: it,
                residual,
            });
        }
        u.iter_mut().zip(&x).for_each(|(ui, xi)| *ui = xi / norm);
        op.apply(&u, &mut hu);
        energy = dot(&u, &hu);
        residual = op.residual_norm(energy, &u, &hu);
        history.push(residual);
        if residual <= opts.tol {
            let field = normalize(&GridField::new(op.grid.clone(), u)?)?;
            return Ok(EigenSolution {
                eigenvalue: energy,
                field,
                residual,
                iterations: it,
                history,
                potential: op.potential,
                degenerate: false,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

struct CgWorkspace {
    r: Vec<f64>,
    p: Vec<f64>,
    ap: Vec<f64>,
}

impl CgWorkspace {
    fn new(n: usize) -> Self {
        Self {
            r: vec![0.0; n],
            p: vec![0.0; n],
            ap: vec![0.0; n],
        }
    }

    /// Solves `(H − σ) x = b` to relative residual `rel_tol·‖b‖`, starting from `x`.
    fn solve(
        &mut self,
        op: &HamiltonianOperator,
        shift: f64,
        b: &[f64],
        x: &mut [f64],
        rel_tol: f64,
        max_iter: usize,
    ) -> Result<usize> {
        let Self { r, p, ap } = self;
        op.apply_shifted(shift, x, ap);
        r.iter_mut()
            .zip(b.iter().zip(ap.iter()))
            .for_each(|(ri, (bi, ai))| *ri = bi - ai);
        p.copy_from_slice(r);
        let target = rel_tol * dot(b, b).sqrt();
        let mut rr = dot(r, r);
        for k in 0..max_iter {
            if rr.sqrt() <= target {
                return Ok(k);
            }
            op.apply_shifted(shift, p, ap);
            let alpha = rr / dot(p, ap);
            x.iter_mut()
                .zip(p.iter())
                .for_each(|(xi, pi)| *xi += alpha * pi);
            r.iter_mut()
                .zip(ap.iter())
                .for_each(|(ri, ai)| *ri -= alpha * ai);
            let rr_next = dot(r, r);
            let beta = rr_next / rr;
            rr = rr_next;
            p.iter_mut()
                .zip(r.iter())
                .for_each(|(pi, ri)| *pi = ri + beta * *pi);
        }
        Err(Error::LinearSolve {
            iterations: max_iter,
            residual: rr.sqrt(),
        })
    }
}

/// `|E² − (β/16)·F·⟨x²⟩| / E²` on a solved harmonic eigenstate.
pub fn virial_check(sol: &EigenSolution, beta: f64) -> Result<f64> {
    if !matches!(sol.potential, Potential::Harmonic { .. }) {
        return Err(Error::VirialRequiresHarmonic);
    }
    if !(beta > 0.0) {
        return Err(Error::NonPositiveBeta(beta));
    }
    let fisher = functionals::fisher_information(&sol.field)?;
    let variance = functionals::variance(&sol.field)?;
    let e2 = sol.eigenvalue * sol.eigenvalue;
    Ok((e2 - beta / 16.0 * fisher * variance).abs() / e2)
}
