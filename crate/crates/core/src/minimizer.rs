//! Minimal Fisher information under normalization and second-moment constraints.
//!
//! The stationarity condition of `4∫|∇u|² + α(∫u² − 1) + β(∫|x|²u² − t)` is the
//! eigenproblem `−½∇²u + (β/8)|x|²u = E u`, so the constrained optimum is the
//! ground state for the β that meets the variance target.
//! [`min_fisher_at_variance`] finds that β by bisection. [`projected_gradient_min`]
//! minimizes the same discrete functional directly and serves as an
//! independent check on the bisection answer.

use std::sync::Arc;

use rayon::prelude::*;

use crate::domain::Grid;
use crate::eigensolver::{
    assemble, ground_state_with, EigenSolution, HamiltonianOperator, Potential, SolverOptions,
};
use crate::error::{Error, Result};
use crate::functionals::{self, normalize, GridField};
use crate::sum::pairwise;

/// Relative tolerance on the achieved variance.
pub const VARIANCE_RTOL: f64 = 1e-8;

/// Relative slack allowed on an F increase before a gradient step is rejected.
pub const DESCENT_SLACK: f64 = 1e-10;

/// `|β|` below this counts as zero on `grid`: `1e-6 · diameter⁻⁴`.
pub fn beta_zero_threshold(grid: &Grid) -> f64 {
    1e-6 * grid.diameter().powi(-4)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub fisher: f64,
    /// Relative violation of the variance constraint.
    pub violation: f64,
}

#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub field: GridField,
    pub beta: f64,
    pub variance: f64,
    pub fisher: f64,
    /// Ground energy of the optimal operator, when one was solved.
    pub energy: Option<f64>,
    pub trace: Vec<TraceEntry>,
}

#[derive(Clone, Debug)]
pub struct MinimizerOptions {
    pub eigen: SolverOptions,
    pub max_bisection: usize,
    pub max_expansions: usize,
}

impl Default for MinimizerOptions {
    fn default() -> Self {
        Self {
            eigen: SolverOptions::new(1e-10, 20_000),
            max_bisection: 200,
            max_expansions: 40,
        }
    }
}

fn solve_at(
    grid: &Arc<Grid>,
    beta: f64,
    opts: &SolverOptions,
    warm: Option<&GridField>,
) -> Result<EigenSolution> {
    let op = assemble(grid.clone(), Potential::Harmonic { beta })?;
    let mut o = opts.clone();
    if let Some(w) = warm {
        o.start = Some(w.values().to_vec());
    }
    ground_state_with(&op, &o)
}

struct Probe {
    beta: f64,
    variance: f64,
    sol: EigenSolution,
}

pub fn min_fisher_at_variance(grid: &Arc<Grid>, target_variance: f64) -> Result<MinimizeResult> {
    min_fisher_at_variance_with(grid, target_variance, &MinimizerOptions::default())
}

/// Bisection on β over a bracket symmetric about zero, expanded
/// geometrically until the target variance is enclosed.
///
/// Grids truncated from unbounded domains admit only β > 0; there the
/// search runs over log β starting from β = 1.
pub fn min_fisher_at_variance_with(
    grid: &Arc<Grid>,
    target_variance: f64,
    opts: &MinimizerOptions,
) -> Result<MinimizeResult> {
    let (min, max) = grid.interior_radius_sq_range();
    if !(target_variance > min && target_variance < max) {
        return Err(Error::TargetOutOfRange {
            target: target_variance,
            min,
            max,
        });
    }
    let tol = VARIANCE_RTOL * target_variance;
    let mut trace = Vec::new();
    let probe =
        |beta: f64, warm: Option<&GridField>, trace: &mut Vec<TraceEntry>| -> Result<Probe> {
            let sol = solve_at(grid, beta, &opts.eigen, warm)?;
            let variance = functionals::variance(&sol.field)?;
            trace.push(TraceEntry {
                iteration: trace.len(),
                fisher: functionals::fisher_information(&sol.field)?,
                violation: (variance - target_variance).abs() / target_variance,
            });
            Ok(Probe {
                beta,
                variance,
                sol,
            })
        };

    let truncated = grid.spec().truncated;
    // Midpoint of the symmetric bracket.
    let center = probe(if truncated { 1.0 } else { 0.0 }, None, &mut trace)?;
    if (center.variance - target_variance).abs() <= tol {
        return finish(center, trace);
    }
    // Variance falls as β grows, so a variance above target calls for β > 0.
    let direction = if center.variance > target_variance {
        1.0
    } else {
        -1.0
    };
    let mut magnitude = 64.0 * grid.diameter().powi(-4);
    let mut inner = center;
    let mut outer = None;
    for _ in 0..opts.max_expansions {
        let beta = if truncated {
            inner.beta * 4f64.powf(direction)
        } else {
            direction * magnitude
        };
        let p = probe(beta, Some(&inner.sol.field), &mut trace)?;
        if (p.variance - target_variance).abs() <= tol {
            return finish(p, trace);
        }
        let crossed = (p.variance - target_variance) * direction < 0.0;
        check_monotone(&inner, &p)?;
        if crossed {
            outer = Some(p);
            break;
        }
        inner = p;
        magnitude *= 4.0;
    }
    let Some(mut outer) = outer else {
        let beta = if truncated {
            inner.beta
        } else {
            direction * magnitude
        };
        return Err(Error::BracketExpansion {
            beta,
            reached: inner.variance,
            target: target_variance,
        });
    };

    for _ in 0..opts.max_bisection {
        let mid_beta = if truncated {
            (inner.beta * outer.beta).sqrt()
        } else {
            0.5 * (inner.beta + outer.beta)
        };
        if mid_beta == inner.beta || mid_beta == outer.beta {
            break;
        }
        let warm = if (target_variance - inner.variance).abs()
            < (target_variance - outer.variance).abs()
        {
            &inner.sol.field
        } else {
            &outer.sol.field
        };
        let warm = warm.clone();
        let mid = probe(mid_beta, Some(&warm), &mut trace)?;
        let (lo, hi) = if inner.beta < outer.beta {
            (&inner, &outer)
        } else {
            (&outer, &inner)
        };
        if !(mid.variance <= lo.variance && mid.variance >= hi.variance) {
            return Err(Error::NonMonotone { beta: mid.beta });
        }
        if (mid.variance - target_variance).abs() <= tol {
            return finish(mid, trace);
        }
        if (mid.variance - target_variance) * direction > 0.0 {
            inner = mid;
        } else {
            outer = mid;
        }
    }
    let best =
        if (inner.variance - target_variance).abs() <= (outer.variance - target_variance).abs() {
            inner
        } else {
            outer
        };
    finish(best, trace)
}

fn check_monotone(smaller_abs: &Probe, larger_abs: &Probe) -> Result<()> {
    let (lo, hi) = if smaller_abs.beta < larger_abs.beta {
        (smaller_abs, larger_abs)
    } else {
        (larger_abs, smaller_abs)
    };
    if lo.variance > hi.variance {
        Ok(())
    } else {
        Err(Error::NonMonotone {
            beta: larger_abs.beta,
        })
    }
}

fn finish(p: Probe, trace: Vec<TraceEntry>) -> Result<MinimizeResult> {
    let fisher = functionals::fisher_information(&p.sol.field)?;
    Ok(MinimizeResult {
        beta: p.beta,
        variance: p.variance,
        fisher,
        energy: Some(p.sol.eigenvalue),
        field: p.sol.field,
        trace,
    })
}

/// Global Fisher minimum over all densities on a bounded domain: the
/// infinite-well ground state.
pub fn min_fisher_bounded(grid: &Arc<Grid>) -> Result<MinimizeResult> {
    min_fisher_bounded_with(grid, &MinimizerOptions::default())
}

pub fn min_fisher_bounded_with(
    grid: &Arc<Grid>,
    opts: &MinimizerOptions,
) -> Result<MinimizeResult> {
    if grid.spec().truncated {
        return Err(Error::InvalidDomain(
            "the well minimum needs a bounded domain, not a truncated one".into(),
        ));
    }
    let op = assemble(grid.clone(), Potential::Zero)?;
    let sol = ground_state_with(&op, &opts.eigen)?;
    let variance = functionals::variance(&sol.field)?;
    let fisher = functionals::fisher_information(&sol.field)?;
    Ok(MinimizeResult {
        beta: 0.0,
        variance,
        fisher,
        energy: Some(sol.eigenvalue),
        trace: vec![TraceEntry {
            iteration: 0,
            fisher,
            violation: 0.0,
        }],
        field: sol.field,
    })
}

#[derive(Clone, Debug)]
pub struct GradientOptions {
    pub iters: usize,
    /// Stop once a step moves the field by less than this (quadrature L2).
    pub step_tol: f64,
}

impl Default for GradientOptions {
    fn default() -> Self {
        Self {
            iters: 200_000,
            step_tol: 1e-13,
        }
    }
}

/// Largest stable step for the discrete Fisher gradient `8(−½∇²_h)u`.
pub fn default_step(grid: &Grid) -> f64 {
    let sum_inv_h2: f64 = grid.spacing().iter().map(|h| 1.0 / (h * h)).sum();
    1.0 / (16.0 * sum_inv_h2)
}

pub fn projected_gradient_min(
    grid: &Arc<Grid>,
    target_variance: f64,
    init: &GridField,
    step: f64,
    iters: usize,
) -> Result<MinimizeResult> {
    projected_gradient_min_with(
        grid,
        target_variance,
        init,
        step,
        &GradientOptions {
            iters,
            ..Default::default()
        },
    )
}

/// Projected gradient descent on `F_h(u) = 8⟨u, −½∇²_h u⟩` over
/// `{Σ w u² = 1, Σ w |x|² u² = target}`.
///
/// `init` is projected onto the constraint set before the first step.
pub fn projected_gradient_min_with(
    grid: &Arc<Grid>,
    target_variance: f64,
    init: &GridField,
    step: f64,
    opts: &GradientOptions,
) -> Result<MinimizeResult> {
    if !init.grid().same_as(grid) {
        return Err(Error::GridMismatch);
    }
    let (min, max) = grid.interior_radius_sq_range();
    if !(target_variance > min && target_variance < max) {
        return Err(Error::TargetOutOfRange {
            target: target_variance,
            min,
            max,
        });
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step {step} must be positive"
        )));
    }
    let free = assemble(grid.clone(), Potential::Zero)?;
    let w = grid.weights().to_vec();
    let r2 = grid.radius_sq().to_vec();
    let n = grid.len();

    let objective = |u: &[f64], hu: &mut Vec<f64>| -> f64 {
        free.apply(u, hu);
        8.0 * pairwise(0, n, &|i| w[i] * u[i] * hu[i])
    };
    let violation = |u: &[f64]| -> f64 {
        (pairwise(0, n, &|i| w[i] * r2[i] * u[i] * u[i]) - target_variance).abs() / target_variance
    };

    let mut u = project(grid, init.values(), target_variance)?;
    let mut hu = vec![0.0; n];
    let mut fisher = objective(&u, &mut hu);
    let mut trace = vec![TraceEntry {
        iteration: 0,
        fisher,
        violation: violation(&u),
    }];
    let mut step = step;
    let min_step = step * 1e-12;
    let mut trial = vec![0.0; n];
    let mut trial_hu = vec![0.0; n];

    for it in 1..=opts.iters {
        // hu holds −½∇²u for the accepted iterate; the gradient is 8·hu.
        loop {
            trial
                .iter_mut()
                .enumerate()
                .for_each(|(i, t)| *t = u[i] - step * 8.0 * hu[i]);
            let projected = project(grid, &trial, target_variance)?;
            let f = objective(&projected, &mut trial_hu);
            if f <= fisher + DESCENT_SLACK * fisher.abs() {
                let moved = pairwise(0, n, &|i| {
                    let d = projected[i] - u[i];
                    w[i] * d * d
                })
                .sqrt();
                u = projected;
                std::mem::swap(&mut hu, &mut trial_hu);
                fisher = f;
                trace.push(TraceEntry {
                    iteration: it,
                    fisher,
                    violation: violation(&u),
                });
                if moved < opts.step_tol {
                    return gradient_result(grid, u, &hu, target_variance, trace);
                }
                break;
            }
            step *= 0.5;
            if step < min_step {
                return Err(Error::StepUnderflow { iteration: it });
            }
        }
    }
    gradient_result(grid, u, &hu, target_variance, trace)
}

fn gradient_result(
    grid: &Arc<Grid>,
    u: Vec<f64>,
    hu: &[f64],
    target_variance: f64,
    trace: Vec<TraceEntry>,
) -> Result<MinimizeResult> {
    let beta = fitted_beta(grid, &u, hu);
    let field = normalize(&GridField::new(grid.clone(), u)?)?;
    let fisher = functionals::fisher_information(&field)?;
    let variance = functionals::variance(&field)?;
    debug_assert!((variance - target_variance).abs() <= 1e-6 * target_variance);
    Ok(MinimizeResult {
        field,
        beta,
        variance,
        fisher,
        energy: None,
        trace,
    })
}

/// Least-squares fit of `−½∇²u = a·u − (β/8)|x|²u` over interior nodes.
fn fitted_beta(grid: &Grid, u: &[f64], hu: &[f64]) -> f64 {
    let w = grid.weights();
    let r2 = grid.radius_sq();
    let n = u.len();
    let s = |f: &(dyn Fn(usize) -> f64 + Sync)| {
        pairwise(0, n, &|i| {
            if grid.is_interior(i) {
                w[i] * f(i)
            } else {
                0.0
            }
        })
    };
    let uu = s(&|i| u[i] * u[i]);
    let ur = s(&|i| r2[i] * u[i] * u[i]);
    let rr = s(&|i| r2[i] * r2[i] * u[i] * u[i]);
    let hu_u = s(&|i| hu[i] * u[i]);
    let hu_r = s(&|i| hu[i] * r2[i] * u[i]);
    // [uu ur; ur rr] [a; c] = [hu_u; hu_r], with c = −β/8.
    let det = uu * rr - ur * ur;
    let c = (uu * hu_r - ur * hu_u) / det;
    -8.0 * c
}

/// Nearest point to `p` (quadrature norm) with `Σ w u² = 1` and `Σ w |x|² u² = t`.
///
/// Stationarity gives `u = p / (1 + a + b|x|²)`; the two multipliers are
/// found by damped Newton iteration.
pub fn project(grid: &Grid, p: &[f64], target_variance: f64) -> Result<Vec<f64>> {
    let w = grid.weights();
    let r2 = grid.radius_sq();
    let n = p.len();
    let (rmin, rmax) = grid.interior_radius_sq_range();
    let masked: Vec<f64> = (0..n)
        .map(|i| if grid.is_interior(i) { p[i] } else { 0.0 })
        .collect();
    if !masked.iter().any(|&v| v != 0.0) {
        return Err(Error::ProjectionFailed("null field".into()));
    }

    let residuals = |a: f64, b: f64| -> (f64, f64) {
        let m0 = pairwise(0, n, &|i| {
            let d = 1.0 + a + b * r2[i];
            w[i] * masked[i] * masked[i] / (d * d)
        });
        let m1 = pairwise(0, n, &|i| {
            let d = 1.0 + a + b * r2[i];
            w[i] * r2[i] * masked[i] * masked[i] / (d * d)
        });
        (m0 - 1.0, (m1 - target_variance) / target_variance)
    };
    let feasible = |a: f64, b: f64| 1.0 + a + b * rmin > 0.0 && 1.0 + a + b * rmax > 0.0;

    // Start from plain normalization so the first Newton step is small.
    let m0 = pairwise(0, n, &|i| w[i] * masked[i] * masked[i]);
    let mut a = m0.sqrt() - 1.0;
    let mut b = 0.0;
    let (mut f0, mut f1) = residuals(a, b);
    let converged = |f0: f64, f1: f64| f0.abs() < 1e-14 && f1.abs() < 1e-14;
    for _ in 0..200 {
        if converged(f0, f1) {
            break;
        }
        let moment = |k: i32| {
            pairwise(0, n, &|i| {
                let d = 1.0 + a + b * r2[i];
                -2.0 * w[i] * r2[i].powi(k) * masked[i] * masked[i] / (d * d * d)
            })
        };
        let (j00, j01, j11) = (moment(0), moment(1), moment(2));
        // Jacobian rows: ∂f0/∂(a, b) = (j00, j01); ∂f1/∂(a, b) = (j01, j11)/t.
        let (k10, k11) = (j01 / target_variance, j11 / target_variance);
        let det = j00 * k11 - j01 * k10;
        if !(det.abs() > 0.0 && det.is_finite()) {
            return Err(Error::ProjectionFailed("singular Newton system".into()));
        }
        let da = -(k11 * f0 - j01 * f1) / det;
        let db = -(j00 * f1 - k10 * f0) / det;
        let norm = f0.hypot(f1);
        let mut lambda = 1.0;
        loop {
            let (na, nb) = (a + lambda * da, b + lambda * db);
            if feasible(na, nb) {
                let (g0, g1) = residuals(na, nb);
                if g0.hypot(g1) < norm {
                    (a, b, f0, f1) = (na, nb, g0, g1);
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                // Rounding floor: accept if already tight.
                if norm < 1e-12 {
                    break;
                }
                return Err(Error::ProjectionFailed(format!(
                    "line search stalled at residual {norm:e}"
                )));
            }
        }
        if lambda < 1e-12 {
            break;
        }
    }
    if f0.hypot(f1) < 1e-12 {
        return Ok((0..n).map(|i| masked[i] / (1.0 + a + b * r2[i])).collect());
    }
    Err(Error::ProjectionFailed(format!(
        "no convergence (residuals {f0:e}, {f1:e})"
    )))
}

#[derive(Clone, Debug)]
pub struct CurvePoint {
    pub beta: f64,
    pub outcome: std::result::Result<CurveValues, String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveValues {
    pub variance: f64,
    pub fisher: f64,
    pub energy: f64,
}

pub fn variance_of_beta_curve(grid: &Arc<Grid>, betas: &[f64]) -> Result<Vec<CurvePoint>> {
    variance_of_beta_curve_with(grid, betas, &SolverOptions::new(1e-10, 20_000))
}

/// Ground-state variance, Fisher information and energy for each β.
///
/// Failed solves are reported per entry; the successful entries must show
/// variance strictly decreasing in β.
pub fn variance_of_beta_curve_with(
    grid: &Arc<Grid>,
    betas: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<CurvePoint>> {
    let points: Vec<CurvePoint> = betas
        .par_iter()
        .map(|&beta| {
            let outcome = (|| -> Result<CurveValues> {
                let op: HamiltonianOperator = assemble(grid.clone(), Potential::Harmonic { beta })?;
                let sol = ground_state_with(&op, opts)?;
                Ok(CurveValues {
                    variance: functionals::variance(&sol.field)?,
                    fisher: functionals::fisher_information(&sol.field)?,
                    energy: sol.eigenvalue,
                })
            })()
            .map_err(|e| e.to_string());
            CurvePoint { beta, outcome }
        })
        .collect();
    let mut ok: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.outcome.as_ref().ok().map(|v| (p.beta, v.variance)))
        .collect();
    ok.sort_by(|a, b| a.0.total_cmp(&b.0));
    for pair in ok.windows(2) {
        if pair[0].0 < pair[1].0 && !(pair[1].1 < pair[0].1) {
            return Err(Error::NonMonotone { beta: pair[1].0 });
        }
    }
    Ok(points)
}
