//! Normalization, second moment, Fisher information and Cramér-Rao products
//! of densities `ρ = u²` sampled on a [`Grid`].
//!
//! Two Fisher estimators are provided. [`fisher_information`] works on the
//! amplitude, `4∫|∇u|²`, and never divides. [`fisher_information_density`]
//! works on the density, `∫|∇ρ|²/ρ`, which is what a mixture of densities
//! requires since a mixture has no natural amplitude to differentiate.
//!
//! Both use the trapezoidal weights of the grid and second-order nodal
//! differences: central where both neighbours are in the closure of the
//! domain, one-sided into the domain otherwise. Nodes on the Dirichlet
//! frontier therefore see the nonzero normal derivative of well states.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::sum::pairwise;

/// Tolerance on `Σ w·u²` for a field to count as normalized.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Floor applied to the density before dividing in the ρ-form estimator.
pub const DENSITY_FLOOR: f64 = 1e-300;

const UNIT_NORM_SLACK: f64 = 1e-14;

/// Real amplitude `u` sampled at every node of a grid; zero off the interior.
#[derive(Clone, Debug)]
pub struct GridField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    normalized: bool,
}

impl GridField {
    /// Wraps node values, zeroing every exterior node.
    pub fn new(grid: Arc<Grid>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "field contains non-finite values".into(),
            ));
        }
        grid.apply_mask(&mut values);
        let norm = weighted_square(&grid, &values);
        Ok(Self {
            grid,
            values,
            normalized: (norm - 1.0).abs() <= NORMALIZATION_TOL,
        })
    }

    /// Samples `f(x)` at every interior node.
    pub fn from_fn<F>(grid: Arc<Grid>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        let mut x = vec![0.0; grid.dimension()];
        let values = (0..grid.len())
            .map(|idx| {
                if grid.is_interior(idx) {
                    grid.node_coords(idx, &mut x);
                    f(&x)
                } else {
                    0.0
                }
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `Σ w·u²`.
    pub fn norm_sq(&self) -> f64 {
        weighted_square(&self.grid, &self.values)
    }

    /// Nodal density `u²`.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|u| u * u).collect()
    }

    /// Weighted L2 distance `sqrt(Σ w·(u − v)²)`.
    pub fn l2_distance(&self, other: &GridField) -> Result<f64> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let w = self.grid.weights();
        let (a, b) = (&self.values, &other.values);
        Ok(pairwise(0, a.len(), &|i| {
            let d = a[i] - b[i];
            w[i] * d * d
        })
        .sqrt())
    }

    fn require_normalized(&self) -> Result<()> {
        if self.normalized {
            Ok(())
        } else {
            Err(Error::NotNormalized(self.norm_sq()))
        }
    }
}

fn weighted_square(grid: &Grid, values: &[f64]) -> f64 {
    let w = grid.weights();
    pairwise(0, values.len(), &|i| w[i] * values[i] * values[i])
}

/// Scales to `Σ w·u² = 1` and flips the sign so that `Σ w·u ≥ 0`.
pub fn normalize(field: &GridField) -> Result<GridField> {
    let grid = field.grid.clone();
    let w = grid.weights();
    let u = &field.values;
    let norm = weighted_square(&grid, u);
    if !(norm > 0.0) {
        return Err(Error::NullDensity);
    }
    let mean = pairwise(0, u.len(), &|i| w[i] * u[i]);
    let sign = if mean < 0.0 { -1.0 } else { 1.0 };
    // Leave a field that is already unit-norm to rounding bit-for-bit unchanged;
    // a rescaled field recomputes to 1 only within a few ulp.
    let scale = if (norm - 1.0).abs() <= UNIT_NORM_SLACK {
        sign
    } else {
        sign / norm.sqrt()
    };
    let values = u.iter().map(|v| v * scale).collect();
    GridField::new(grid, values)
}

/// Trapezoidal estimate of `⟨x²⟩ = ∫ |x|² u² dx`.
pub fn variance(field: &GridField) -> Result<f64> {
    field.require_normalized()?;
    Ok(second_moment(&field.grid, &field.values))
}

pub(crate) fn second_moment(grid: &Grid, u: &[f64]) -> f64 {
    let w = grid.weights();
    let r2 = grid.radius_sq();
    pairwise(0, u.len(), &|i| w[i] * r2[i] * u[i] * u[i])
}

/// Second-order first derivative of `f` along `axis` at node `idx`, using
/// only nodes in the closure of the domain.
pub(crate) fn first_derivative(grid: &Grid, f: &[f64], idx: usize, axis: usize) -> f64 {
    let h = grid.spacing()[axis];
    let inside = |j: Option<usize>| j.filter(|&j| grid.in_closure(j));
    let plus = inside(grid.neighbor(idx, axis, 1));
    let minus = inside(grid.neighbor(idx, axis, -1));
    match (minus, plus) {
        (Some(m), Some(p)) => (f[p] - f[m]) / (2.0 * h),
        (None, Some(p)) => match inside(grid.neighbor(idx, axis, 2)) {
            Some(p2) => (-3.0 * f[idx] + 4.0 * f[p] - f[p2]) / (2.0 * h),
            None => (f[p] - f[idx]) / h,
        },
        (Some(m), None) => match inside(grid.neighbor(idx, axis, -2)) {
            Some(m2) => (3.0 * f[idx] - 4.0 * f[m] + f[m2]) / (2.0 * h),
            None => (f[idx] - f[m]) / h,
        },
        (None, None) => 0.0,
    }
}

/// Second-order second derivative along `axis`, one-sided where needed.
fn second_derivative(grid: &Grid, f: &[f64], idx: usize, axis: usize) -> f64 {
    let h2 = grid.spacing()[axis].powi(2);
    let inside = |step: isize| {
        grid.neighbor(idx, axis, step)
            .filter(|&j| grid.in_closure(j))
    };
    match (inside(-1), inside(1)) {
        (Some(m), Some(p)) => (f[p] - 2.0 * f[idx] + f[m]) / h2,
        (None, Some(p1)) => match (inside(2), inside(3)) {
            (Some(p2), Some(p3)) => (2.0 * f[idx] - 5.0 * f[p1] + 4.0 * f[p2] - f[p3]) / h2,
            _ => 0.0,
        },
        (Some(m1), None) => match (inside(-2), inside(-3)) {
            (Some(m2), Some(m3)) => (2.0 * f[idx] - 5.0 * f[m1] + 4.0 * f[m2] - f[m3]) / h2,
            _ => 0.0,
        },
        (None, None) => 0.0,
    }
}

fn gradient_sq(grid: &Grid, f: &[f64], idx: usize) -> f64 {
    (0..grid.dimension())
        .map(|a| {
            let g = first_derivative(grid, f, idx, a);
            g * g
        })
        .sum()
}

/// Amplitude-form Fisher information `4 Σ w·|∇u|²`.
pub fn fisher_information(field: &GridField) -> Result<f64> {
    field.require_normalized()?;
    Ok(amplitude_fisher(&field.grid, &field.values))
}

pub(crate) fn amplitude_fisher(grid: &Grid, u: &[f64]) -> f64 {
    let w = grid.weights();
    4.0 * pairwise(0, u.len(), &|i| {
        if w[i] > 0.0 {
            w[i] * gradient_sq(grid, u, i)
        } else {
            0.0
        }
    })
}

/// Density-form Fisher information `Σ w·|∇ρ|²/ρ`.
///
/// Interior nodes divide by `max(ρ, 1e-300)`. On the Dirichlet frontier,
/// where `ρ` vanishes quadratically, the integrand is replaced by its limit
/// `2∇²ρ` (for `ρ = s²` with `s = 0`, `|∇ρ|²/ρ = 4|∇s|² = 2∇²ρ`).
pub fn fisher_information_density(grid: &Grid, density: &[f64]) -> Result<f64> {
    if density.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    if density.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
        return Err(Error::InvalidParameter(
            "density must be finite and nonnegative".into(),
        ));
    }
    let w = grid.weights();
    let d = grid.dimension();
    Ok(pairwise(0, density.len(), &|i| {
        if !(w[i] > 0.0) {
            return 0.0;
        }
        let integrand = if grid.is_interior(i) {
            gradient_sq(grid, density, i) / density[i].max(DENSITY_FLOOR)
        } else {
            2.0 * (0..d)
                .map(|a| second_derivative(grid, density, i, a))
                .sum::<f64>()
        };
        w[i] * integrand
    }))
}

/// Fisher information, variance and their product for one density.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalReport {
    pub normalization: f64,
    pub variance: f64,
    pub fisher: f64,
    pub cr_product: f64,
    pub spacings: Vec<f64>,
}

impl FunctionalReport {
    pub fn from_parts(normalization: f64, variance: f64, fisher: f64, spacings: Vec<f64>) -> Self {
        Self {
            normalization,
            variance,
            fisher,
            cr_product: fisher * variance,
            spacings,
        }
    }

    /// Flat key → number view; spacings appear as `h1`, `h2`, ….
    pub fn to_flat_map(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        m.insert("normalization".to_string(), self.normalization);
        m.insert("variance".to_string(), self.variance);
        m.insert("fisher".to_string(), self.fisher);
        m.insert("cr_product".to_string(), self.cr_product);
        for (a, h) in self.spacings.iter().enumerate() {
            m.insert(format!("h{}", a + 1), *h);
        }
        m
    }
}

pub fn cramer_rao_product(field: &GridField) -> Result<FunctionalReport> {
    let variance = variance(field)?;
    let fisher = fisher_information(field)?;
    Ok(FunctionalReport::from_parts(
        field.norm_sq(),
        variance,
        fisher,
        field.grid.spacing().to_vec(),
    ))
}

/// Lower bound `4(1 − 2|m|/(2l+D−2))(l + D/2)²` on `F⟨x²⟩` for a state of a
/// central potential with hyperangular quantum numbers `(l, m)` in `D`
/// dimensions. Returns exactly `D²` when `l = 0`.
pub fn central_potential_bound(l: u32, m: i32, dimension: u32) -> Result<f64> {
    if dimension < 2 {
        return Err(Error::InvalidParameter(format!(
            "dimension {dimension} < 2"
        )));
    }
    let abs_m = m.unsigned_abs();
    if abs_m > l {
        return Err(Error::InvalidMagneticNumber { l, m: abs_m });
    }
    if l == 0 {
        return Ok((dimension * dimension) as f64);
    }
    let d = dimension as f64;
    let l = l as f64;
    let factor = 1.0 - 2.0 * abs_m as f64 / (2.0 * l + d - 2.0);
    Ok(4.0 * factor * (l + 0.5 * d).powi(2))
}

/// Finite-ε slopes `(F[g_ε] − F[v²])/ε` for the mixtures
/// `g_ε = ε u² + (1 − ε) v²`, all evaluated with the density-form estimator.
///
/// As ε → 0 the slopes approach `−β(⟨x²⟩_u − ⟨x²⟩_v)` when `v` is an
/// eigenstate of `−½∇² + (β/8)x²`; see [`mixture_slope_limit`].
pub fn mixture_expansion_slope(u: &GridField, v: &GridField, epsilons: &[f64]) -> Result<Vec<f64>> {
    if !u.grid.same_as(&v.grid) {
        return Err(Error::GridMismatch);
    }
    u.require_normalized()?;
    v.require_normalized()?;
    let grid = &v.grid;
    let nodal = (0..grid.len())
        .filter(|&i| grid.is_interior(i) && !(v.values[i] > 0.0))
        .count();
    if nodal > 0 {
        return Err(Error::NodalReference { count: nodal });
    }
    if let Some(&bad) = epsilons.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "mixture weight {bad} outside (0, 1)"
        )));
    }
    let rho_u = u.density();
    let rho_v = v.density();
    let base = fisher_information_density(grid, &rho_v)?;
    epsilons
        .iter()
        .map(|&eps| {
            let g: Vec<f64> = rho_u
                .iter()
                .zip(&rho_v)
                .map(|(a, b)| eps * a + (1.0 - eps) * b)
                .collect();
            Ok((fisher_information_density(grid, &g)? - base) / eps)
        })
        .collect()
}

/// Limiting slope `−β(⟨x²⟩_u − ⟨x²⟩_v)` of the mixture expansion.
pub fn mixture_slope_limit(u: &GridField, v: &GridField, beta: f64) -> Result<f64> {
    Ok(-beta * (variance(u)? - variance(v)?))
}
