//! Domains in R^D and the uniform tensor grids that discretize them.
//!
//! A [`DomainSpec`] is declarative: a box (possibly with unbounded axes), a
//! half-space, or a box with excluded sub-boxes. Unbounded axes must be cut
//! down with [`truncate_unbounded`] before [`build_grid`] accepts the spec.
//!
//! Dirichlet conditions are enforced by masking: every node on the outer
//! faces of the enclosing box, and every node inside or on an excluded
//! sub-box, is exterior and carries `u = 0`.

use crate::error::{Error, Result};
use statrs::function::erf::erfc;

/// Fewer nodes than this cannot support the second-order one-sided stencils.
pub const MIN_NODES_PER_AXIS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    Box,
    HalfSpace,
    MaskedBox,
}

/// `{x : sign·(x[axis] − offset) > 0}` in R^D.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfSpace {
    pub axis: usize,
    pub positive: bool,
    pub offset: f64,
}

/// Axis-aligned box removed from the enclosing box of a masked domain.
#[derive(Clone, Debug, PartialEq)]
pub struct SubBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SubBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { lower, upper }
    }

    fn contains_closed(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&xi, (&lo, &hi))| xi >= lo - tol && xi <= hi + tol)
    }

    fn contains_open(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&xi, (&lo, &hi))| xi > lo && xi < hi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    pub dimension: usize,
    pub kind: DomainKind,
    /// `None` marks an unbounded axis.
    pub bounds: Vec<Option<Interval>>,
    pub halfspace: Option<HalfSpace>,
    pub excluded: Vec<SubBox>,
    /// Set by [`truncate_unbounded`]; the spec stands in for an unbounded domain.
    pub truncated: bool,
}

impl DomainSpec {
    pub fn bounded_box(bounds: Vec<Interval>) -> Result<Self> {
        let spec = Self {
            dimension: bounds.len(),
            kind: DomainKind::Box,
            bounds: bounds.into_iter().map(Some).collect(),
            halfspace: None,
            excluded: Vec::new(),
            truncated: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Box with optional bounds; `None` axes extend over the whole line.
    pub fn partial_box(bounds: Vec<Option<Interval>>) -> Result<Self> {
        let spec = Self {
            dimension: bounds.len(),
            kind: DomainKind::Box,
            bounds,
            halfspace: None,
            excluded: Vec::new(),
            truncated: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn full_space(dimension: usize) -> Result<Self> {
        Self::partial_box(vec![None; dimension])
    }

    /// Half-space with every other axis unbounded.
    pub fn halfspace(dimension: usize, axis: usize, positive: bool, offset: f64) -> Result<Self> {
        let spec = Self {
            dimension,
            kind: DomainKind::HalfSpace,
            bounds: vec![None; dimension],
            halfspace: Some(HalfSpace {
                axis,
                positive,
                offset,
            }),
            excluded: Vec::new(),
            truncated: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn masked_box(bounds: Vec<Interval>, excluded: Vec<SubBox>) -> Result<Self> {
        let spec = Self {
            dimension: bounds.len(),
            kind: DomainKind::MaskedBox,
            bounds: bounds.into_iter().map(Some).collect(),
            halfspace: None,
            excluded,
            truncated: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDomain(msg));
        if self.dimension == 0 {
            return bad("dimension must be at least 1".into());
        }
        if self.bounds.len() != self.dimension {
            return bad(format!(
                "{} axis bounds given for dimension {}",
                self.bounds.len(),
                self.dimension
            ));
        }
        for (axis, b) in self.bounds.iter().enumerate() {
            if let Some(iv) = b {
                if !(iv.lower.is_finite() && iv.upper.is_finite() && iv.lower < iv.upper) {
                    return bad(format!(
                        "axis {axis}: need finite lower < upper, got [{}, {}]",
                        iv.lower, iv.upper
                    ));
                }
            }
        }
        match self.kind {
            DomainKind::HalfSpace => {
                let Some(hs) = self.halfspace else {
                    return bad("half-space domain without a constrained axis".into());
                };
                if hs.axis >= self.dimension {
                    return bad(format!("half-space axis {} out of range", hs.axis));
                }
                if !hs.offset.is_finite() {
                    return bad("half-space offset must be finite".into());
                }
                if let Some(iv) = self.bounds[hs.axis] {
                    let wall = if hs.positive { iv.lower } else { iv.upper };
                    if wall != hs.offset {
                        return bad(format!(
                            "truncated half-space axis {} must end at the wall {}",
                            hs.axis, hs.offset
                        ));
                    }
                }
                if !self.excluded.is_empty() {
                    return bad("excluded sub-boxes need a masked box".into());
                }
            }
            DomainKind::Box => {
                if self.halfspace.is_some() || !self.excluded.is_empty() {
                    return bad("plain box cannot carry a half-space or exclusions".into());
                }
            }
            DomainKind::MaskedBox => {
                if self.halfspace.is_some() {
                    return bad("masked box cannot carry a half-space".into());
                }
                for (k, sub) in self.excluded.iter().enumerate() {
                    if sub.lower.len() != self.dimension || sub.upper.len() != self.dimension {
                        return bad(format!("excluded box {k} has wrong dimension"));
                    }
                    for axis in 0..self.dimension {
                        let Some(iv) = self.bounds[axis] else {
                            return bad(format!("masked box axis {axis} must be bounded"));
                        };
                        let (lo, hi) = (sub.lower[axis], sub.upper[axis]);
                        if !(lo < hi && lo >= iv.lower && hi <= iv.upper) {
                            return bad(format!(
                                "excluded box {k} axis {axis} [{lo}, {hi}] must lie inside [{}, {}]",
                                iv.lower, iv.upper
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn unbounded_axes(&self) -> Vec<usize> {
        (0..self.dimension)
            .filter(|&a| self.bounds[a].is_none())
            .collect()
    }

    pub fn is_bounded(&self) -> bool {
        self.bounds.iter().all(Option::is_some)
    }
}

/// Constant `c` with two-sided Gaussian tail mass `erfc(c/√2) = tail_tol`.
///
/// The ground density of `−½∇² + (β/8)x²` along one axis is proportional to
/// `exp(−√β x²/2)`, a normal law with standard deviation `β^(−1/4)`.
pub fn tail_constant(tail_tol: f64) -> Result<f64> {
    if !(tail_tol > 0.0 && tail_tol < 1e-2) {
        return Err(Error::InvalidTailTolerance(tail_tol));
    }
    let mass = |c: f64| erfc(c / std::f64::consts::SQRT_2);
    let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > tail_tol {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(hi)
}

/// Truncation half-width `L = margin · c(tail_tol) · β^(−1/4)`.
pub fn truncation_radius(beta: f64, tail_tol: f64, margin: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::NonPositiveBeta(beta));
    }
    if !(margin >= 1.0 && margin.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "truncation margin {margin} must be ≥ 1"
        )));
    }
    Ok(margin * tail_constant(tail_tol)? * beta.powf(-0.25))
}

pub fn truncate_unbounded(spec: &DomainSpec, beta: f64, tail_tol: f64) -> Result<DomainSpec> {
    truncate_unbounded_with_margin(spec, beta, tail_tol, 1.0)
}

/// Replaces every unbounded axis by `[−L, L]`, or by `[offset, max(offset, 0) + L]`
/// (mirrored for a negative half-space) on the constrained axis.
pub fn truncate_unbounded_with_margin(
    spec: &DomainSpec,
    beta: f64,
    tail_tol: f64,
    margin: f64,
) -> Result<DomainSpec> {
    spec.validate()?;
    let radius = truncation_radius(beta, tail_tol, margin)?;
    let open = spec.unbounded_axes();
    if open.is_empty() {
        return Err(Error::NothingToTruncate);
    }
    let mut out = spec.clone();
    for axis in open {
        let iv = match spec.halfspace {
            Some(hs) if hs.axis == axis => {
                if hs.positive {
                    Interval::new(hs.offset, hs.offset.max(0.0) + radius)
                } else {
                    Interval::new(hs.offset.min(0.0) - radius, hs.offset)
                }
            }
            _ => Interval::new(-radius, radius),
        };
        out.bounds[axis] = Some(iv);
    }
    out.truncated = true;
    out.validate()?;
    Ok(out)
}

/// Uniform tensor-product grid over the enclosing box of a bounded domain.
///
/// Nodes are stored row-major, last axis fastest.
#[derive(Clone, Debug)]
pub struct Grid {
    spec: DomainSpec,
    dims: Vec<usize>,
    strides: Vec<usize>,
    spacing: Vec<f64>,
    coords: Vec<Vec<f64>>,
    interior: Vec<bool>,
    weights: Vec<f64>,
    radius_sq: Vec<f64>,
}

pub fn build_grid(spec: &DomainSpec, nodes_per_axis: &[usize]) -> Result<Grid> {
    spec.validate()?;
    if nodes_per_axis.len() != spec.dimension {
        return Err(Error::InvalidParameter(format!(
            "{} node counts given for dimension {}",
            nodes_per_axis.len(),
            spec.dimension
        )));
    }
    for (axis, &n) in nodes_per_axis.iter().enumerate() {
        if n < MIN_NODES_PER_AXIS {
            return Err(Error::GridTooCoarse {
                axis,
                nodes: n,
                min: MIN_NODES_PER_AXIS,
            });
        }
    }
    let mut coords = Vec::with_capacity(spec.dimension);
    for (axis, &n) in nodes_per_axis.iter().enumerate() {
        let iv = spec.bounds[axis].ok_or(Error::UnboundedAxis { axis })?;
        let h = iv.length() / (n - 1) as f64;
        let mut c: Vec<f64> = (0..n).map(|i| iv.lower + i as f64 * h).collect();
        c[n - 1] = iv.upper;
        coords.push(c);
    }
    Grid::assemble(spec.clone(), coords)
}

impl Grid {
    /// Box grid over explicit per-axis node coordinates (assumed uniform).
    pub fn from_axis_coords(coords: Vec<Vec<f64>>) -> Result<Grid> {
        let mut bounds = Vec::with_capacity(coords.len());
        for (axis, c) in coords.iter().enumerate() {
            if c.len() < MIN_NODES_PER_AXIS {
                return Err(Error::GridTooCoarse {
                    axis,
                    nodes: c.len(),
                    min: MIN_NODES_PER_AXIS,
                });
            }
            bounds.push(Interval::new(c[0], c[c.len() - 1]));
        }
        let spec = DomainSpec::bounded_box(bounds)?;
        Grid::assemble(spec, coords)
    }

    fn assemble(spec: DomainSpec, coords: Vec<Vec<f64>>) -> Result<Grid> {
        let d = coords.len();
        let dims: Vec<usize> = coords.iter().map(Vec::len).collect();
        let spacing: Vec<f64> = coords
            .iter()
            .map(|c| (c[c.len() - 1] - c[0]) / (c.len() - 1) as f64)
            .collect();
        if spacing.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidDomain("grid spacing must be positive".into()));
        }
        let mut strides = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        let total: usize = dims.iter().product();

        let scale = spacing.iter().cloned().fold(0.0, f64::max);
        let mut interior = vec![false; total];
        let mut radius_sq = vec![0.0; total];
        let mut x = vec![0.0; d];
        for idx in 0..total {
            let mut on_face = false;
            let mut rem = idx;
            for a in 0..d {
                let i = rem / strides[a];
                rem %= strides[a];
                x[a] = coords[a][i];
                on_face |= i == 0 || i == dims[a] - 1;
            }
            radius_sq[idx] = x.iter().map(|v| v * v).sum();
            let excluded = spec
                .excluded
                .iter()
                .any(|s| s.contains_closed(&x, 1e-12 * scale));
            interior[idx] = !on_face && !excluded;
        }

        let weights = if spec.excluded.is_empty() {
            tensor_trapezoid(&dims, &strides, &spacing)
        } else {
            cell_weights(&spec, &dims, &strides, &spacing, &coords)
        };

        Ok(Grid {
            spec,
            dims,
            strides,
            spacing,
            coords,
            interior,
            weights,
            radius_sq,
        })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn axis_coords(&self, axis: usize) -> &[f64] {
        &self.coords[axis]
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        self.interior[idx]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `|x|²` at every node.
    pub fn radius_sq(&self) -> &[f64] {
        &self.radius_sq
    }

    pub fn interior_count(&self) -> usize {
        self.interior.iter().filter(|&&b| b).count()
    }

    /// Quadrature estimate of the domain volume.
    pub fn volume(&self) -> f64 {
        crate::sum::pairwise(0, self.len(), &|i| self.weights[i])
    }

    /// Diagonal of the enclosing box.
    pub fn diameter(&self) -> f64 {
        self.coords
            .iter()
            .map(|c| {
                let l = c[c.len() - 1] - c[0];
                l * l
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn axis_index(&self, idx: usize, axis: usize) -> usize {
        (idx / self.strides[axis]) % self.dims[axis]
    }

    pub fn node_coords(&self, idx: usize, out: &mut [f64]) {
        for (a, o) in out.iter_mut().enumerate() {
            *o = self.coords[a][self.axis_index(idx, a)];
        }
    }

    /// Neighbor `step` nodes away along `axis`, if it lies on the grid.
    pub fn neighbor(&self, idx: usize, axis: usize, step: isize) -> Option<usize> {
        let i = self.axis_index(idx, axis) as isize + step;
        if i < 0 || i >= self.dims[axis] as isize {
            return None;
        }
        Some((idx as isize + step * self.strides[axis] as isize) as usize)
    }

    /// Nodes with positive quadrature weight: the interior plus its Dirichlet frontier.
    pub fn in_closure(&self, idx: usize) -> bool {
        self.weights[idx] > 0.0
    }

    /// Zeroes every exterior node.
    pub fn apply_mask(&self, values: &mut [f64]) {
        for (v, &inside) in values.iter_mut().zip(&self.interior) {
            if !inside {
                *v = 0.0;
            }
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other)
            || (self.dims == other.dims
                && self.coords == other.coords
                && self.interior == other.interior)
    }

    /// Smallest and largest `|x|²` over interior nodes.
    pub fn interior_radius_sq_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, &r2) in self.radius_sq.iter().enumerate() {
            if self.interior[i] {
                lo = lo.min(r2);
                hi = hi.max(r2);
            }
        }
        (lo, hi)
    }
}

fn tensor_trapezoid(dims: &[usize], strides: &[usize], spacing: &[f64]) -> Vec<f64> {
    let total: usize = dims.iter().product();
    (0..total)
        .map(|idx| {
            let mut w = 1.0;
            for a in 0..dims.len() {
                let i = (idx / strides[a]) % dims[a];
                let end = i == 0 || i == dims[a] - 1;
                w *= if end { 0.5 * spacing[a] } else { spacing[a] };
            }
            w
        })
        .collect()
}

/// Trapezoidal weights summed cell by cell, skipping cells whose centre lies
/// inside an excluded sub-box. Reduces to the tensor rule when nothing is excluded.
fn cell_weights(
    spec: &DomainSpec,
    dims: &[usize],
    strides: &[usize],
    spacing: &[f64],
    coords: &[Vec<f64>],
) -> Vec<f64> {
    let d = dims.len();
    let total: usize = dims.iter().product();
    let mut weights = vec![0.0; total];
    let cell_dims: Vec<usize> = dims.iter().map(|n| n - 1).collect();
    let cells: usize = cell_dims.iter().product();
    let share = spacing.iter().product::<f64>() / (1usize << d) as f64;
    let mut corner = vec![0usize; d];
    let mut center = vec![0.0; d];
    for cell in 0..cells {
        let mut rem = cell;
        for a in (0..d).rev() {
            corner[a] = rem % cell_dims[a];
            rem /= cell_dims[a];
            center[a] = 0.5 * (coords[a][corner[a]] + coords[a][corner[a] + 1]);
        }
        if spec.excluded.iter().any(|s| s.contains_open(&center)) {
            continue;
        }
        let base: usize = corner.iter().zip(strides).map(|(c, s)| c * s).sum();
        for bits in 0..(1usize << d) {
            let mut idx = base;
            for (a, s) in strides.iter().enumerate() {
                if bits >> a & 1 == 1 {
                    idx += s;
                }
            }
            weights[idx] += share;
        }
    }
    weights
}
