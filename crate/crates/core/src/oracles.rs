//! Closed-form states and functionals.
//!
//! * [`OscillatorHalfPlaneState`]: eigenstates of `−½∇² + (β/8)(x² + y²)`
//!   on the half plane `x > 0` with `u(0, y) = 0`. Only odd Hermite
//!   functions survive in `x`, so the `x` degree is `2n₁ + 1`.
//! * [`BoxState`]: infinite-well eigenstates on an axis-aligned box in any
//!   dimension, products of sines.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::domain::{Grid, Interval};
use crate::error::{Error, Result};
use crate::functionals::{FunctionalReport, GridField};

pub const MAX_HERMITE_DEGREE: u32 = 60;

/// Physicists' Hermite polynomial `H_n(x)` by the three-term recurrence.
pub fn hermite(n: u32, x: f64) -> Result<f64> {
    if n > MAX_HERMITE_DEGREE {
        return Err(Error::HermiteDegree(n));
    }
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    if n == 0 {
        return Ok(prev);
    }
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Closed-form report together with the state's energy.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub energy: f64,
    pub report: FunctionalReport,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatorHalfPlaneState {
    pub n1: u32,
    pub n2: u32,
    pub beta: f64,
}

impl OscillatorHalfPlaneState {
    pub fn new(n1: u32, n2: u32, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::NonPositiveBeta(beta));
        }
        if 2 * n1 + 1 > MAX_HERMITE_DEGREE {
            return Err(Error::HermiteDegree(2 * n1 + 1));
        }
        if n2 > MAX_HERMITE_DEGREE {
            return Err(Error::HermiteDegree(n2));
        }
        Ok(Self { n1, n2, beta })
    }

    pub fn ground(beta: f64) -> Result<Self> {
        Self::new(0, 0, beta)
    }

    fn level(&self) -> f64 {
        (2 * self.n1 + self.n2 + 2) as f64
    }

    pub fn energy(&self) -> f64 {
        0.5 * self.beta.sqrt() * self.level()
    }

    pub fn variance(&self) -> f64 {
        2.0 / self.beta.sqrt() * self.level()
    }

    pub fn fisher(&self) -> f64 {
        2.0 * self.beta.sqrt() * self.level()
    }

    /// `4(2n₁ + n₂ + 2)²`, independent of β.
    pub fn cr_product(&self) -> f64 {
        4.0 * self.level() * self.level()
    }

    /// Normalized amplitude `u_{n₁,n₂}(x, y)`; zero for `x ≤ 0`.
    pub fn amplitude(&self, x: f64, y: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let (n1, n2) = (self.n1, self.n2);
        let sqrt_beta = self.beta.sqrt();
        let ln_norm_sq = -((2 * n1 + n2 + 1) as f64) * std::f64::consts::LN_2 + sqrt_beta.ln()
            - PI.ln()
            - ln_factorial(2 * n1 + 1)
            - ln_factorial(n2);
        let s = self.beta.powf(0.25) / std::f64::consts::SQRT_2;
        // Degrees were bounded in `new`.
        let hx = hermite(2 * n1 + 1, s * x).unwrap_or(f64::NAN);
        let hy = hermite(n2, s * y).unwrap_or(f64::NAN);
        (0.5 * ln_norm_sq - 0.25 * sqrt_beta * (x * x + y * y)).exp() * hx * hy
    }

    pub fn report(&self) -> OracleReport {
        OracleReport {
            energy: self.energy(),
            report: FunctionalReport::from_parts(1.0, self.variance(), self.fisher(), Vec::new()),
        }
    }

    /// `E² − (β/16)·F·⟨x²⟩` from the closed forms.
    pub fn virial_residual(&self) -> f64 {
        let e = self.energy();
        e * e - self.beta / 16.0 * self.fisher() * self.variance()
    }

    /// Samples the amplitude on the interior of a 2D grid.
    pub fn sample(&self, grid: Arc<Grid>) -> Result<GridField> {
        if grid.dimension() != 2 {
            return Err(Error::InvalidParameter(
                "half-plane states live in two dimensions".into(),
            ));
        }
        GridField::from_fn(grid, |p| self.amplitude(p[0], p[1]))
    }
}

/// Ground-state density `(β/π) x² exp(−√β(x² + y²)/2)`.
pub fn halfplane_ground_density(beta: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    beta / PI * x * x * (-0.5 * beta.sqrt() * (x * x + y * y)).exp()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxState {
    pub bounds: Vec<Interval>,
    pub quantum: Vec<u32>,
}

impl BoxState {
    pub fn new(bounds: Vec<Interval>, quantum: Vec<u32>) -> Result<Self> {
        if bounds.is_empty() || bounds.len() != quantum.len() {
            return Err(Error::InvalidParameter(format!(
                "{} axes but {} quantum numbers",
                bounds.len(),
                quantum.len()
            )));
        }
        if let Some(iv) = bounds.iter().find(|iv| !(iv.lower < iv.upper)) {
            return Err(Error::InvalidDomain(format!(
                "empty axis [{}, {}]",
                iv.lower, iv.upper
            )));
        }
        if quantum.contains(&0) {
            return Err(Error::InvalidParameter(
                "box quantum numbers start at 1".into(),
            ));
        }
        Ok(Self { bounds, quantum })
    }

    fn axes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.bounds
            .iter()
            .zip(&self.quantum)
            .map(|(iv, &n)| (iv.lower, iv.length(), n as f64))
    }

    pub fn energy(&self) -> f64 {
        self.axes()
            .map(|(_, l, n)| n * n * PI * PI / (2.0 * l * l))
            .sum()
    }

    /// `⟨V⟩ = 0` inside the well, so `F = 8E`.
    pub fn fisher(&self) -> f64 {
        8.0 * self.energy()
    }

    /// `Σᵢ (aᵢ² + aᵢLᵢ + Lᵢ²/3) − Lᵢ²/(2nᵢ²π²)`.
    pub fn variance(&self) -> f64 {
        self.axes()
            .map(|(a, l, n)| a * a + a * l + l * l / 3.0 - l * l / (2.0 * n * n * PI * PI))
            .sum()
    }

    pub fn cr_product(&self) -> f64 {
        self.fisher() * self.variance()
    }

    /// `∏ √(2/Lᵢ) sin(nᵢπ(xᵢ − aᵢ)/Lᵢ)`, zero on and outside the walls.
    pub fn amplitude(&self, point: &[f64]) -> f64 {
        let mut u = 1.0;
        for ((a, l, n), &x) in self.axes().zip(point) {
            let t = (x - a) / l;
            if !(t > 0.0 && t < 1.0) {
                return 0.0;
            }
            u *= (2.0 / l).sqrt() * (n * PI * t).sin();
        }
        u
    }

    pub fn report(&self) -> OracleReport {
        OracleReport {
            energy: self.energy(),
            report: FunctionalReport::from_parts(1.0, self.variance(), self.fisher(), Vec::new()),
        }
    }

    pub fn sample(&self, grid: Arc<Grid>) -> Result<GridField> {
        if grid.dimension() != self.bounds.len() {
            return Err(Error::GridMismatch);
        }
        GridField::from_fn(grid, |p| self.amplitude(p))
    }
}
