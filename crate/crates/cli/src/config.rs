//! Run configuration: a TOML file whose values command-line flags override.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use crlab_core::{build_grid, truncate_unbounded_with_margin, DomainSpec, Grid, Interval, SubBox};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub grid: GridConfig,
    pub params: Params,
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKindConfig {
    Box,
    Halfspace,
    Full,
    MaskedBox,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcludedBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub kind: DomainKindConfig,
    /// Per-axis bounds for `box` and `masked_box`; `-inf`/`inf` mark open axes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    /// Dimension for `halfspace` and `full`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    pub axis: usize,
    pub positive: bool,
    pub offset: f64,
    pub excluded: Vec<ExcludedBox>,
    pub tail_tol: f64,
    pub truncation_margin: f64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            kind: DomainKindConfig::Box,
            lower: Some(vec![0.0, -1.0]),
            upper: Some(vec![2.0, 2.0]),
            dimension: None,
            axis: 0,
            positive: true,
            offset: 0.0,
            excluded: Vec::new(),
            tail_tol: 1e-10,
            truncation_margin: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Nodes per axis; a single entry applies to every axis.
    pub resolution: Vec<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            resolution: vec![64, 96],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Bisection,
    Gradient,
    Bounded,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_variance: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Quantum numbers for `oracle`; empty selects the ground state.
    pub quantum: Vec<u32>,
    pub states: usize,
    pub betas: Vec<f64>,
    pub algorithm: Algorithm,
    /// Projected-gradient iteration cap.
    pub iters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Density CSV for `functionals`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            beta: None,
            target_variance: None,
            tol: 1e-8,
            max_iter: 5000,
            seed: 42,
            quantum: Vec::new(),
            states: 1,
            betas: Vec::new(),
            algorithm: Algorithm::Bisection,
            iters: 200_000,
            step: None,
            input: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub dump_fields: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("crlab-out"),
            dump_fields: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let p = &self.params;
        if !(p.tol > 0.0) {
            bail!("params.tol must be positive, got {}", p.tol);
        }
        if p.max_iter == 0 || p.iters == 0 {
            bail!("iteration limits must be positive");
        }
        if p.states == 0 {
            bail!("params.states must be at least 1");
        }
        if let Some(s) = p.step {
            if !(s > 0.0) {
                bail!("params.step must be positive, got {s}");
            }
        }
        if let Some(t) = p.target_variance {
            if !(t > 0.0) {
                bail!("params.target_variance must be positive, got {t}");
            }
        }
        if !(self.domain.tail_tol > 0.0) || !(self.domain.truncation_margin > 0.0) {
            bail!("domain.tail_tol and domain.truncation_margin must be positive");
        }
        if self.grid.resolution.is_empty() {
            bail!("grid.resolution must list at least one node count");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn domain_spec(&self) -> anyhow::Result<DomainSpec> {
        let d = &self.domain;
        let bounds = || -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
            let (Some(lo), Some(hi)) = (&d.lower, &d.upper) else {
                bail!(
                    "domain.lower and domain.upper are required for kind {:?}",
                    d.kind
                );
            };
            if lo.len() != hi.len() {
                bail!(
                    "domain.lower has {} entries but domain.upper has {}",
                    lo.len(),
                    hi.len()
                );
            }
            Ok((lo.clone(), hi.clone()))
        };
        let spec = match d.kind {
            DomainKindConfig::Box => {
                let (lo, hi) = bounds()?;
                let axes = lo
                    .iter()
                    .zip(&hi)
                    .enumerate()
                    .map(|(a, (&l, &u))| match (l.is_finite(), u.is_finite()) {
                        (true, true) => Ok(Some(Interval::new(l, u))),
                        (false, false) if l < 0.0 && u > 0.0 => Ok(None),
                        _ => bail!("axis {a}: half-infinite intervals need kind = \"halfspace\""),
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?;
                if axes.iter().all(Option::is_some) {
                    DomainSpec::bounded_box(axes.into_iter().flatten().collect())?
                } else {
                    DomainSpec::partial_box(axes)?
                }
            }
            DomainKindConfig::Halfspace => {
                let dim = d
                    .dimension
                    .context("domain.dimension is required for a half-space")?;
                DomainSpec::halfspace(dim, d.axis, d.positive, d.offset)?
            }
            DomainKindConfig::Full => DomainSpec::full_space(
                d.dimension
                    .context("domain.dimension is required for full space")?,
            )?,
            DomainKindConfig::MaskedBox => {
                let (lo, hi) = bounds()?;
                let axes = lo
                    .iter()
                    .zip(&hi)
                    .map(|(&l, &u)| Interval::new(l, u))
                    .collect();
                let excluded = d
                    .excluded
                    .iter()
                    .map(|b| SubBox::new(b.lower.clone(), b.upper.clone()))
                    .collect();
                DomainSpec::masked_box(axes, excluded)?
            }
        };
        Ok(spec)
    }

    /// Domain with open axes cut at the Gaussian tail radius of `β`.
    pub fn resolved_spec(&self) -> anyhow::Result<DomainSpec> {
        let spec = self.domain_spec()?;
        if spec.is_bounded() {
            return Ok(spec);
        }
        let beta = self
            .params
            .beta
            .context("an unbounded domain needs params.beta (or --beta) to truncate")?;
        Ok(truncate_unbounded_with_margin(
            &spec,
            beta,
            self.domain.tail_tol,
            self.domain.truncation_margin,
        )?)
    }

    pub fn resolution(&self, dimension: usize) -> anyhow::Result<Vec<usize>> {
        let r = &self.grid.resolution;
        match r.len() {
            1 => Ok(vec![r[0]; dimension]),
            n if n == dimension => Ok(r.clone()),
            n => bail!("grid.resolution has {n} entries for a {dimension}-dimensional domain"),
        }
    }

    pub fn grid(&self) -> anyhow::Result<Arc<Grid>> {
        let spec = self.resolved_spec()?;
        let nodes = self.resolution(spec.dimension)?;
        Ok(Arc::new(build_grid(&spec, &nodes)?))
    }
}
