use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use anyhow::{bail, Context};
use crlab_core::io::{field_csv_string, flat_json, format_float, minimize_json, residual_jsonl};
use crlab_core::minimizer::default_step;
use crlab_core::{
    assemble, build_grid, central_potential_bound, cramer_rao_product, excited_states_with,
    ground_state_with, ingest_density, min_fisher_at_variance_with, min_fisher_bounded_with,
    normalize, projected_gradient_min_with, truncate_unbounded, variance_of_beta_curve_with,
    virial_check, BoxState, DomainKind, DomainSpec, GradientOptions, Grid, GridField, Interval,
    MinimizerOptions, OscillatorHalfPlaneState, Potential, SolverOptions,
};

use crate::config::{Algorithm, RunConfig};
use crate::output::Output;

/// Checks in `verify` that did not meet their tolerance.
#[derive(Debug)]
pub struct VerifyFailures(pub Vec<String>);

impl std::fmt::Display for VerifyFailures {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} verification checks out of tolerance: {}",
            self.0.len(),
            self.0.join(", ")
        )
    }
}

impl std::error::Error for VerifyFailures {}

fn solver_options(config: &RunConfig) -> SolverOptions {
    let p = &config.params;
    SolverOptions::new(p.tol, p.max_iter).with_seed(p.seed)
}

fn dump(out: &Output, name: &str, field: &GridField) -> anyhow::Result<()> {
    if out.dump_fields {
        out.write_str(name, &field_csv_string(field))?;
    }
    Ok(())
}

pub fn functionals(config: &RunConfig, out: &Output) -> anyhow::Result<()> {
    let input = config
        .params
        .input
        .as_ref()
        .context("functionals needs an input CSV (positional or params.input)")?;
    let field = ingest_density(input).with_context(|| format!("reading {}", input.display()))?;
    let report = cramer_rao_product(&field)?;
    out.write_str("functionals.json", &flat_json(&report.to_flat_map()))?;
    dump(out, "field.csv", &field)
}

fn is_positive_half_plane(spec: &DomainSpec) -> bool {
    matches!(spec.kind, DomainKind::HalfSpace)
        && spec.dimension == 2
        && spec
            .halfspace
            .is_some_and(|h| h.axis == 0 && h.positive && h.offset == 0.0)
}

pub fn oracle(config: &RunConfig, out: &Output) -> anyhow::Result<()> {
    let spec = config.domain_spec()?;
    let q = &config.params.quantum;
    let (mut map, sampled) = if is_positive_half_plane(&spec) {
        let beta = config
            .params
            .beta
            .context("the half-plane oracle needs params.beta (or --beta)")?;
        let (n1, n2) = match q.as_slice() {
            [] => (0, 0),
            [a, b] => (*a, *b),
            _ => bail!("half-plane quantum numbers are (n1, n2), got {q:?}"),
        };
        let state = OscillatorHalfPlaneState::new(n1, n2, beta)?;
        let report = state.report();
        let mut map = report.report.to_flat_map();
        map.insert("energy".into(), report.energy);
        map.insert("virial_residual".into(), state.virial_residual());
        map.insert("beta".into(), beta);
        let sampled = if out.dump_fields {
            Some(state.sample(config.grid()?)?)
        } else {
            None
        };
        (map, sampled)
    } else if spec.is_bounded() && matches!(spec.kind, DomainKind::Box) {
        let bounds: Vec<Interval> = spec.bounds.iter().map(|b| b.expect("bounded")).collect();
        let quantum = if q.is_empty() {
            vec![1; bounds.len()]
        } else {
            q.clone()
        };
        let state = BoxState::new(bounds, quantum)?;
        let report = state.report();
        let mut map = report.report.to_flat_map();
        map.insert("energy".into(), report.energy);
        let sampled = if out.dump_fields {
            Some(state.sample(config.grid()?)?)
        } else {
            None
        };
        (map, sampled)
    } else {
        bail!(
            "closed forms exist for a bounded box and for the half-plane x ≥ 0 in two dimensions"
        );
    };
    map.remove("normalization");
    out.write_str("oracle.json", &flat_json(&map))?;
    if let Some(field) = sampled {
        out.write_str("oracle_field.csv", &field_csv_string(&normalize(&field)?))?;
    }
    Ok(())
}

fn potential(config: &RunConfig) -> Potential {
    match config.params.beta {
        Some(beta) if beta != 0.0 => Potential::Harmonic { beta },
        _ => Potential::Zero,
    }
}

pub fn eigen(config: &RunConfig, out: &Output) -> anyhow::Result<()> {
    let grid = config.grid()?;
    let op = assemble(grid, potential(config))?;
    let opts = solver_options(config);
    let states = if config.params.states == 1 {
        vec![ground_state_with(&op, &opts)?]
    } else {
        excited_states_with(&op, config.params.states, &opts)?
    };
    let mut map = BTreeMap::new();
    let mut residuals = String::new();
    for (n, sol) in states.iter().enumerate() {
        let prefix = if states.len() == 1 {
            String::new()
        } else {
            format!("state{n}.")
        };
        let mut entries = sol.to_flat_map();
        let report = cramer_rao_product(&sol.field)?;
        entries.insert("fisher".into(), report.fisher);
        entries.insert("variance".into(), report.variance);
        entries.insert("cr_product".into(), report.cr_product);
        if let Potential::Harmonic { beta } = sol.potential {
            if beta > 0.0 {
                entries.insert("virial_residual".into(), virial_check(sol, beta)?);
            }
        }
        map.extend(
            entries
                .into_iter()
                .map(|(k, v)| (format!("{prefix}{k}"), v)),
        );
        for line in residual_jsonl(&sol.history).lines() {
            let _ = writeln!(residuals, "{{\"state\": {n}, {}", &line[1..]);
        }
        dump(out, &format!("eigen_state{n}.csv"), &sol.field)?;
    }
    out.write_str("eigen.json", &flat_json(&map))?;
    out.write_str("eigen_residuals.jsonl", &residuals)?;
    Ok(())
}

pub fn minimize(config: &RunConfig, out: &Output) -> anyhow::Result<()> {
    let grid = config.grid()?;
    let p = &config.params;
    let opts = MinimizerOptions {
        eigen: SolverOptions::new(p.tol.min(1e-10), p.max_iter.max(20_000)).with_seed(p.seed),
        ..Default::default()
    };
    let target = || {
        p.target_variance
            .context("minimize needs params.target_variance (or --target-variance)")
    };
    let result = match p.algorithm {
        Algorithm::Bounded => min_fisher_bounded_with(&grid, &opts)?,
        Algorithm::Bisection => min_fisher_at_variance_with(&grid, target()?, &opts)?,
        Algorithm::Gradient => {
            let init = normalize(&GridField::from_fn(grid.clone(), |_| 1.0)?)?;
            let step = p.step.unwrap_or_else(|| default_step(&grid));
            let gopts = GradientOptions {
                iters: p.iters,
                ..Default::default()
            };
            projected_gradient_min_with(&grid, target()?, &init, step, &gopts)?
        }
    };
    out.write_str("minimize.json", &minimize_json(&result))?;
    out.write_str("minimize_field.csv", &field_csv_string(&result.field))?;
    Ok(())
}

pub fn curve(config: &RunConfig, out: &Output) -> anyhow::Result<()> {
    let betas = &config.params.betas;
    if betas.is_empty() {
        bail!("curve needs a β list (params.betas or --betas)");
    }
    let grid = config.grid()?;
    let points = variance_of_beta_curve_with(&grid, betas, &solver_options(config))?;
    let mut csv = String::from("beta,variance,fisher,energy,status\n");
    for p in &points {
        match &p.outcome {
            Ok(v) => {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},ok",
                    format_float(p.beta),
                    format_float(v.variance),
                    format_float(v.fisher),
                    format_float(v.energy)
                );
            }
            Err(e) => {
                let _ = writeln!(
                    csv,
                    "{},,,,\"{}\"",
                    format_float(p.beta),
                    e.replace('"', "'")
                );
            }
        }
    }
    out.write_str("curve.csv", &csv)?;
    Ok(())
}

struct Table {
    entries: BTreeMap<String, f64>,
    failures: Vec<String>,
}

impl Table {
    fn closed(&mut self, key: &str, value: f64) {
        self.entries.insert(key.to_string(), value);
    }

    /// Records a numerical reproduction next to its closed-form reference.
    fn grid(&mut self, key: &str, value: f64, reference: f64, rel_tol: f64) {
        let err = (value - reference).abs() / reference.abs();
        self.entries.insert(format!("{key}.grid"), value);
        self.entries.insert(format!("{key}.grid.rel_error"), err);
        self.entries
            .insert(format!("{key}.grid.tolerance"), rel_tol);
        if !(err <= rel_tol) {
            self.failures.push(key.to_string());
        }
    }
}

/// Grid sizes for the two reproductions: `--resolution` if given, otherwise
/// 256² for the half-plane and 256×384 for the rectangle.
fn verify_grids(config: &RunConfig, explicit: bool) -> anyhow::Result<(Vec<usize>, Vec<usize>)> {
    if explicit {
        Ok((config.resolution(2)?, config.resolution(2)?))
    } else {
        Ok((vec![256, 256], vec![256, 384]))
    }
}

pub fn verify(config: &RunConfig, out: &Output, explicit_resolution: bool) -> anyhow::Result<()> {
    let mut t = Table {
        entries: BTreeMap::new(),
        failures: Vec::new(),
    };
    let opts = solver_options(config);
    let beta = config.params.beta.unwrap_or(1.0);

    let ground = OscillatorHalfPlaneState::ground(beta)?;
    t.closed("example1.beta", beta);
    t.closed("example1.energy.ground", ground.energy());
    t.closed("example1.variance.ground", ground.variance());
    t.closed("example1.fisher.ground", ground.fisher());
    t.closed("example1.product", ground.cr_product());
    t.closed("example1.product.ground", ground.cr_product());
    t.closed("example1.virial.ground", ground.virial_residual());
    for b in [0.25, 1.0, 4.0, 16.0] {
        t.closed(
            &format!("example1.product.beta_{b}"),
            OscillatorHalfPlaneState::ground(b)?.cr_product(),
        );
    }
    t.closed(
        "example1.product.excited_1_0",
        OscillatorHalfPlaneState::new(1, 0, beta)?.cr_product(),
    );

    let rect = vec![Interval::new(0.0, 2.0), Interval::new(-1.0, 2.0)];
    let well = BoxState::new(rect.clone(), vec![1, 1])?;
    t.closed("example2.energy", well.energy());
    t.closed("example2.fisher", well.fisher());
    t.closed("example2.variance", well.variance());
    t.closed("example2.product", well.cr_product());
    t.closed("example2.fisher.reference", 13.0 * PI * PI / 9.0);
    t.closed("example2.product.reference", 23.875);

    for d in 2..=6u32 {
        t.closed(
            &format!("central_bound.l0.d{d}"),
            central_potential_bound(0, 0, d)?,
        );
    }

    let (half_nodes, rect_nodes) = verify_grids(config, explicit_resolution)?;
    let half_spec = truncate_unbounded(
        &DomainSpec::halfspace(2, 0, true, 0.0)?,
        beta,
        config.domain.tail_tol,
    )?;
    let half: Arc<Grid> = Arc::new(build_grid(&half_spec, &half_nodes)?);
    let sampled = cramer_rao_product(&normalize(&ground.sample(half.clone())?)?)?;
    t.grid(
        "example1.product",
        sampled.cr_product,
        ground.cr_product(),
        5e-3,
    );
    let sol = ground_state_with(&assemble(half, Potential::Harmonic { beta })?, &opts)?;
    t.grid(
        "example1.energy.ground",
        sol.eigenvalue,
        ground.energy(),
        5e-3,
    );
    let virial = virial_check(&sol, beta)?;
    t.entries.insert("example1.virial.grid".into(), virial);
    t.entries
        .insert("example1.virial.grid.tolerance".into(), 1e-3);
    if !(virial < 1e-3) {
        t.failures.push("example1.virial".into());
    }

    let rect_grid = Arc::new(build_grid(&DomainSpec::bounded_box(rect)?, &rect_nodes)?);
    let sol = ground_state_with(&assemble(rect_grid, Potential::Zero)?, &opts)?;
    let report = cramer_rao_product(&sol.field)?;
    t.grid("example2.energy", sol.eigenvalue, well.energy(), 3e-3);
    t.grid("example2.fisher", report.fisher, 13.0 * PI * PI / 9.0, 5e-3);
    t.grid("example2.variance", report.variance, well.variance(), 1e-3);
    t.grid("example2.product", report.cr_product, 23.875, 5e-3);

    t.entries.insert("failures".into(), t.failures.len() as f64);
    out.write_str("verify.json", &flat_json(&t.entries))?;
    if t.failures.is_empty() {
        Ok(())
    } else {
        Err(VerifyFailures(t.failures).into())
    }
}
