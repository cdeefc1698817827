//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use crlab_core::{build_grid, normalize, DomainSpec, Grid, GridField, Interval};

/// The rectangle `[0,2]×[−1,2]` with `n × 3n/2` nodes.
pub fn rectangle(n: usize) -> Arc<Grid> {
    let spec = DomainSpec::bounded_box(vec![Interval::new(0.0, 2.0), Interval::new(-1.0, 2.0)])
        .expect("valid box");
    Arc::new(build_grid(&spec, &[n, 3 * n / 2]).expect("valid grid"))
}

/// Smooth positive trial field vanishing on the walls.
pub fn bump(grid: &Arc<Grid>) -> GridField {
    let f = GridField::from_fn(grid.clone(), |x| {
        x[0] * (2.0 - x[0]) * (x[1] + 1.0) * (2.0 - x[1])
    })
    .expect("finite");
    normalize(&f).expect("nonzero")
}
