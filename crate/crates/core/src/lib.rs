//! Fisher information, second moments and Cramér-Rao products of probability
//! densities on D-dimensional grids, with the eigensolvers and constrained
//! minimizers that locate their extremal densities.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`domain`] | domain specs, truncation of unbounded axes, grids with Dirichlet masks |
//! | [`functionals`] | normalization, `⟨x²⟩`, Fisher information, Cramér-Rao product, mixtures |
//! | [`oracles`] | closed-form half-plane oscillator and box states |
//! | [`eigensolver`] | matrix-free `−½∇² + V`, inverse iteration, virial check |
//! | [`minimizer`] | minimal Fisher information at fixed variance, projected gradient |
//! | [`io`] | CSV field dumps and flat JSON reports |
//!
//! ```
//! use std::sync::Arc;
//! use crlab_core::{build_grid, cramer_rao_product, normalize, BoxState, DomainSpec, Interval};
//!
//! let bounds = vec![Interval::new(0.0, 2.0), Interval::new(-1.0, 2.0)];
//! let grid = Arc::new(build_grid(&DomainSpec::bounded_box(bounds.clone())?, &[64, 96])?);
//! let state = BoxState::new(bounds, vec![1, 1])?;
//! let report = cramer_rao_product(&normalize(&state.sample(grid)?)?)?;
//! assert!((report.cr_product / state.cr_product() - 1.0).abs() < 1e-2);
//! # Ok::<(), crlab_core::Error>(())
//! ```

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod eigensolver;
pub mod error;
pub mod functionals;
pub mod io;
pub mod minimizer;
pub mod oracles;
pub mod sum;

pub use domain::{
    build_grid, tail_constant, truncate_unbounded, truncate_unbounded_with_margin,
    truncation_radius, DomainKind, DomainSpec, Grid, HalfSpace, Interval, SubBox,
};
pub use eigensolver::{
    assemble, excited_states, excited_states_with, ground_state, ground_state_with, virial_check,
    EigenSolution, HamiltonianOperator, Potential, SolverOptions,
};
pub use error::{Error, Result};
pub use functionals::{
    central_potential_bound, cramer_rao_product, fisher_information, fisher_information_density,
    mixture_expansion_slope, mixture_slope_limit, normalize, variance, FunctionalReport, GridField,
};
pub use io::{ingest_density, read_field_csv, write_field_csv};
pub use minimizer::{
    beta_zero_threshold, min_fisher_at_variance, min_fisher_at_variance_with, min_fisher_bounded,
    min_fisher_bounded_with, projected_gradient_min, projected_gradient_min_with,
    variance_of_beta_curve, variance_of_beta_curve_with, CurvePoint, CurveValues, GradientOptions,
    MinimizeResult, MinimizerOptions, TraceEntry,
};
pub use oracles::{hermite, BoxState, OracleReport, OscillatorHalfPlaneState};
