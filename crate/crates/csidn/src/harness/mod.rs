//! Experiment orchestration: sweeps, sensitivity analysis, the small-loss
//! probe, and decision-boundary grids.

pub mod grid;
pub mod probe;
pub mod sensitivity;
pub mod stats;
pub mod sweep;

pub use grid::{boundary_grid, write_grid, GridRow};
pub use probe::{small_loss_probe, ProbeReport, ProbeSummary};
pub use sensitivity::{
    perturb_confidences, sensitivity_sweep, SensitivityPlan, SensitivityReport,
};
pub use stats::t_interval;
pub use sweep::{
    aggregate_cells, flip_param_for_rate, run_sweep, write_curves, CurveRow, SweepPlan,
    SweepReport,
};
