//! Label-noise-robust learning with confidence-scored instance-dependent
//! noise (CSIDN).
//!
//! The crate covers the full pipeline:
//!
//! - [`data`]: a concentric-circles generator, class-conditional and
//!   directional instance-dependent corruption with exact confidence scores,
//!   a pseudo-labelling pipeline, and CSV persistence;
//! - [`nn`]: a small dense network with softmax head, the cross-entropy / MAE
//!   / Lq / forward-corrected losses, momentum SGD, and temperature scaling;
//! - [`estimate`]: instance-level transition-matrix estimation from
//!   confidence scores (per-sample diagonals, class means, anchor-point
//!   class-transition constants);
//! - [`train`]: the instance-level forward correction (ILFC) trainer and four
//!   baselines (fixed forward correction, MAE, Lq, co-teaching);
//! - [`harness`]: multi-seed noise sweeps with Student-t confidence
//!   intervals, confidence-perturbation sensitivity analysis, a small-loss
//!   selection probe, and decision-boundary grids.
//!
//! Every capability has a runnable example:
//!
//! ```text
//! cargo run --release -p csidn --example generate_circles
//! cargo run --release -p csidn --example corrupt_dataset
//! cargo run --release -p csidn --example train_ilfc
//! cargo run --release -p csidn --example compare_methods
//! cargo run --release -p csidn --example noise_sweep
//! cargo run --release -p csidn --example sensitivity_analysis
//! cargo run --release -p csidn --example small_loss_probe
//! cargo run --release -p csidn --example decision_boundary
//! cargo run --release -p csidn --example pseudo_labeling
//! ```
//!
//! The same functionality is scriptable through the `csidn` binary; see the
//! repository README and `csidn --help` for the config file reference.

pub mod config;
pub mod data;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod nn;
pub mod runio;
pub mod train;
pub mod util;

pub use error::{Error, Result};
