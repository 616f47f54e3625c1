//! Minimal dense neural network: model, losses, momentum SGD, temperature
//! calibration, and finite-difference gradient checks.

pub mod calibrate;
pub mod check;
pub mod loss;
pub mod model;
pub mod optim;

pub use calibrate::{calibrate, expected_calibration_error, temperature_scale, Calibration};
pub use loss::{corrected_prediction, loss, softmax_rows, LossKind};
pub use model::{Activation, DenseLayer, MLPModel};
pub use optim::{backward_and_step, compute_gradients, LayerGrad, OptimizerState};
