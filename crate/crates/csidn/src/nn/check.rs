//! Finite-difference gradient verification.
//!
//! Testing utility kept in the library so both unit tests and the acceptance
//! suite can drive it against every loss kind.

use ndarray::Array2;

use crate::error::Result;
use crate::nn::loss::LossKind;
use crate::nn::model::MLPModel;
use crate::nn::optim::compute_gradients;

/// Location of one scalar parameter inside a model.
#[derive(Debug, Clone, Copy)]
pub struct ParamRef {
    pub layer: usize,
    /// Flat index into the layer's weights, or the bias when `is_bias`.
    pub index: usize,
    pub is_bias: bool,
}

/// All parameter locations of `model`, layer by layer (weights then bias).
pub fn all_params(model: &MLPModel) -> Vec<ParamRef> {
    let mut out = Vec::new();
    for (layer, l) in model.layers().iter().enumerate() {
        for index in 0..l.weights.len() {
            out.push(ParamRef {
                layer,
                index,
                is_bias: false,
            });
        }
        for index in 0..l.bias.len() {
            out.push(ParamRef {
                layer,
                index,
                is_bias: true,
            });
        }
    }
    out
}

fn nudge(model: &MLPModel, p: ParamRef, eps: f64) -> MLPModel {
    let mut m = model.clone();
    let layer = &mut m.layers_mut()[p.layer];
    if p.is_bias {
        layer.bias[p.index] += eps;
    } else {
        let w = layer.weights.as_slice_mut().expect("standard layout");
        w[p.index] += eps;
    }
    m
}

/// Central-difference derivative of the mean batch loss at one parameter.
pub fn numeric_gradient(
    model: &MLPModel,
    batch: &Array2<f64>,
    labels: &[usize],
    kind: LossKind,
    transitions: Option<&[Array2<f64>]>,
    p: ParamRef,
    eps: f64,
) -> Result<f64> {
    let plus = compute_gradients(&nudge(model, p, eps), batch, labels, kind, transitions)?.1;
    let minus = compute_gradients(&nudge(model, p, -eps), batch, labels, kind, transitions)?.1;
    Ok((plus - minus) / (2.0 * eps))
}

/// Analytic derivative at the same parameter, via `compute_gradients`.
pub fn analytic_gradient(
    model: &MLPModel,
    batch: &Array2<f64>,
    labels: &[usize],
    kind: LossKind,
    transitions: Option<&[Array2<f64>]>,
    p: ParamRef,
) -> Result<f64> {
    let (grads, _) = compute_gradients(model, batch, labels, kind, transitions)?;
    let g = &grads[p.layer];
    Ok(if p.is_bias {
        g.bias[p.index]
    } else {
        g.weights.as_slice().expect("standard layout")[p.index]
    })
}

/// Relative error with an absolute floor for near-zero gradients.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}
