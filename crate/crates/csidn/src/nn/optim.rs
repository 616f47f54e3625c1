//! Momentum SGD and the batch backward pass.

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::nn::loss::{
    check_row_stochastic, loss, loss_grad_probs, softmax_backward, softmax_rows, LossKind,
};
use crate::nn::model::MLPModel;

/// Per-layer gradient (same shapes as the layer parameters).
#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Momentum SGD state. Velocity buffers mirror the model parameter shapes and
/// are allocated on the first step.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<LayerGrad>,
    pub epochs_completed: usize,
}

impl OptimizerState {
    /// A zero learning rate is allowed (it makes `backward_and_step` a pure
    /// loss evaluation), negative rates are not.
    pub fn new(learning_rate: f64, momentum: f64) -> Result<Self> {
        if !(learning_rate >= 0.0) {
            return Err(Error::Config(format!(
                "learning rate {learning_rate} must be non-negative"
            )));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::Config(format!(
                "momentum {momentum} must lie in [0, 1)"
            )));
        }
        Ok(Self {
            learning_rate,
            momentum,
            velocity: Vec::new(),
            epochs_completed: 0,
        })
    }

    fn ensure_velocity(&mut self, model: &MLPModel) -> Result<()> {
        if self.velocity.is_empty() {
            self.velocity = model
                .layers()
                .iter()
                .map(|l| LayerGrad {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect();
            return Ok(());
        }
        for (i, (v, l)) in self.velocity.iter().zip(model.layers()).enumerate() {
            if v.weights.raw_dim() != l.weights.raw_dim() || v.bias.len() != l.bias.len() {
                return Err(Error::Shape {
                    location: format!("layer {i} velocity"),
                    expected: l.weights.len(),
                    actual: v.weights.len(),
                });
            }
        }
        Ok(())
    }

    /// `v <- momentum * v + g; p <- p - lr * v`
    fn apply(&mut self, model: &mut MLPModel, grads: &[LayerGrad]) {
        let (lr, mom) = (self.learning_rate, self.momentum);
        for ((layer, v), g) in model
            .layers_mut()
            .iter_mut()
            .zip(self.velocity.iter_mut())
            .zip(grads)
        {
            v.weights.zip_mut_with(&g.weights, |vv, &gg| *vv = mom * *vv + gg);
            v.bias.zip_mut_with(&g.bias, |vv, &gg| *vv = mom * *vv + gg);
            layer.weights.scaled_add(-lr, &v.weights);
            layer.bias.scaled_add(-lr, &v.bias);
        }
    }
}

fn validate_batch(
    model: &MLPModel,
    batch: &Array2<f64>,
    labels: &[usize],
    kind: LossKind,
    transitions: Option<&[Array2<f64>]>,
) -> Result<()> {
    kind.validate()?;
    if batch.nrows() != labels.len() {
        return Err(Error::Shape {
            location: "labels".into(),
            expected: batch.nrows(),
            actual: labels.len(),
        });
    }
    let k = model.output_dim();
    if let Some(label) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::Domain(format!(
            "label {label} out of range for {k} classes"
        )));
    }
    match (kind.requires_transition(), transitions) {
        (true, None) => Err(Error::Config(
            "forward-corrected training requires per-instance transition matrices".into(),
        )),
        (false, Some(_)) => Err(Error::Config(format!(
            "transition matrices supplied but loss kind {kind:?} does not use them"
        ))),
        (true, Some(ts)) => {
            if ts.len() != labels.len() {
                return Err(Error::Shape {
                    location: "transition matrices".into(),
                    expected: labels.len(),
                    actual: ts.len(),
                });
            }
            for t in ts {
                check_row_stochastic(&t.view(), k)?;
            }
            Ok(())
        }
        (false, None) => Ok(()),
    }
}

/// Mean batch loss and its gradient with respect to every model parameter.
///
/// Pure: the model is not modified. Also used by the finite-difference
/// gradient checks in `nn::check`.
pub fn compute_gradients(
    model: &MLPModel,
    batch: &Array2<f64>,
    labels: &[usize],
    kind: LossKind,
    transitions: Option<&[Array2<f64>]>,
) -> Result<(Vec<LayerGrad>, f64)> {
    validate_batch(model, batch, labels, kind, transitions)?;
    let n = batch.nrows();
    let cache = model.forward_cache(batch)?;
    // The softmax head consumes the final post-activation.
    let probs = softmax_rows(cache.post.last().expect("non-empty"));

    let mut mean_loss = 0.0;
    let mut dlogits = Array2::zeros(probs.raw_dim());
    for i in 0..n {
        let row = probs.row(i);
        let t_view = transitions.map(|ts| ts[i].view());
        mean_loss += loss(kind, &row, labels[i], t_view.as_ref())?;
        let g = loss_grad_probs(kind, &row, labels[i], t_view.as_ref());
        let dz = softmax_backward(&row, &g.view());
        dlogits.row_mut(i).assign(&dz);
    }
    mean_loss /= n as f64;
    dlogits.mapv_inplace(|v| v / n as f64);

    // Backpropagate through the dense stack.
    let layers = model.layers();
    let mut grads: Vec<LayerGrad> = Vec::with_capacity(layers.len());
    let mut delta = dlogits;
    for idx in (0..layers.len()).rev() {
        let layer = &layers[idx];
        if layer.activation != crate::nn::model::Activation::Identity {
            let pre = &cache.pre[idx];
            delta.zip_mut_with(pre, |d, &z| *d *= layer.activation.derivative(z));
        }
        let input = &cache.post[idx];
        let dw = input.t().dot(&delta);
        let db = delta.sum_axis(Axis(0));
        if dw.iter().any(|v| !v.is_finite()) || db.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("gradient of layer {idx}")));
        }
        if idx > 0 {
            delta = delta.dot(&layer.weights.t());
        }
        grads.push(LayerGrad {
            weights: dw,
            bias: db,
        });
    }
    grads.reverse();
    Ok((grads, mean_loss))
}

/// One momentum-SGD step on the mean batch loss; returns the pre-update loss.
///
/// Per-instance transition matrices must be supplied exactly when `kind` is
/// forward-corrected (one `k x k` matrix per batch row).
pub fn backward_and_step(
    model: &mut MLPModel,
    batch: &Array2<f64>,
    labels: &[usize],
    kind: LossKind,
    transitions: Option<&[Array2<f64>]>,
    opt: &mut OptimizerState,
) -> Result<f64> {
    let (grads, mean_loss) = compute_gradients(model, batch, labels, kind, transitions)?;
    opt.ensure_velocity(model)?;
    opt.apply(model, &grads);
    Ok(mean_loss)
}
