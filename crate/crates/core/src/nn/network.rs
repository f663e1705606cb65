use serde::{Deserialize, Serialize};

use super::layer::{Layer, LayerKind, LayerSpec};
use super::LossKind;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::Tensor2D;

/// A sequential stack of dense / conv1d layers.
///
/// `forward` caches intermediate activations for a subsequent `backward`;
/// `predict` is the cache-free evaluation. Neither touches the weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<Layer>,
    #[serde(skip)]
    grads_ready: bool,
    #[serde(skip)]
    output: Option<Tensor2D>,
}

impl Network {
    pub fn new(specs: &[LayerSpec], rng: &mut SplitMix64) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Config {
                layer: 0,
                message: "network needs at least one layer".into(),
            });
        }
        for (i, pair) in specs.windows(2).enumerate() {
            let (prev, next) = (pair[0], pair[1]);
            match next.kind {
                LayerKind::Dense { inputs, .. } if inputs != prev.output_width() => {
                    return Err(Error::Config {
                        layer: i + 1,
                        message: format!(
                            "dense layer expects {inputs} inputs, previous layer emits {}",
                            prev.output_width()
                        ),
                    });
                }
                LayerKind::Conv1d { .. } => {
                    return Err(Error::Config {
                        layer: i + 1,
                        message: "conv1d is only supported as the first layer".into(),
                    });
                }
                _ => {}
            }
        }
        let layers = specs
            .iter()
            .enumerate()
            .map(|(i, &spec)| Layer::new(spec, i, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            layers,
            grads_ready: false,
            output: None,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| *l.spec()).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights().len() + l.bias().len())
            .sum()
    }

    /// Reallocates gradient slots after deserialization.
    pub(crate) fn restore_slots(&mut self) {
        self.layers.iter_mut().for_each(Layer::restore_slots);
        self.grads_ready = false;
        self.output = None;
    }

    pub fn forward(&mut self, input: &Tensor2D) -> Result<Tensor2D> {
        let mut x = input.clone();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            layer.check_input(i, &x)?;
            x = layer.forward_cached(&x);
            if !x.all_finite() {
                return Err(Error::Numeric {
                    context: format!("forward output of layer {i}"),
                });
            }
        }
        self.output = Some(x.clone());
        Ok(x)
    }

    pub fn predict(&self, input: &Tensor2D) -> Result<Tensor2D> {
        let mut x = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.check_input(i, &x)?;
            x = layer.eval(&x);
            if !x.all_finite() {
                return Err(Error::Numeric {
                    context: format!("forward output of layer {i}"),
                });
            }
        }
        Ok(x)
    }

    /// Loss on the cached forward output against `target`; fills gradient
    /// slots and returns the loss value.
    pub fn backward(&mut self, loss: LossKind, target: &Tensor2D) -> Result<f64> {
        let predicted = self
            .output
            .as_ref()
            .ok_or_else(|| Error::Usage("backward called before forward".into()))?;
        let (value, grad) = loss.evaluate(predicted, target)?;
        self.backward_from(grad)?;
        Ok(value)
    }

    /// Back-propagates an externally computed `dL/d(output)`, accumulating
    /// parameter gradients. Returns `dL/d(input)`.
    pub fn backward_from(&mut self, grad_output: Tensor2D) -> Result<Tensor2D> {
        let g = self.propagate(grad_output, true)?;
        self.grads_ready = true;
        Ok(g)
    }

    /// `dL/d(input)` through the cached forward pass with the parameters
    /// treated as constants: gradient slots are left untouched.
    pub fn input_gradient(&mut self, grad_output: Tensor2D) -> Result<Tensor2D> {
        self.propagate(grad_output, false)
    }

    fn propagate(&mut self, grad_output: Tensor2D, accumulate: bool) -> Result<Tensor2D> {
        let mut g = grad_output;
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            g = layer.backward(i, g, accumulate)?;
        }
        Ok(g)
    }

    pub fn zero_grad(&mut self) {
        self.layers.iter_mut().for_each(Layer::zero_grad);
        self.grads_ready = false;
    }

    pub fn grads_ready(&self) -> bool {
        self.grads_ready
    }

    pub(crate) fn mark_stepped(&mut self) {
        self.zero_grad();
    }

    /// Every (parameter buffer, gradient buffer) pair in layer order.
    pub(crate) fn slots(&mut self) -> impl Iterator<Item = (&mut Vec<f64>, &mut Vec<f64>)> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.params_and_grads().into_iter())
    }

    /// Flattened copy of all gradients, in `slots` order.
    pub fn gradients(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.grad_weights().iter().chain(l.grad_bias()).copied())
            .collect()
    }

    /// Flattened copy of all parameters, in `slots` order.
    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights().iter().chain(l.bias()).copied())
            .collect()
    }

    /// Mutable access to the `index`-th flattened parameter.
    pub fn parameter_mut(&mut self, mut index: usize) -> Option<&mut f64> {
        for layer in &mut self.layers {
            let nw = layer.weights().len();
            if index < nw {
                return layer.weights_mut().get_mut(index);
            }
            index -= nw;
            let nb = layer.bias().len();
            if index < nb {
                return layer.bias_mut().get_mut(index);
            }
            index -= nb;
        }
        None
    }
}
