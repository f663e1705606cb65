use serde::{Deserialize, Serialize};

use super::Activation;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::{gemm, gemm_raw, Tensor2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerKind {
    /// Row-wise affine map: a `batch x inputs` input becomes `batch x outputs`.
    Dense { inputs: usize, outputs: usize },
    /// 1-D convolution along the row axis of a single `length x in_channels`
    /// input. Each kernel spans all input channels and
    /// `length - out_length + 1` consecutive rows (stride 1). The
    /// `out_length x out_channels` result is emitted flattened as one row.
    Conv1d {
        length: usize,
        in_channels: usize,
        out_channels: usize,
        out_length: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    #[serde(flatten)]
    pub kind: LayerKind,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn dense(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            kind: LayerKind::Dense { inputs, outputs },
            activation,
        }
    }

    pub fn conv1d(
        length: usize,
        in_channels: usize,
        out_channels: usize,
        out_length: usize,
        activation: Activation,
    ) -> Self {
        Self {
            kind: LayerKind::Conv1d {
                length,
                in_channels,
                out_channels,
                out_length,
            },
            activation,
        }
    }

    /// Width of one flattened output row.
    pub fn output_width(&self) -> usize {
        match self.kind {
            LayerKind::Dense { outputs, .. } => outputs,
            LayerKind::Conv1d {
                out_channels,
                out_length,
                ..
            } => out_channels * out_length,
        }
    }

    fn param_counts(&self) -> (usize, usize) {
        match self.kind {
            LayerKind::Dense { inputs, outputs } => (inputs * outputs, outputs),
            LayerKind::Conv1d {
                length,
                in_channels,
                out_channels,
                out_length,
            } => (
                (length - out_length + 1) * in_channels * out_channels,
                out_channels,
            ),
        }
    }

    fn fans(&self) -> (usize, usize) {
        match self.kind {
            LayerKind::Dense { inputs, outputs } => (inputs, outputs),
            LayerKind::Conv1d {
                length,
                in_channels,
                out_channels,
                out_length,
            } => {
                let k = length - out_length + 1;
                (k * in_channels, k * out_channels)
            }
        }
    }

    pub(crate) fn validate(&self, index: usize) -> Result<()> {
        let bad = |message: String| Err(Error::Config { layer: index, message });
        match self.kind {
            LayerKind::Dense { inputs, outputs } if inputs == 0 || outputs == 0 => {
                bad(format!("dense layer needs non-zero sizes, got {inputs}->{outputs}"))
            }
            LayerKind::Conv1d {
                length,
                in_channels,
                out_channels,
                out_length,
            } if out_length == 0
                || out_length > length
                || in_channels == 0
                || out_channels == 0 =>
            {
                bad(format!(
                    "conv1d needs 0 < out_length <= length and non-zero channels, got \
                     length {length}, out_length {out_length}, channels {in_channels}->{out_channels}"
                ))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
struct Cache {
    input: Tensor2D,
    pre: Tensor2D,
    out: Tensor2D,
}

/// One layer's parameters, gradient slots and forward cache.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layer {
    spec: LayerSpec,
    weights: Vec<f64>,
    bias: Vec<f64>,
    #[serde(skip)]
    grad_weights: Vec<f64>,
    #[serde(skip)]
    grad_bias: Vec<f64>,
    #[serde(skip)]
    cache: Option<Cache>,
}

impl Layer {
    /// Glorot-uniform weights, zero biases.
    pub fn new(spec: LayerSpec, index: usize, rng: &mut SplitMix64) -> Result<Self> {
        spec.validate(index)?;
        let (nw, nb) = spec.param_counts();
        let (fan_in, fan_out) = spec.fans();
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let weights = (0..nw).map(|_| rng.uniform(-limit, limit)).collect();
        Ok(Self {
            spec,
            weights,
            bias: vec![0.0; nb],
            grad_weights: vec![0.0; nw],
            grad_bias: vec![0.0; nb],
            cache: None,
        })
    }

    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    /// Weight layout: dense is `inputs x outputs` row-major; conv1d is
    /// `kernel_len` consecutive `in_channels x out_channels` blocks.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn grad_weights(&self) -> &[f64] {
        &self.grad_weights
    }

    pub fn grad_bias(&self) -> &[f64] {
        &self.grad_bias
    }

    pub(crate) fn params_and_grads(&mut self) -> [(&mut Vec<f64>, &mut Vec<f64>); 2] {
        [
            (&mut self.weights, &mut self.grad_weights),
            (&mut self.bias, &mut self.grad_bias),
        ]
    }

    pub(crate) fn restore_slots(&mut self) {
        self.grad_weights = vec![0.0; self.weights.len()];
        self.grad_bias = vec![0.0; self.bias.len()];
    }

    pub(crate) fn zero_grad(&mut self) {
        self.grad_weights.iter_mut().for_each(|g| *g = 0.0);
        self.grad_bias.iter_mut().for_each(|g| *g = 0.0);
    }

    pub(crate) fn check_input(&self, index: usize, input: &Tensor2D) -> Result<()> {
        let ok = match self.spec.kind {
            LayerKind::Dense { inputs, .. } => input.cols() == inputs,
            LayerKind::Conv1d {
                length,
                in_channels,
                ..
            } => input.shape() == (length, in_channels),
        };
        if ok {
            Ok(())
        } else {
            let expected = match self.spec.kind {
                LayerKind::Dense { inputs, .. } => format!("n x {inputs}"),
                LayerKind::Conv1d {
                    length,
                    in_channels,
                    ..
                } => format!("{length} x {in_channels}"),
            };
            Err(Error::Config {
                layer: index,
                message: format!(
                    "input shape {}x{} does not match expected {expected}",
                    input.rows(),
                    input.cols()
                ),
            })
        }
    }

    fn pre_activation(&self, input: &Tensor2D) -> Tensor2D {
        match self.spec.kind {
            LayerKind::Dense { inputs, outputs } => {
                let mut pre = Tensor2D::zeros(input.rows(), outputs);
                for r in 0..pre.rows() {
                    pre.row_mut(r).copy_from_slice(&self.bias);
                }
                gemm_raw(
                    input.rows(),
                    inputs,
                    outputs,
                    1.0,
                    input.values(),
                    inputs,
                    false,
                    &self.weights,
                    outputs,
                    false,
                    1.0,
                    pre.values_mut(),
                );
                pre
            }
            LayerKind::Conv1d {
                length,
                in_channels,
                out_channels,
                out_length,
            } => {
                let mut pre = Tensor2D::zeros(out_length, out_channels);
                for r in 0..out_length {
                    pre.row_mut(r).copy_from_slice(&self.bias);
                }
                let block = in_channels * out_channels;
                for t in 0..(length - out_length + 1) {
                    gemm_raw(
                        out_length,
                        in_channels,
                        out_channels,
                        1.0,
                        &input.values()[t * in_channels..],
                        in_channels,
                        false,
                        &self.weights[t * block..(t + 1) * block],
                        out_channels,
                        false,
                        1.0,
                        pre.values_mut(),
                    );
                }
                pre
            }
        }
    }

    fn to_output_shape(&self, activated: Tensor2D) -> Tensor2D {
        match self.spec.kind {
            LayerKind::Dense { .. } => activated,
            LayerKind::Conv1d { .. } => {
                let n = activated.rows() * activated.cols();
                activated.reshape(1, n).expect("same element count")
            }
        }
    }

    /// Forward without touching the cache.
    pub(crate) fn eval(&self, input: &Tensor2D) -> Tensor2D {
        let pre = self.pre_activation(input);
        self.to_output_shape(self.spec.activation.apply(&pre))
    }

    pub(crate) fn forward_cached(&mut self, input: &Tensor2D) -> Tensor2D {
        let pre = self.pre_activation(input);
        let out = self.spec.activation.apply(&pre);
        let result = self.to_output_shape(out.clone());
        self.cache = Some(Cache {
            input: input.clone(),
            pre,
            out,
        });
        result
    }

    /// Back-propagates `grad_output` (shaped like this layer's output).
    /// Accumulates parameter gradients when `accumulate` is set; returns
    /// the gradient with respect to the layer input.
    pub(crate) fn backward(
        &mut self,
        index: usize,
        grad_output: Tensor2D,
        accumulate: bool,
    ) -> Result<Tensor2D> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::Usage(format!("layer {index}: backward before forward")))?;
        let (pr, pc) = cache.pre.shape();
        let mut grad = grad_output.reshape(pr, pc)?;
        self.spec
            .activation
            .backprop(&cache.pre, &cache.out, &mut grad);
        if !grad.all_finite() {
            return Err(Error::Numeric {
                context: format!("gradient at layer {index}"),
            });
        }

        match self.spec.kind {
            LayerKind::Dense { inputs, outputs } => {
                if accumulate {
                    let mut gw = Tensor2D::new(inputs, outputs, std::mem::take(&mut self.grad_weights))?;
                    gemm(1.0, &cache.input, true, &grad, false, 1.0, &mut gw);
                    self.grad_weights = gw.into_values();
                    for row in grad.iter_rows() {
                        for (b, g) in self.grad_bias.iter_mut().zip(row) {
                            *b += g;
                        }
                    }
                }
                let mut grad_input = Tensor2D::zeros(grad.rows(), inputs);
                gemm_raw(
                    grad.rows(),
                    outputs,
                    inputs,
                    1.0,
                    grad.values(),
                    outputs,
                    false,
                    &self.weights,
                    outputs,
                    true,
                    0.0,
                    grad_input.values_mut(),
                );
                Ok(grad_input)
            }
            LayerKind::Conv1d {
                length,
                in_channels,
                out_channels,
                out_length,
            } => {
                let block = in_channels * out_channels;
                let mut grad_input = Tensor2D::zeros(length, in_channels);
                for t in 0..(length - out_length + 1) {
                    let window = &cache.input.values()[t * in_channels..];
                    if accumulate {
                        gemm_raw(
                            in_channels,
                            out_length,
                            out_channels,
                            1.0,
                            window,
                            in_channels,
                            true,
                            grad.values(),
                            out_channels,
                            false,
                            1.0,
                            &mut self.grad_weights[t * block..(t + 1) * block],
                        );
                    }
                    gemm_raw(
                        out_length,
                        out_channels,
                        in_channels,
                        1.0,
                        grad.values(),
                        out_channels,
                        false,
                        &self.weights[t * block..(t + 1) * block],
                        out_channels,
                        true,
                        1.0,
                        &mut grad_input.values_mut()[t * in_channels..],
                    );
                }
                if accumulate {
                    for row in grad.iter_rows() {
                        for (b, g) in self.grad_bias.iter_mut().zip(row) {
                            *b += g;
                        }
                    }
                }
                Ok(grad_input)
            }
        }
    }
}
