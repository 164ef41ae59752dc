//! Feedforward mean-function approximator with hand-written backpropagation.
//!
//! Weights live in one flat vector in layer-major order. Each layer stores its
//! weight matrix row-major (`out × in`, row `o` holds the weights feeding
//! output `o`) followed by its bias vector. A spec with no hidden layers is
//! the plain linear map `φ(s)ᵀθ` and carries no bias terms; every layer of a
//! network with hidden layers has a bias.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApproximatorSpec {
    pub input_dim: usize,
    #[serde(default)]
    pub hidden_layers: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    pub output_dim: usize,
}

#[derive(Debug, Clone, Copy)]
struct Layer {
    inputs: usize,
    outputs: usize,
    offset: usize,
    bias: bool,
}

impl Layer {
    fn weight_count(&self) -> usize {
        self.outputs * self.inputs + if self.bias { self.outputs } else { 0 }
    }

    fn bias_offset(&self) -> usize {
        self.offset + self.outputs * self.inputs
    }
}

/// Per-layer inputs recorded during a forward pass, needed for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `activations[l]` is the input to layer `l`; the last entry is the output.
    activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace always holds the input")
    }
}

impl ApproximatorSpec {
    pub fn linear(input_dim: usize, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_layers: Vec::new(),
            activation: Activation::Tanh,
            output_dim,
        }
    }

    pub fn mlp(input_dim: usize, hidden_layers: Vec<usize>, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_layers,
            activation: Activation::Tanh,
            output_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::config("spec.input_dim", "must be at least 1"));
        }
        if self.output_dim == 0 {
            return Err(Error::config("spec.output_dim", "must be at least 1"));
        }
        if self.hidden_layers.contains(&0) {
            return Err(Error::config("spec.hidden_layers", "hidden sizes must be at least 1"));
        }
        Ok(())
    }

    fn layers(&self) -> Vec<Layer> {
        let bias = !self.hidden_layers.is_empty();
        let mut sizes = Vec::with_capacity(self.hidden_layers.len() + 2);
        sizes.push(self.input_dim);
        sizes.extend_from_slice(&self.hidden_layers);
        sizes.push(self.output_dim);

        let mut offset = 0;
        sizes
            .windows(2)
            .map(|w| {
                let layer = Layer {
                    inputs: w[0],
                    outputs: w[1],
                    offset,
                    bias,
                };
                offset += layer.weight_count();
                layer
            })
            .collect()
    }

    pub fn weight_count(&self) -> usize {
        self.layers().iter().map(Layer::weight_count).sum()
    }

    /// Glorot-uniform hidden layers, zero biases and a zero output layer, so a
    /// freshly initialized policy has location parameter 0 everywhere.
    pub fn init_weights(&self, rng: &mut Rng) -> Vec<f64> {
        let layers = self.layers();
        let mut w = vec![0.0; self.weight_count()];
        for layer in &layers[..layers.len() - 1] {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for v in &mut w[layer.offset..layer.offset + layer.inputs * layer.outputs] {
                *v = rng.random_range(-limit..limit);
            }
        }
        w
    }

    fn check(&self, weights: &[f64], input: &[f64]) -> Result<()> {
        let expected = self.weight_count();
        if weights.len() != expected {
            return Err(Error::Dimension {
                what: "approximator weights",
                expected,
                got: weights.len(),
            });
        }
        if input.len() != self.input_dim {
            return Err(Error::Dimension {
                what: "observation",
                expected: self.input_dim,
                got: input.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, weights: &[f64], input: &[f64]) -> Result<Vec<f64>> {
        let mut trace = self.forward_trace(weights, input)?;
        Ok(trace.activations.pop().unwrap_or_default())
    }

    pub fn forward_trace(&self, weights: &[f64], input: &[f64]) -> Result<ForwardTrace> {
        self.check(weights, input)?;
        let layers = self.layers();
        let last = layers.len() - 1;
        let mut activations = Vec::with_capacity(layers.len() + 1);
        activations.push(input.to_vec());

        for (l, layer) in layers.iter().enumerate() {
            let x = &activations[l];
            let mut out = Vec::with_capacity(layer.outputs);
            for o in 0..layer.outputs {
                let row = &weights[layer.offset + o * layer.inputs..][..layer.inputs];
                let mut z: f64 = row.iter().zip(x).map(|(w, x)| w * x).sum();
                if layer.bias {
                    z += weights[layer.bias_offset() + o];
                }
                out.push(if l == last { z } else { activation(self.activation, z) });
            }
            activations.push(out);
        }
        Ok(ForwardTrace { activations })
    }

    /// Backpropagates `grad_output` (∂L/∂output) through the network and
    /// writes ∂L/∂θ into `grad_weights`.
    pub fn backward(
        &self,
        weights: &[f64],
        trace: &ForwardTrace,
        grad_output: &[f64],
        grad_weights: &mut [f64],
    ) {
        let layers = self.layers();
        debug_assert_eq!(grad_weights.len(), weights.len());
        debug_assert_eq!(grad_output.len(), self.output_dim);

        let mut delta = grad_output.to_vec();
        for (l, layer) in layers.iter().enumerate().rev() {
            let x = &trace.activations[l];
            for o in 0..layer.outputs {
                let row = &mut grad_weights[layer.offset + o * layer.inputs..][..layer.inputs];
                for (g, xi) in row.iter_mut().zip(x) {
                    *g = delta[o] * xi;
                }
                if layer.bias {
                    grad_weights[layer.bias_offset() + o] = delta[o];
                }
            }
            if l == 0 {
                break;
            }
            // x is the activated output of layer l-1.
            let mut prev = vec![0.0; layer.inputs];
            for (o, d) in delta.iter().enumerate() {
                let row = &weights[layer.offset + o * layer.inputs..][..layer.inputs];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            for (p, a) in prev.iter_mut().zip(x) {
                *p *= activation_derivative_from_output(self.activation, *a);
            }
            delta = prev;
        }
    }
}

fn activation(kind: Activation, z: f64) -> f64 {
    match kind {
        Activation::Tanh => z.tanh(),
    }
}

fn activation_derivative_from_output(kind: Activation, a: f64) -> f64 {
    match kind {
        Activation::Tanh => 1.0 - a * a,
    }
}
