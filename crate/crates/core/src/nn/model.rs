// Copyright 2026 The lupi-meta Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use crate::error::{Error, Result};
use crate::tensor::Tensor2D;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(width: usize, activation: Activation) -> Self {
        Self { width, activation }
    }
}

/// Architecture of a dense feed-forward network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub layers: Vec<LayerSpec>,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(input_dim: usize, layers: Vec<LayerSpec>, seed: u64) -> Self {
        Self {
            input_dim,
            layers,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("model needs at least one layer".into()));
        }
        if self.input_dim == 0 {
            return Err(Error::Config("model input_dim must be positive".into()));
        }
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            if layer.width == 0 {
                return Err(Error::Config(format!("layer {k} has zero width")));
            }
            if layer.activation == Activation::Softmax && k != last {
                return Err(Error::Config(format!(
                    "softmax is only allowed on the final layer (found on layer {k})"
                )));
            }
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.width)
    }

    pub fn final_activation(&self) -> Activation {
        self.layers
            .last()
            .map_or(Activation::Linear, |l| l.activation)
    }
}

/// Weights are stored `width x fan_in`, so a layer computes `x W^T + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Tensor2D,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    spec: ModelSpec,
    layers: Vec<Layer>,
}

/// Draws weights from `N(0, 1) / sqrt(fan_in)` using a ChaCha8 stream seeded
/// with `spec.seed`; biases start at zero.
pub fn init_model(spec: &ModelSpec) -> Result<Model> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut fan_in = spec.input_dim;
    let mut layers = Vec::with_capacity(spec.layers.len());
    for ls in &spec.layers {
        let scale = 1.0 / (fan_in as f64).sqrt();
        let data = (0..ls.width * fan_in)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            })
            .collect();
        layers.push(Layer {
            weights: Tensor2D::from_vec(ls.width, fan_in, data)?,
            bias: vec![0.0; ls.width],
        });
        fan_in = ls.width;
    }
    Ok(Model {
        spec: spec.clone(),
        layers,
    })
}

/// Which tensor a loss gradient refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Head {
    /// The final layer's output, after its activation.
    Output,
    /// The final layer's pre-activation (logits).
    Logits,
}

/// Intermediate values of one forward pass, reused by [`Model::backward`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// `inputs[k]` is the tensor fed into layer `k`.
    inputs: Vec<Tensor2D>,
    pre: Vec<Tensor2D>,
    output: Tensor2D,
}

impl ForwardCache {
    /// Pre-activation of every layer, in order.
    pub fn pre_activations(&self) -> &[Tensor2D] {
        &self.pre
    }

    pub fn output(&self) -> &Tensor2D {
        &self.output
    }

    pub fn logits(&self) -> &Tensor2D {
        self.pre.last().expect("model has at least one layer")
    }

    pub fn head(&self, head: Head) -> &Tensor2D {
        match head {
            Head::Output => self.output(),
            Head::Logits => self.logits(),
        }
    }

    pub fn batch_rows(&self) -> usize {
        self.output.rows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }
}

impl Model {
    /// Assembles a model from explicit parameters, checking every shape.
    pub fn from_parts(spec: ModelSpec, layers: Vec<Layer>) -> Result<Self> {
        spec.validate()?;
        if layers.len() != spec.layers.len() {
            return Err(Error::shape(
                "Model::from_parts",
                format!("{} layers", spec.layers.len()),
                layers.len(),
            ));
        }
        let mut fan_in = spec.input_dim;
        for (ls, layer) in spec.layers.iter().zip(&layers) {
            if layer.weights.shape() != (ls.width, fan_in) || layer.bias.len() != ls.width {
                return Err(Error::shape(
                    "Model::from_parts",
                    format!("weights {}x{fan_in}, bias {}", ls.width, ls.width),
                    format!(
                        "weights {}x{}, bias {}",
                        layer.weights.rows(),
                        layer.weights.cols(),
                        layer.bias.len()
                    ),
                ));
            }
            fan_in = ls.width;
        }
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.data().len() + l.bias.len())
            .sum()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn params_flat(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::shape(
                "Model::set_params_flat",
                self.num_params(),
                params.len(),
            ));
        }
        let mut it = params.iter().copied();
        for layer in &mut self.layers {
            for w in layer.weights.data_mut() {
                *w = it.next().unwrap();
            }
            for b in &mut layer.bias {
                *b = it.next().unwrap();
            }
        }
        Ok(())
    }

    pub fn forward(&self, batch: &Tensor2D) -> Result<Tensor2D> {
        Ok(self.forward_cached(batch)?.output)
    }

    /// Final-layer pre-activations.
    pub fn forward_logits(&self, batch: &Tensor2D) -> Result<Tensor2D> {
        let mut cache = self.forward_cached(batch)?;
        Ok(cache.pre.pop().expect("model has at least one layer"))
    }

    pub fn forward_cached(&self, batch: &Tensor2D) -> Result<ForwardCache> {
        if batch.cols() != self.spec.input_dim {
            return Err(Error::shape(
                "forward",
                format!("{} input columns", self.spec.input_dim),
                batch.cols(),
            ));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut current = batch.clone();
        for (layer, ls) in self.layers.iter().zip(&self.spec.layers) {
            let mut z = current.matmul_t(&layer.weights)?;
            z.add_row_broadcast(&layer.bias)?;
            let a = ls.activation.apply(&z);
            inputs.push(current);
            pre.push(z);
            current = a;
        }
        Ok(ForwardCache {
            inputs,
            pre,
            output: current,
        })
    }

    /// Back-propagates `grad` (a gradient with respect to `head` for the
    /// cached batch) to every parameter.
    pub fn backward(&self, cache: &ForwardCache, grad: &Tensor2D, head: Head) -> Result<Gradients> {
        let expected = cache.head(head);
        if grad.shape() != expected.shape() {
            return Err(Error::shape(
                "backward",
                format!("{}x{} loss gradient", expected.rows(), expected.cols()),
                format!("{}x{}", grad.rows(), grad.cols()),
            ));
        }
        let n_layers = self.layers.len();
        let mut out = Vec::with_capacity(n_layers);
        let mut delta = match head {
            Head::Output => self.spec.layers[n_layers - 1].activation.backward(
                &cache.pre[n_layers - 1],
                &cache.output,
                grad,
            ),
            Head::Logits => grad.clone(),
        };
        for k in (0..n_layers).rev() {
            let grad_w = delta.t_matmul(&cache.inputs[k])?;
            let grad_b = delta.sum_rows();
            out.push(Layer {
                weights: grad_w,
                bias: grad_b,
            });
            if k > 0 {
                let grad_in = delta.matmul(&self.layers[k].weights)?;
                // the input to layer k is the activation of layer k - 1
                delta = self.spec.layers[k - 1].activation.backward(
                    &cache.pre[k - 1],
                    &cache.inputs[k],
                    &grad_in,
                );
            }
        }
        out.reverse();
        Ok(Gradients { layers: out })
    }

    /// `p <- p - lr * g` for every parameter.
    pub fn apply_gradients(&mut self, grads: &Gradients, learning_rate: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, gw) in layer.weights.data_mut().iter_mut().zip(g.weights.data()) {
                *w -= learning_rate * gw;
            }
            for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= learning_rate * gb;
            }
        }
    }
}

fn flatten_layers(layers: &[Layer]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        out.extend_from_slice(l.weights.data());
        out.extend_from_slice(&l.bias);
    }
    out
}
