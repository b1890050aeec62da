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

use serde::{Deserialize, Serialize};

use crate::tensor::Tensor2D;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
    Sigmoid,
    /// Row-wise softmax. Only valid on the final layer.
    Softmax,
}

impl Activation {
    pub fn apply(self, pre: &Tensor2D) -> Tensor2D {
        match self {
            Activation::Linear => pre.clone(),
            Activation::Relu => pre.map(|v| v.max(0.0)),
            Activation::Sigmoid => pre.map(sigmoid),
            Activation::Softmax => softmax_rows(pre),
        }
    }

    /// Maps a gradient with respect to the activation output back to the
    /// pre-activation, given both sides of the forward pass.
    pub fn backward(self, pre: &Tensor2D, out: &Tensor2D, grad_out: &Tensor2D) -> Tensor2D {
        match self {
            Activation::Linear => grad_out.clone(),
            Activation::Relu => {
                let mut g = grad_out.clone();
                for (gv, &z) in g.data_mut().iter_mut().zip(pre.data()) {
                    if z <= 0.0 {
                        *gv = 0.0;
                    }
                }
                g
            }
            Activation::Sigmoid => {
                let mut g = grad_out.clone();
                for (gv, &a) in g.data_mut().iter_mut().zip(out.data()) {
                    *gv *= a * (1.0 - a);
                }
                g
            }
            Activation::Softmax => {
                // dz_j = a_j * (g_j - sum_k g_k a_k)
                let mut g = grad_out.clone();
                for r in 0..g.rows() {
                    let a = out.row(r);
                    let inner: f64 = g.row(r).iter().zip(a).map(|(x, y)| x * y).sum();
                    for (gv, &av) in g.row_mut(r).iter_mut().zip(a) {
                        *gv = av * (*gv - inner);
                    }
                }
                g
            }
        }
    }
}

/// Logistic function, evaluated without overflow for large `|z|`.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Softmax over each row, with max subtraction.
pub fn softmax_rows(logits: &Tensor2D) -> Tensor2D {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        softmax_inplace(out.row_mut(r));
    }
    out
}

pub(crate) fn softmax_inplace(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}
