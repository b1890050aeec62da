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

//! A small deterministic dense-network engine.
//!
//! Models are stacks of affine layers with per-layer activations, trained by
//! plain gradient descent (full batch or seeded mini-batches). There is no
//! autodiff graph: back-propagation is written out for the supported
//! activations, and [`gradient_check`] verifies it against central
//! differences.

mod activation;
mod gradcheck;
mod model;
mod train;

pub(crate) use activation::softmax_inplace;
pub use activation::{sigmoid, softmax_rows, Activation};
pub use gradcheck::{
    analytic_gradient, gradient_check, gradient_check_with, max_relative_error, numeric_gradient,
    FD_STEP,
};
pub use model::{init_model, ForwardCache, Gradients, Head, Layer, LayerSpec, Model, ModelSpec};
pub use train::{backward_and_step, train, BatchSize, TrainConfig, TrainRun};
