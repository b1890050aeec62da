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

//! Training with privileged information.
//!
//! A teacher network sees privileged features that exist only at training
//! time; a student on the ordinary input features learns from the targets
//! and from the teacher's outputs. The crate provides a small dense-network
//! engine, the teacher-weighted meta-loss and softened distillation, the
//! synthetic benchmark generators, MNIST and tabular loaders, evaluation
//! metrics and a reproducible experiment runner.

pub mod data;
pub mod dataset;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod nn;
pub mod runner;
pub mod synth;
pub mod tensor;

pub use dataset::{LupiDataset, Task};
pub use error::{Error, Result};
pub use loss::{BaseLossKind, DistillConfig, LossValue, MetaLossConfig};
pub use metrics::{Aggregate, MetricReport};
pub use nn::{Activation, BatchSize, LayerSpec, Model, ModelSpec, TrainConfig};
pub use runner::{ExperimentPlan, ExperimentReport, LossMode};
pub use synth::{Scenario, SynthConfig, SynthTask};
pub use tensor::Tensor2D;
