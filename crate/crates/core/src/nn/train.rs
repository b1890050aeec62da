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

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::model::{Head, Model};
use crate::error::{Error, Result};
use crate::tensor::Tensor2D;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchSize {
    Full,
    Size(usize),
}

impl fmt::Display for BatchSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BatchSize::Full => f.write_str("full"),
            BatchSize::Size(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for BatchSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("full") {
            return Ok(BatchSize::Full);
        }
        match s.parse::<usize>() {
            Ok(0) => Err(Error::Config("batch size must be positive".into())),
            Ok(n) => Ok(BatchSize::Size(n)),
            Err(_) => Err(Error::Config(format!(
                "batch size must be `full` or a positive integer, got `{s}`"
            ))),
        }
    }
}

impl Serialize for BatchSize {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BatchSize::Full => s.serialize_str("full"),
            BatchSize::Size(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for BatchSize {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(usize),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(0) => Err(serde::de::Error::custom("batch size must be positive")),
            Repr::Num(n) => Ok(BatchSize::Size(n)),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: BatchSize,
    /// Seeds the per-epoch shuffle when mini-batching.
    pub seed: u64,
}

impl TrainConfig {
    pub fn full_batch(learning_rate: f64, epochs: usize) -> Self {
        Self {
            learning_rate,
            epochs,
            batch_size: BatchSize::Full,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// One gradient-descent step on `batch` given the loss gradient with respect
/// to the model output. Returns the updated model; `model` is untouched.
pub fn backward_and_step(
    model: &Model,
    batch: &Tensor2D,
    loss_grad: &Tensor2D,
    cfg: &TrainConfig,
) -> Result<Model> {
    let cache = model.forward_cached(batch)?;
    let grads = model.backward(&cache, loss_grad, Head::Output)?;
    let mut next = model.clone();
    next.apply_gradients(&grads, cfg.learning_rate);
    Ok(next)
}

#[derive(Clone, Debug)]
pub struct TrainRun {
    pub model: Model,
    /// Mean batch loss per epoch.
    pub loss_history: Vec<f64>,
}

/// Gradient descent over `inputs` for `cfg.epochs` epochs.
///
/// `objective` receives the model's `head` values for a batch together with
/// the dataset row indices of that batch, and returns the mean loss over the
/// batch and its gradient with respect to those head values. Full-batch
/// training always passes rows in order `0..n`.
pub fn train<F>(
    mut model: Model,
    inputs: &Tensor2D,
    cfg: &TrainConfig,
    head: Head,
    mut objective: F,
) -> Result<TrainRun>
where
    F: FnMut(&Tensor2D, &[usize]) -> Result<(f64, Tensor2D)>,
{
    let n = inputs.rows();
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    if n == 0 || cfg.epochs == 0 {
        return Ok(TrainRun {
            model,
            loss_history,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let batch = match cfg.batch_size {
        BatchSize::Full => n,
        BatchSize::Size(b) => b.min(n),
    };

    for epoch in 0..cfg.epochs {
        if batch < n {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        let mut seen = 0;
        for rows in order.chunks(batch) {
            let x = if batch == n {
                inputs.clone()
            } else {
                inputs.select_rows(rows)
            };
            let cache = model.forward_cached(&x)?;
            let (loss, grad) = objective(cache.head(head), rows)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "training loss became non-finite at epoch {epoch}"
                )));
            }
            let grads = model.backward(&cache, &grad, head)?;
            model.apply_gradients(&grads, cfg.learning_rate);
            epoch_loss += loss * rows.len() as f64;
            seen += rows.len();
        }
        loss_history.push(epoch_loss / seen as f64);
    }
    if !model.params_flat().iter().all(|p| p.is_finite()) {
        return Err(Error::Numeric("parameters became non-finite".into()));
    }
    Ok(TrainRun {
        model,
        loss_history,
    })
}
