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

//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use std::path::PathBuf;

use lupi_core::loss::{
    base_loss, meta_loss, softened_distill_loss, BaseLossKind, DistillConfig, MetaLossConfig,
};
use lupi_core::nn::{gradient_check_with, init_model, Activation, Head, LayerSpec, ModelSpec};
use lupi_core::runner::{DataSource, ExperimentPlan};
use lupi_core::Tensor2D;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smallest distance from a ReLU kink in gradient-check instances.
pub const KINK_MARGIN: f64 = 1e-4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_tensor(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    lo: f64,
    hi: f64,
) -> Tensor2D {
    let data = (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect();
    Tensor2D::from_vec(rows, cols, data).unwrap()
}

/// Rows drawn uniformly and normalised to sum to one.
pub fn simplex_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor2D {
    let mut t = uniform_tensor(rng, rows, cols, lo, hi);
    for r in 0..rows {
        let s: f64 = t.row(r).iter().sum();
        t.row_mut(r).iter_mut().for_each(|v| *v /= s);
    }
    t
}

pub fn one_hot_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor2D {
    let mut t = Tensor2D::zeros(rows, cols);
    for r in 0..rows {
        let c = rng.random_range(0..cols);
        t.set(r, c, 1.0);
    }
    t
}

/// The loss under test in a gradient-check instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LossCase {
    Base(BaseLossKind),
    /// Teacher-weighted meta-loss over the given base loss.
    Meta(BaseLossKind),
    /// Softened distillation over the given base loss.
    Distill(BaseLossKind),
}

#[derive(Debug)]
pub struct GradInstance {
    pub description: String,
    pub max_relative_error: f64,
}

/// A random network with 1 to 3 layers of width 1 to 5, a final activation
/// that suits the loss, and a random batch, checked against central
/// differences.
pub fn random_gradient_instance(rng: &mut ChaCha8Rng, case: LossCase) -> GradInstance {
    let input_dim = rng.random_range(1..=4);
    let hidden = rng.random_range(0..=2);
    let kind = match case {
        LossCase::Base(k) | LossCase::Meta(k) | LossCase::Distill(k) => k,
    };
    let out_dim = match kind {
        BaseLossKind::CrossEntropy => rng.random_range(2..=4),
        _ => rng.random_range(1..=3),
    };
    let mut layers = Vec::new();
    for _ in 0..hidden {
        let act =
            [Activation::Linear, Activation::Relu, Activation::Sigmoid][rng.random_range(0..3)];
        layers.push(LayerSpec::new(rng.random_range(1..=5), act));
    }
    let final_act = match kind {
        BaseLossKind::Mse => [Activation::Linear, Activation::Sigmoid][rng.random_range(0..2)],
        BaseLossKind::Bce => Activation::Sigmoid,
        BaseLossKind::CrossEntropy => Activation::Softmax,
    };
    layers.push(LayerSpec::new(out_dim, final_act));
    let spec = ModelSpec::new(input_dim, layers, rng.random());
    let mut model = init_model(&spec).unwrap();
    let n = rng.random_range(1..=6);
    // Random biases as well as weights, and no ReLU input near its kink,
    // where the derivative does not exist and finite differences are
    // one-sided. Redraw until the point is differentiable.
    let batch = loop {
        let params: Vec<f64> = (0..model.num_params())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        model.set_params_flat(&params).unwrap();
        let batch = uniform_tensor(rng, n, input_dim, -2.0, 2.0);
        let cache = model.forward_cached(&batch).unwrap();
        let near_kink = spec
            .layers
            .iter()
            .zip(cache.pre_activations())
            .any(|(l, pre)| {
                l.activation == Activation::Relu && pre.data().iter().any(|z| z.abs() < KINK_MARGIN)
            });
        if !near_kink {
            break batch;
        }
    };

    let targets = match kind {
        BaseLossKind::Mse => uniform_tensor(rng, n, out_dim, -1.0, 1.0),
        BaseLossKind::Bce => uniform_tensor(rng, n, out_dim, 0.0, 1.0),
        BaseLossKind::CrossEntropy => one_hot_rows(rng, n, out_dim),
    };
    let teacher = match kind {
        BaseLossKind::Mse => uniform_tensor(rng, n, out_dim, -1.0, 1.0),
        BaseLossKind::Bce => uniform_tensor(rng, n, out_dim, 0.05, 0.95),
        BaseLossKind::CrossEntropy => simplex_rows(rng, n, out_dim, 0.1, 1.0),
    };
    let temperature = rng.random_range(0.0..3.0);
    let err = match case {
        LossCase::Base(_) => gradient_check_with(&model, &batch, Head::Output, |out| {
            let l = base_loss(kind, &targets, out)?;
            Ok((l.value, l.grad))
        }),
        LossCase::Meta(_) => {
            let cfg = MetaLossConfig::new(temperature, kind);
            gradient_check_with(&model, &batch, Head::Output, |out| {
                let l = meta_loss(&cfg, out, &teacher, &targets)?;
                Ok((l.value, l.grad))
            })
        }
        LossCase::Distill(_) => {
            let cfg = DistillConfig {
                lambda: rng.random_range(0.0..=1.0),
                temperature: rng.random_range(0.5..5.0),
                base_loss: kind,
            };
            let teacher_logits = uniform_tensor(rng, n, out_dim, -3.0, 3.0);
            gradient_check_with(&model, &batch, Head::Logits, |logits| {
                let l = softened_distill_loss(&cfg, logits, &teacher_logits, &targets)?;
                Ok((l.value, l.grad))
            })
        }
    }
    .unwrap();
    GradInstance {
        description: format!(
            "{case:?} input {input_dim}, layers {:?}, batch {n}",
            spec.layers
                .iter()
                .map(|l| (l.width, l.activation))
                .collect::<Vec<_>>()
        ),
        max_relative_error: err,
    }
}

/// The 50-instance mix: every base loss, the meta-loss over every base loss
/// and distillation over both classification losses.
pub fn gradient_cases() -> Vec<LossCase> {
    use BaseLossKind::*;
    let kinds = [
        LossCase::Base(Mse),
        LossCase::Base(Bce),
        LossCase::Base(CrossEntropy),
        LossCase::Meta(Mse),
        LossCase::Meta(Bce),
        LossCase::Meta(CrossEntropy),
        LossCase::Distill(Bce),
        LossCase::Distill(CrossEntropy),
    ];
    (0..50).map(|i| kinds[i % kinds.len()]).collect()
}

/// Probability that a positive outscores a negative, by enumerating every
/// positive/negative pair (ties count one half).
pub fn brute_force_auc(labels: &[f64], scores: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li == 1.0 && lj == 0.0 {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Average precision without sorting: item `j` is ranked at or above item
/// `i` when it scores higher, or scores the same and comes no later in the
/// input (a stable descending order).
pub fn brute_force_ap(labels: &[f64], scores: &[f64]) -> f64 {
    let n = labels.len();
    let mut sum = 0.0;
    let mut positives = 0.0;
    for i in 0..n {
        if labels[i] != 1.0 {
            continue;
        }
        positives += 1.0;
        let above: Vec<usize> = (0..n)
            .filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j <= i))
            .collect();
        let hits = above.iter().filter(|&&j| labels[j] == 1.0).count();
        sum += hits as f64 / above.len() as f64;
    }
    sum / positives
}

/// Spearman's closed form `1 - 6 Σ d² / (n (n² - 1))`, valid without ties.
pub fn spearman_closed_form(a: &[f64], b: &[f64]) -> f64 {
    let rank = |v: &[f64], i: usize| v.iter().filter(|&&x| x < v[i]).count() as f64;
    let n = a.len() as f64;
    let d2: f64 = (0..a.len())
        .map(|i| (rank(a, i) - rank(b, i)).powi(2))
        .sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Where the MNIST IDX files are expected: `$MNIST_DIR`, else `data/mnist`
/// at the workspace root.
pub fn mnist_dir() -> PathBuf {
    match std::env::var_os("MNIST_DIR") {
        Some(d) => PathBuf::from(d),
        None => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"),
    }
}

pub fn mnist_available() -> bool {
    lupi_core::runner::MNIST_FILES
        .iter()
        .all(|f| mnist_dir().join(f).is_file())
}

pub fn mnist_plan() -> ExperimentPlan {
    let dir = mnist_dir();
    let [a, b, c, d] = lupi_core::runner::MNIST_FILES;
    ExperimentPlan::mnist(dir.join(a), dir.join(b), dir.join(c), dir.join(d))
}

/// Shrinks a synthetic plan for fast tests.
pub fn shrink(
    plan: &mut ExperimentPlan,
    n_train: usize,
    n_test: usize,
    d: usize,
    epochs: usize,
    reps: usize,
) {
    if let DataSource::Synthetic(cfg) = &mut plan.source {
        cfg.n_train = n_train;
        cfg.n_test = n_test;
        cfg.d = d;
    }
    plan.teacher_train.epochs = epochs;
    plan.student_train.epochs = epochs;
    plan.repetitions = reps;
}
