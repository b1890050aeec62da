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

//! Base losses, the temperature-weighted teacher/target meta-loss and the
//! softened distillation loss.
//!
//! Every loss here is a mean over rows (examples) of a per-row loss, and
//! comes with its analytic gradient with respect to the predictions (or
//! logits, for the distillation loss). Multi-column rows use the mean over
//! columns for MSE and BCE and the sum over classes for cross-entropy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{sigmoid, softmax_inplace};
use crate::tensor::Tensor2D;

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` inside logs.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseLossKind {
    Mse,
    Bce,
    CrossEntropy,
}

/// A loss value together with its gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: Tensor2D,
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

impl BaseLossKind {
    /// Loss of one row; `grad`, when given, receives d(row loss)/d(prediction).
    ///
    /// For the log losses the gradient is evaluated at the clamped
    /// probability, so it stays finite and non-zero at saturation.
    pub fn row_loss(self, target: &[f64], pred: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let k = target.len() as f64;
        match self {
            BaseLossKind::Mse => {
                let mut sum = 0.0;
                for (&t, &p) in target.iter().zip(pred) {
                    sum += (p - t) * (p - t);
                }
                if let Some(g) = grad {
                    for ((gv, &t), &p) in g.iter_mut().zip(target).zip(pred) {
                        *gv = 2.0 * (p - t) / k;
                    }
                }
                sum / k
            }
            BaseLossKind::Bce => {
                let mut sum = 0.0;
                for (&t, &p) in target.iter().zip(pred) {
                    let p = clamp_prob(p);
                    sum -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
                }
                if let Some(g) = grad {
                    for ((gv, &t), &p) in g.iter_mut().zip(target).zip(pred) {
                        let p = clamp_prob(p);
                        *gv = (-t / p + (1.0 - t) / (1.0 - p)) / k;
                    }
                }
                sum / k
            }
            BaseLossKind::CrossEntropy => {
                let mut sum = 0.0;
                for (&t, &p) in target.iter().zip(pred) {
                    if t != 0.0 {
                        sum -= t * clamp_prob(p).ln();
                    }
                }
                if let Some(g) = grad {
                    for ((gv, &t), &p) in g.iter_mut().zip(target).zip(pred) {
                        *gv = -t / clamp_prob(p);
                    }
                }
                sum
            }
        }
    }

    pub fn is_probabilistic(self) -> bool {
        !matches!(self, BaseLossKind::Mse)
    }
}

fn ensure_finite(t: &Tensor2D, what: &str) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!("{what} contains non-finite values")))
    }
}

/// Mean base loss between `target` and `prediction` rows, with the gradient
/// with respect to `prediction`.
pub fn base_loss(
    kind: BaseLossKind,
    target: &Tensor2D,
    prediction: &Tensor2D,
) -> Result<LossValue> {
    target.ensure_same_shape(prediction, "base_loss")?;
    ensure_finite(target, "target")?;
    ensure_finite(prediction, "prediction")?;
    let n = prediction.rows();
    let mut grad = Tensor2D::zeros(n, prediction.cols());
    if n == 0 {
        return Ok(LossValue { value: 0.0, grad });
    }
    let inv_n = 1.0 / n as f64;
    let mut total = 0.0;
    for r in 0..n {
        let g = grad.row_mut(r);
        total += kind.row_loss(target.row(r), prediction.row(r), Some(&mut *g));
        g.iter_mut().for_each(|v| *v *= inv_n);
    }
    Ok(LossValue {
        value: total * inv_n,
        grad,
    })
}

/// Per-row base losses, without gradients.
pub fn row_losses(
    kind: BaseLossKind,
    target: &Tensor2D,
    prediction: &Tensor2D,
) -> Result<Vec<f64>> {
    target.ensure_same_shape(prediction, "row_losses")?;
    ensure_finite(target, "target")?;
    ensure_finite(prediction, "prediction")?;
    Ok((0..target.rows())
        .map(|r| kind.row_loss(target.row(r), prediction.row(r), None))
        .collect())
}

/// `exp(-T * teacher_loss)`: the share of an example's loss spent on
/// matching the teacher.
pub fn transfer_weight(temperature: f64, teacher_loss: f64) -> Result<f64> {
    if !temperature.is_finite() || temperature < 0.0 {
        return Err(Error::Domain(format!(
            "temperature must be finite and non-negative, got {temperature}"
        )));
    }
    if !teacher_loss.is_finite() || teacher_loss < 0.0 {
        return Err(Error::Domain(format!(
            "teacher loss must be finite and non-negative, got {teacher_loss}"
        )));
    }
    Ok((-temperature * teacher_loss).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaLossConfig {
    pub temperature: f64,
    /// Overrides `temperature` row by row when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_example_temperature: Option<Vec<f64>>,
    pub base_loss: BaseLossKind,
}

impl MetaLossConfig {
    pub fn new(temperature: f64, base_loss: BaseLossKind) -> Self {
        Self {
            temperature,
            per_example_temperature: None,
            base_loss,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |t: f64| !t.is_finite() || t < 0.0;
        if bad(self.temperature) {
            return Err(Error::Domain(format!(
                "temperature must be finite and non-negative, got {}",
                self.temperature
            )));
        }
        if let Some(ts) = &self.per_example_temperature {
            if let Some((i, t)) = ts.iter().enumerate().find(|(_, &t)| bad(t)) {
                return Err(Error::Domain(format!(
                    "per-example temperature {i} must be finite and non-negative, got {t}"
                )));
            }
        }
        Ok(())
    }

    fn temperature_at(&self, i: usize) -> f64 {
        self.per_example_temperature
            .as_ref()
            .map_or(self.temperature, |ts| ts[i])
    }
}

/// Transfer weights `w_i = exp(-T_i * l(teacher_i, target_i))` for every row.
///
/// The weights depend only on the teacher's outputs and the targets, so a
/// training loop computes them once and reuses them for every step.
pub fn transfer_weights(
    cfg: &MetaLossConfig,
    teacher_out: &Tensor2D,
    targets: &Tensor2D,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if let Some(ts) = &cfg.per_example_temperature {
        if ts.len() != targets.rows() {
            return Err(Error::shape(
                "per_example_temperature",
                targets.rows(),
                ts.len(),
            ));
        }
    }
    let teacher_losses = row_losses(cfg.base_loss, targets, teacher_out)?;
    teacher_losses
        .iter()
        .enumerate()
        .map(|(i, &l)| transfer_weight(cfg.temperature_at(i), l))
        .collect()
}

/// Meta-loss with precomputed transfer weights:
/// `mean_i [(1 - w_i) l(target_i, s_i) + w_i l(teacher_i, s_i)]`.
/// The gradient is with respect to `student_out` only.
pub fn weighted_meta_loss(
    kind: BaseLossKind,
    weights: &[f64],
    student_out: &Tensor2D,
    teacher_out: &Tensor2D,
    targets: &Tensor2D,
) -> Result<LossValue> {
    student_out.ensure_same_shape(teacher_out, "meta_loss (teacher)")?;
    student_out.ensure_same_shape(targets, "meta_loss (targets)")?;
    if weights.len() != student_out.rows() {
        return Err(Error::shape(
            "meta_loss weights",
            student_out.rows(),
            weights.len(),
        ));
    }
    ensure_finite(student_out, "student output")?;
    ensure_finite(teacher_out, "teacher output")?;
    ensure_finite(targets, "targets")?;

    let n = student_out.rows();
    let cols = student_out.cols();
    let mut grad = Tensor2D::zeros(n, cols);
    if n == 0 {
        return Ok(LossValue { value: 0.0, grad });
    }
    let inv_n = 1.0 / n as f64;
    let mut g_target = vec![0.0; cols];
    let mut g_teacher = vec![0.0; cols];
    let mut total = 0.0;
    for (r, &w) in weights.iter().enumerate() {
        let s = student_out.row(r);
        let l_target = kind.row_loss(targets.row(r), s, Some(&mut g_target));
        let l_teacher = kind.row_loss(teacher_out.row(r), s, Some(&mut g_teacher));
        total += (1.0 - w) * l_target + w * l_teacher;
        for ((g, a), b) in grad.row_mut(r).iter_mut().zip(&g_target).zip(&g_teacher) {
            *g = ((1.0 - w) * a + w * b) * inv_n;
        }
    }
    Ok(LossValue {
        value: total * inv_n,
        grad,
    })
}

/// The teacher-weighted meta-loss. `teacher_out` is constant data: no
/// gradient flows to it, and the per-example weights are held fixed.
pub fn meta_loss(
    cfg: &MetaLossConfig,
    student_out: &Tensor2D,
    teacher_out: &Tensor2D,
    targets: &Tensor2D,
) -> Result<LossValue> {
    student_out.ensure_same_shape(teacher_out, "meta_loss (teacher)")?;
    student_out.ensure_same_shape(targets, "meta_loss (targets)")?;
    let weights = transfer_weights(cfg, teacher_out, targets)?;
    weighted_meta_loss(cfg.base_loss, &weights, student_out, teacher_out, targets)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillConfig {
    pub lambda: f64,
    pub temperature: f64,
    pub base_loss: BaseLossKind,
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Domain(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if !self.temperature.is_finite() || self.temperature <= 0.0 {
            return Err(Error::Domain(format!(
                "distillation temperature must be positive, got {}",
                self.temperature
            )));
        }
        if self.base_loss == BaseLossKind::Mse {
            return Err(Error::UnsupportedMode(
                "softened distillation is defined for classification losses (bce, cross_entropy) only"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Logistic (bce) or row softmax (cross-entropy) of a logit row.
fn squash_row(kind: BaseLossKind, row: &mut [f64]) {
    match kind {
        BaseLossKind::CrossEntropy => softmax_inplace(row),
        _ => row.iter_mut().for_each(|v| *v = sigmoid(*v)),
    }
}

/// Probabilities the distillation loss assigns to `logits`.
pub fn squash(kind: BaseLossKind, logits: &Tensor2D) -> Tensor2D {
    let mut p = logits.clone();
    for r in 0..p.rows() {
        squash_row(kind, p.row_mut(r));
    }
    p
}

/// Softened distillation loss
/// `mean_i [(1 - λ) l(y_i, σ(s_i)) + λ l(σ(t_i / T), σ(s_i))]`,
/// with the gradient with respect to the student logits `s`.
pub fn softened_distill_loss(
    cfg: &DistillConfig,
    student_logits: &Tensor2D,
    teacher_logits: &Tensor2D,
    targets: &Tensor2D,
) -> Result<LossValue> {
    cfg.validate()?;
    let soft = softened_teacher(cfg, teacher_logits)?;
    softened_distill_loss_with_soft_targets(cfg, student_logits, &soft, targets)
}

/// `σ(teacher_logits / T)`.
pub fn softened_teacher(cfg: &DistillConfig, teacher_logits: &Tensor2D) -> Result<Tensor2D> {
    cfg.validate()?;
    ensure_finite(teacher_logits, "teacher logits")?;
    Ok(squash(
        cfg.base_loss,
        &teacher_logits.scale(1.0 / cfg.temperature),
    ))
}

/// Distillation loss given already-softened teacher probabilities, for
/// training loops that soften the teacher once.
pub fn softened_distill_loss_with_soft_targets(
    cfg: &DistillConfig,
    student_logits: &Tensor2D,
    soft_teacher: &Tensor2D,
    targets: &Tensor2D,
) -> Result<LossValue> {
    cfg.validate()?;
    student_logits.ensure_same_shape(soft_teacher, "softened_distill_loss (teacher)")?;
    student_logits.ensure_same_shape(targets, "softened_distill_loss (targets)")?;
    ensure_finite(student_logits, "student logits")?;
    ensure_finite(targets, "targets")?;

    let kind = cfg.base_loss;
    let lambda = cfg.lambda;
    let n = student_logits.rows();
    let cols = student_logits.cols();
    let mut grad = Tensor2D::zeros(n, cols);
    if n == 0 {
        return Ok(LossValue { value: 0.0, grad });
    }
    let inv_n = 1.0 / n as f64;
    let mut p = vec![0.0; cols];
    let mut total = 0.0;
    for r in 0..n {
        p.copy_from_slice(student_logits.row(r));
        squash_row(kind, &mut p);
        let y = targets.row(r);
        let q = soft_teacher.row(r);
        total += (1.0 - lambda) * kind.row_loss(y, &p, None) + lambda * kind.row_loss(q, &p, None);

        // d/ds of a log loss composed with its squashing function, written
        // for the blended target u = (1 - λ) y + λ q.
        let g = grad.row_mut(r);
        match kind {
            BaseLossKind::CrossEntropy => {
                let mass: f64 = y
                    .iter()
                    .zip(q)
                    .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
                    .sum();
                for (k, gv) in g.iter_mut().enumerate() {
                    let u = (1.0 - lambda) * y[k] + lambda * q[k];
                    *gv = (p[k] * mass - u) * inv_n;
                }
            }
            _ => {
                let k_inv = 1.0 / cols as f64;
                for (k, gv) in g.iter_mut().enumerate() {
                    let u = (1.0 - lambda) * y[k] + lambda * q[k];
                    *gv = (p[k] - u) * k_inv * inv_n;
                }
            }
        }
    }
    Ok(LossValue {
        value: total * inv_n,
        grad,
    })
}
