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

//! Finite-difference verification of back-propagated gradients.

use super::model::{Head, Model};
use crate::error::{Error, Result};
use crate::loss::{base_loss, BaseLossKind};
use crate::tensor::Tensor2D;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-6;

/// Relative-error floor in the denominator.
const DENOM_FLOOR: f64 = 1e-8;

/// Compares back-propagated gradients of `base_loss(loss, targets, model(batch))`
/// against central differences, returning the largest relative error
/// `|a - n| / max(1e-8, |a| + |n|)` over all parameters.
pub fn gradient_check(
    model: &Model,
    batch: &Tensor2D,
    loss: BaseLossKind,
    targets: &Tensor2D,
) -> Result<f64> {
    gradient_check_with(model, batch, Head::Output, |out| {
        let l = base_loss(loss, targets, out)?;
        Ok((l.value, l.grad))
    })
}

/// Like [`gradient_check`], for an arbitrary loss of the model's `head`
/// values. `loss_fn` returns the loss and its gradient with respect to them.
pub fn gradient_check_with<F>(
    model: &Model,
    batch: &Tensor2D,
    head: Head,
    loss_fn: F,
) -> Result<f64>
where
    F: Fn(&Tensor2D) -> Result<(f64, Tensor2D)>,
{
    let analytic = analytic_gradient(model, batch, head, &loss_fn)?;
    let numeric = numeric_gradient(model, batch, head, &loss_fn)?;
    Ok(max_relative_error(&analytic, &numeric))
}

pub fn analytic_gradient<F>(
    model: &Model,
    batch: &Tensor2D,
    head: Head,
    loss_fn: &F,
) -> Result<Vec<f64>>
where
    F: Fn(&Tensor2D) -> Result<(f64, Tensor2D)>,
{
    let cache = model.forward_cached(batch)?;
    let (_, grad) = loss_fn(cache.head(head))?;
    Ok(model.backward(&cache, &grad, head)?.flatten())
}

/// Central differences of the loss with respect to each parameter.
pub fn numeric_gradient<F>(
    model: &Model,
    batch: &Tensor2D,
    head: Head,
    loss_fn: &F,
) -> Result<Vec<f64>>
where
    F: Fn(&Tensor2D) -> Result<(f64, Tensor2D)>,
{
    let eval = |m: &Model| -> Result<f64> {
        let out = match head {
            Head::Output => m.forward(batch)?,
            Head::Logits => m.forward_logits(batch)?,
        };
        Ok(loss_fn(&out)?.0)
    };
    let base = model.params_flat();
    let mut probe = model.clone();
    let mut params = base.clone();
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        params[i] = base[i] + FD_STEP;
        probe.set_params_flat(&params)?;
        let plus = eval(&probe)?;
        params[i] = base[i] - FD_STEP;
        probe.set_params_flat(&params)?;
        let minus = eval(&probe)?;
        params[i] = base[i];
        let g = (plus - minus) / (2.0 * FD_STEP);
        if !g.is_finite() {
            return Err(Error::Numeric(format!(
                "finite difference for parameter {i} is not finite"
            )));
        }
        out.push(g);
    }
    Ok(out)
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / DENOM_FLOOR.max(a.abs() + n.abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_model, Activation, Layer, LayerSpec, ModelSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor2D {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Tensor2D::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn two_layer_relu_mse() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = init_model(&ModelSpec::new(
            4,
            vec![
                LayerSpec::new(6, Activation::Relu),
                LayerSpec::new(2, Activation::Linear),
            ],
            3,
        ))
        .unwrap();
        let x = random_tensor(&mut rng, 8, 4);
        let y = random_tensor(&mut rng, 8, 2);
        let err = gradient_check(&model, &x, BaseLossKind::Mse, &y).unwrap();
        assert!(err < 1e-5, "max relative error {err}");
    }

    #[test]
    fn linear_mse_is_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = init_model(&ModelSpec::new(
            5,
            vec![LayerSpec::new(1, Activation::Linear)],
            9,
        ))
        .unwrap();
        let x = random_tensor(&mut rng, 10, 5);
        let y = random_tensor(&mut rng, 10, 1);
        let err = gradient_check(&model, &x, BaseLossKind::Mse, &y).unwrap();
        assert!(err < 1e-7, "max relative error {err}");
    }

    #[test]
    fn zero_network_has_exactly_zero_weight_gradient() {
        let spec = ModelSpec::new(
            3,
            vec![
                LayerSpec::new(4, Activation::Relu),
                LayerSpec::new(1, Activation::Linear),
            ],
            0,
        );
        let model = Model::from_parts(
            spec,
            vec![
                Layer {
                    weights: Tensor2D::zeros(4, 3),
                    bias: vec![0.0; 4],
                },
                Layer {
                    weights: Tensor2D::zeros(1, 4),
                    bias: vec![0.0],
                },
            ],
        )
        .unwrap();
        let x = Tensor2D::from_rows(&[[1.0, 2.0, 3.0], [-1.0, 0.0, 0.5]]).unwrap();
        let y = Tensor2D::zeros(2, 1);
        let loss = |out: &Tensor2D| {
            let l = base_loss(BaseLossKind::Mse, &y, out)?;
            Ok((l.value, l.grad))
        };
        let g = analytic_gradient(&model, &x, Head::Output, &loss).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
        assert_eq!(
            gradient_check(&model, &x, BaseLossKind::Mse, &y).unwrap(),
            0.0
        );
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(max_relative_error(&[0.0], &[0.0]), 0.0);
        assert!((max_relative_error(&[1e-9], &[0.0]) - 0.1).abs() < 1e-12);
        assert!((max_relative_error(&[1.0, 2.0], &[1.0, 1.0]) - 1.0 / 3.0).abs() < 1e-12);
    }
}
