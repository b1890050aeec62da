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

use crate::error::{Error, Result};
use crate::tensor::Tensor2D;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

/// Parallel rows of input features, privileged features and targets.
///
/// Targets are `n x 1` for regression and binary classification, and
/// one-hot `n x k` for multiclass classification.
#[derive(Clone, Debug, PartialEq)]
pub struct LupiDataset {
    pub x: Tensor2D,
    pub x_star: Tensor2D,
    pub y: Tensor2D,
    pub task: Task,
}

impl LupiDataset {
    pub fn new(x: Tensor2D, x_star: Tensor2D, y: Tensor2D, task: Task) -> Result<Self> {
        if x.rows() != x_star.rows() || x.rows() != y.rows() {
            return Err(Error::shape(
                "LupiDataset",
                format!("{} rows everywhere", x.rows()),
                format!(
                    "x {} rows, x_star {} rows, y {} rows",
                    x.rows(),
                    x_star.rows(),
                    y.rows()
                ),
            ));
        }
        Ok(Self { x, x_star, y, task })
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.x.cols()
    }

    pub fn privileged_dim(&self) -> usize {
        self.x_star.cols()
    }

    pub fn target_dim(&self) -> usize {
        self.y.cols()
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(rows),
            x_star: self.x_star.select_rows(rows),
            y: self.y.select_rows(rows),
            task: self.task,
        }
    }

    /// Class index per row: argmax for one-hot targets, `y > 0.5` for a
    /// single binary column.
    pub fn class_labels(&self) -> Vec<usize> {
        class_labels(&self.y)
    }
}

/// Decision rule shared by targets and predictions: `p > 0.5` for a single
/// column (exactly 0.5 maps to class 0), first maximum otherwise.
pub fn class_labels(t: &Tensor2D) -> Vec<usize> {
    t.iter_rows()
        .map(|row| {
            if row.len() == 1 {
                usize::from(row[0] > 0.5)
            } else {
                let mut best = 0;
                for (k, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = k;
                    }
                }
                best
            }
        })
        .collect()
}

/// One-hot encodes class indices into `n x classes`.
pub fn one_hot(labels: &[usize], classes: usize) -> Result<Tensor2D> {
    let mut t = Tensor2D::zeros(labels.len(), classes);
    for (r, &c) in labels.iter().enumerate() {
        if c >= classes {
            return Err(Error::Domain(format!(
                "label {c} out of range for {classes} classes"
            )));
        }
        t.set(r, c, 1.0);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_rows() {
        let err = LupiDataset::new(
            Tensor2D::zeros(3, 2),
            Tensor2D::zeros(2, 1),
            Tensor2D::zeros(3, 1),
            Task::Regression,
        );
        assert!(err.is_err());
    }

    #[test]
    fn class_label_rule() {
        let bin = Tensor2D::column(&[0.5, 0.51, 0.0, 1.0]);
        assert_eq!(class_labels(&bin), vec![0, 1, 0, 1]);
        let multi = Tensor2D::from_rows(&[[0.1, 0.7, 0.2], [0.4, 0.4, 0.2]]).unwrap();
        assert_eq!(class_labels(&multi), vec![1, 0]);
        let oh = one_hot(&[2, 0], 3).unwrap();
        assert_eq!(class_labels(&oh), vec![2, 0]);
        assert!(one_hot(&[3], 3).is_err());
    }
}
