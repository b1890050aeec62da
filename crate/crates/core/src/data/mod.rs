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

//! Dataset loading, downscaling, splitting and feature scaling.

mod idx;
mod split;
mod tabular;

pub use idx::{
    downscale_4x4, encode_idx_images, encode_idx_labels, load_idx, parse_idx_images,
    parse_idx_labels, read_idx_images, read_idx_labels, write_idx_images, write_idx_labels,
    IdxImageSet, IMAGE_MAGIC, LABEL_MAGIC,
};
pub use split::{loocv_splits, subsample, subsample_indices, CvSplit, Fold};
pub use tabular::{load_tabular, parse_tabular, save_tabular, write_tabular, TabularData};

use crate::tensor::Tensor2D;

/// Per-column z-scoring fitted on one split and applied to others.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    /// Population statistics of each column. Constant columns get scale 1.
    pub fn fit(t: &Tensor2D) -> Self {
        let n = t.rows().max(1) as f64;
        let mean: Vec<f64> = t.sum_rows().iter().map(|s| s / n).collect();
        let mut var = vec![0.0; t.cols()];
        for row in t.iter_rows() {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, t: &Tensor2D) -> Tensor2D {
        let mut out = t.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}
