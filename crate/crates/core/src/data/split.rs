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

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::LupiDataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub group: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Leave-one-group-out folds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvSplit {
    pub folds: Vec<Fold>,
}

/// One fold per distinct group, in order of first appearance. Fold `g`
/// tests exactly the rows of group `g` and trains on every other row.
pub fn loocv_splits<G: AsRef<str>>(groups: &[G]) -> Result<CvSplit> {
    let mut names: Vec<&str> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut fold_of = Vec::with_capacity(groups.len());
    let mut lookup = std::collections::HashMap::new();
    for (row, g) in groups.iter().enumerate() {
        let g = g.as_ref();
        let f = *lookup.entry(g).or_insert_with(|| {
            names.push(g);
            members.push(Vec::new());
            names.len() - 1
        });
        members[f].push(row);
        fold_of.push(f);
    }
    if names.len() < 2 {
        return Err(Error::Config(format!(
            "leave-one-group-out needs at least 2 distinct groups, found {}",
            names.len()
        )));
    }
    let folds = names
        .iter()
        .zip(members)
        .enumerate()
        .map(|(f, (name, test))| Fold {
            group: name.to_string(),
            train: (0..groups.len()).filter(|&r| fold_of[r] != f).collect(),
            test,
        })
        .collect();
    Ok(CvSplit { folds })
}

/// `n` distinct row indices out of `total`, uniformly without replacement.
/// The order of the returned indices is part of the seeded result.
pub fn subsample_indices(total: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n > total {
        return Err(Error::Domain(format!(
            "cannot draw {n} rows from a dataset of {total}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(index::sample(&mut rng, total, n).into_vec())
}

pub fn subsample(dataset: &LupiDataset, n: usize, seed: u64) -> Result<LupiDataset> {
    let rows = subsample_indices(dataset.len(), n, seed)?;
    Ok(dataset.select(&rows))
}
