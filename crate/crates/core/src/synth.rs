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

//! Seeded generators for four input/privileged space configurations.
//!
//! | scenario            | input `x`          | privileged `x*`          | score                 |
//! |---------------------|--------------------|--------------------------|-----------------------|
//! | `clean_labels`      | `N(0, I_d)`        | `αᵀx` (one column)       | `x* + ε`, `ε ~ N(0,1)` |
//! | `clean_features`    | `x* + ε`           | `N(0, I_d)`              | `αᵀx*`                |
//! | `relevant_features` | `N(0, I_d)`        | `x_J`, one shared `J`    | `αᵀx*`, `α ∈ R^{d*}`  |
//! | `sample_dependent`  | `N(0, I_d)`        | `x_{J_i}`, fresh per row | `αᵀx*_i`              |
//!
//! Classification labels are `1[score > 0]`; regression targets are the score.
//! `binary_regression` keeps the 0/1 labels but is trained and scored as a
//! regression problem.
//!
//! All randomness comes from one ChaCha8 stream seeded with `seed`. Draw
//! order: `α`, then `J` when shared, then the training rows, then the test
//! rows. Index sets are drawn without replacement and sorted ascending.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{LupiDataset, Task};
use crate::error::{Error, Result};
use crate::tensor::{dot, Tensor2D};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    CleanLabels,
    CleanFeatures,
    RelevantFeatures,
    SampleDependent,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::CleanLabels,
        Scenario::CleanFeatures,
        Scenario::RelevantFeatures,
        Scenario::SampleDependent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::CleanLabels => "clean_labels",
            Scenario::CleanFeatures => "clean_features",
            Scenario::RelevantFeatures => "relevant_features",
            Scenario::SampleDependent => "sample_dependent",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthTask {
    Classification,
    Regression,
    /// 0/1 labels fitted with squared error.
    BinaryRegression,
}

impl SynthTask {
    pub fn name(self) -> &'static str {
        match self {
            SynthTask::Classification => "classification",
            SynthTask::Regression => "regression",
            SynthTask::BinaryRegression => "binary_regression",
        }
    }

    pub fn dataset_task(self) -> Task {
        match self {
            SynthTask::Classification => Task::Classification,
            _ => Task::Regression,
        }
    }
}

impl fmt::Display for SynthTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "classification" => Ok(SynthTask::Classification),
            "regression" => Ok(SynthTask::Regression),
            "binary_regression" => Ok(SynthTask::BinaryRegression),
            other => Err(Error::Config(format!("unknown task `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub scenario: Scenario,
    pub task: SynthTask,
    pub n_train: usize,
    pub n_test: usize,
    pub d: usize,
    pub d_star: usize,
    pub seed: u64,
}

impl SynthConfig {
    /// 200 training rows, 1000 test rows, `d = 50`, `d* = 3`.
    pub fn new(scenario: Scenario, task: SynthTask, seed: u64) -> Self {
        Self {
            scenario,
            task,
            n_train: 200,
            n_test: 1000,
            d: 50,
            d_star: 3,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::Config(
                "n_train and n_test must be at least 1".into(),
            ));
        }
        if self.d_star == 0 || self.d < self.d_star {
            return Err(Error::Config(format!(
                "need d >= d_star >= 1, got d = {}, d_star = {}",
                self.d, self.d_star
            )));
        }
        Ok(())
    }
}

/// Dispatches on `cfg.scenario`.
pub fn generate(cfg: &SynthConfig) -> Result<(LupiDataset, LupiDataset)> {
    match cfg.scenario {
        Scenario::CleanLabels => gen_clean_labels(cfg),
        Scenario::CleanFeatures => gen_clean_features(cfg),
        Scenario::RelevantFeatures => gen_relevant_features(cfg),
        Scenario::SampleDependent => gen_sample_dependent(cfg),
    }
}

fn check_scenario(cfg: &SynthConfig, expected: Scenario) -> Result<()> {
    cfg.validate()?;
    if cfg.scenario != expected {
        return Err(Error::Config(format!(
            "generator for {expected} called with scenario {}",
            cfg.scenario
        )));
    }
    Ok(())
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

fn sorted_subset(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Vec<usize> {
    let mut j = index::sample(rng, d, k).into_vec();
    j.sort_unstable();
    j
}

fn label(task: SynthTask, score: f64) -> f64 {
    match task {
        SynthTask::Regression => score,
        SynthTask::Classification | SynthTask::BinaryRegression => {
            if score > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Accumulates rows for one split.
struct SplitBuilder {
    x: Vec<f64>,
    x_star: Vec<f64>,
    y: Vec<f64>,
}

impl SplitBuilder {
    fn with_capacity(n: usize, d: usize, d_priv: usize) -> Self {
        Self {
            x: Vec::with_capacity(n * d),
            x_star: Vec::with_capacity(n * d_priv),
            y: Vec::with_capacity(n),
        }
    }

    fn finish(self, n: usize, d: usize, d_priv: usize, task: SynthTask) -> Result<LupiDataset> {
        LupiDataset::new(
            Tensor2D::from_vec(n, d, self.x)?,
            Tensor2D::from_vec(n, d_priv, self.x_star)?,
            Tensor2D::from_vec(n, 1, self.y)?,
            task.dataset_task(),
        )
    }
}

fn two_splits<F>(
    cfg: &SynthConfig,
    rng: &mut ChaCha8Rng,
    d_priv: usize,
    mut row: F,
) -> Result<(LupiDataset, LupiDataset)>
where
    F: FnMut(&mut ChaCha8Rng, &mut SplitBuilder),
{
    let mut out = Vec::with_capacity(2);
    for n in [cfg.n_train, cfg.n_test] {
        let mut b = SplitBuilder::with_capacity(n, cfg.d, d_priv);
        for _ in 0..n {
            row(rng, &mut b);
        }
        out.push(b.finish(n, cfg.d, d_priv, cfg.task)?);
    }
    let test = out.pop().unwrap();
    let train = out.pop().unwrap();
    Ok((train, test))
}

/// Privileged feature is the noise-free score `αᵀx`; labels carry noise.
pub fn gen_clean_labels(cfg: &SynthConfig) -> Result<(LupiDataset, LupiDataset)> {
    check_scenario(cfg, Scenario::CleanLabels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let alpha = normal_vec(&mut rng, cfg.d);
    let task = cfg.task;
    let d = cfg.d;
    two_splits(cfg, &mut rng, 1, |rng, b| {
        let x = normal_vec(rng, d);
        let clean = dot(&alpha, &x);
        let eps = normal(rng);
        b.x.extend_from_slice(&x);
        b.x_star.push(clean);
        b.y.push(label(task, clean + eps));
    })
}

/// Input features are the privileged ones plus unit Gaussian noise; labels
/// come from the clean features.
pub fn gen_clean_features(cfg: &SynthConfig) -> Result<(LupiDataset, LupiDataset)> {
    check_scenario(cfg, Scenario::CleanFeatures)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let alpha = normal_vec(&mut rng, cfg.d);
    let task = cfg.task;
    let d = cfg.d;
    two_splits(cfg, &mut rng, d, |rng, b| {
        let clean = normal_vec(rng, d);
        let noise = normal_vec(rng, d);
        b.x.extend(clean.iter().zip(&noise).map(|(c, e)| c + e));
        b.y.push(label(task, dot(&alpha, &clean)));
        b.x_star.extend_from_slice(&clean);
    })
}

/// Privileged features are a fixed random subset `J` of the input columns.
pub fn gen_relevant_features(cfg: &SynthConfig) -> Result<(LupiDataset, LupiDataset)> {
    check_scenario(cfg, Scenario::RelevantFeatures)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let alpha = normal_vec(&mut rng, cfg.d_star);
    let subset = sorted_subset(&mut rng, cfg.d, cfg.d_star);
    let task = cfg.task;
    let d = cfg.d;
    two_splits(cfg, &mut rng, cfg.d_star, |rng, b| {
        let x = normal_vec(rng, d);
        let priv_row: Vec<f64> = subset.iter().map(|&j| x[j]).collect();
        b.y.push(label(task, dot(&alpha, &priv_row)));
        b.x.extend_from_slice(&x);
        b.x_star.extend_from_slice(&priv_row);
    })
}

/// Like `relevant_features`, but each row draws its own subset `J_i`.
pub fn gen_sample_dependent(cfg: &SynthConfig) -> Result<(LupiDataset, LupiDataset)> {
    check_scenario(cfg, Scenario::SampleDependent)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let alpha = normal_vec(&mut rng, cfg.d_star);
    let task = cfg.task;
    let (d, d_star) = (cfg.d, cfg.d_star);
    two_splits(cfg, &mut rng, d_star, |rng, b| {
        let x = normal_vec(rng, d);
        let subset = sorted_subset(rng, d, d_star);
        let priv_row: Vec<f64> = subset.iter().map(|&j| x[j]).collect();
        b.y.push(label(task, dot(&alpha, &priv_row)));
        b.x.extend_from_slice(&x);
        b.x_star.extend_from_slice(&priv_row);
    })
}

/// The training split of `cfg` with every row assigned to one of `n_groups`
/// groups (`g0`, `g1`, ...) round-robin, ready for grouped cross-validation.
pub fn grouped_sample(cfg: &SynthConfig, n_groups: usize) -> Result<(LupiDataset, Vec<String>)> {
    if n_groups < 2 || n_groups > cfg.n_train {
        return Err(Error::Config(format!(
            "need 2 <= groups <= n_train, got {n_groups} groups for {} rows",
            cfg.n_train
        )));
    }
    let (train, _) = generate(cfg)?;
    let groups = (0..train.len())
        .map(|i| format!("g{}", i % n_groups))
        .collect();
    Ok((train, groups))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouped_sample_assigns_round_robin() {
        let mut cfg = SynthConfig::new(Scenario::RelevantFeatures, SynthTask::Regression, 4);
        cfg.n_train = 7;
        let (ds, groups) = grouped_sample(&cfg, 3).unwrap();
        assert_eq!(ds.len(), 7);
        assert_eq!(groups, ["g0", "g1", "g2", "g0", "g1", "g2", "g0"]);
        assert!(grouped_sample(&cfg, 1).is_err());
        assert!(grouped_sample(&cfg, 8).is_err());
    }

    #[test]
    fn scenario_and_task_names_round_trip() {
        for sc in Scenario::ALL {
            assert_eq!(sc.name().parse::<Scenario>().unwrap(), sc);
        }
        for t in [
            SynthTask::Classification,
            SynthTask::Regression,
            SynthTask::BinaryRegression,
        ] {
            assert_eq!(t.name().parse::<SynthTask>().unwrap(), t);
        }
        assert!("noisy".parse::<Scenario>().is_err());
    }

    #[test]
    fn generator_rejects_wrong_scenario_and_bad_dims() {
        let cfg = SynthConfig::new(Scenario::CleanLabels, SynthTask::Regression, 0);
        assert!(gen_clean_features(&cfg).is_err());
        let mut bad = SynthConfig::new(Scenario::RelevantFeatures, SynthTask::Regression, 0);
        bad.d = 2;
        assert!(generate(&bad).is_err());
        bad.d = 50;
        bad.n_test = 0;
        assert!(generate(&bad).is_err());
    }

    #[test]
    fn clean_labels_shapes() {
        let cfg = SynthConfig::new(Scenario::CleanLabels, SynthTask::Classification, 3);
        let (train, test) = generate(&cfg).unwrap();
        assert_eq!(train.x.shape(), (200, 50));
        assert_eq!(train.x_star.shape(), (200, 1));
        assert_eq!(test.x.shape(), (1000, 50));
        assert!(train.y.data().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn splits_are_distinct_draws() {
        let mut cfg = SynthConfig::new(Scenario::RelevantFeatures, SynthTask::Regression, 3);
        cfg.n_train = 5;
        cfg.n_test = 5;
        let (train, test) = generate(&cfg).unwrap();
        assert_ne!(train.x, test.x);
    }
}
