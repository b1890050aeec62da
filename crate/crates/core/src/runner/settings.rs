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

//! Flat `key = value` experiment settings.
//!
//! Keys are the long command-line flag names without the leading dashes
//! (`lr`, `train-n`, `affinity-cutoff`, ...). Blank lines and lines starting
//! with `#` are ignored. Later sources override earlier ones, so a plan file
//! loaded first and command-line flags merged on top gives flags priority.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dataset::Task;
use crate::error::{Error, Result};
use crate::nn::BatchSize;
use crate::synth::{Scenario, SynthTask};

use super::plan::{
    DataSource, ExperimentKind, ExperimentPlan, LayerTemplate, LossMode, PositiveClass,
};
use super::report::ReportFormat;

/// Every recognised key.
pub const KEYS: &[&str] = &[
    "experiment",
    "scenario",
    "task",
    "loss",
    "T",
    "lambda",
    "distill-T",
    "reps",
    "seed",
    "epochs",
    "lr",
    "batch",
    "teacher-epochs",
    "teacher-lr",
    "teacher-batch",
    "hidden",
    "teacher-hidden",
    "student-hidden",
    "standardize",
    "train-n",
    "test-n",
    "d",
    "d-star",
    "mnist-dir",
    "idx-images",
    "idx-labels",
    "idx-test-images",
    "idx-test-labels",
    "csv",
    "affinity-cutoff",
    "positive",
    "t-values",
    "out",
    "format",
    "timings",
];

/// Standard MNIST file names inside a `mnist-dir`.
pub const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn normalize_key(raw: &str) -> Result<String> {
    let key = raw.trim().trim_start_matches("--").replace('_', "-");
    match KEYS.iter().find(|k| k.eq_ignore_ascii_case(&key)) {
        // `T` and `t-values` differ only in more than case, so a
        // case-insensitive match is unambiguous
        Some(k) => Ok((*k).to_string()),
        None => Err(Error::Config(format!("unknown setting `{}`", raw.trim()))),
    }
}

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key = value` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    i + 1
                ))
            })?;
            s.set(k, v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        self.values.insert(normalize_key(key)?, value.into());
        Ok(())
    }

    /// Sets `key` only when `value` is present.
    pub fn set_opt<V: Display>(&mut self, key: &str, value: Option<V>) -> Result<()> {
        match value {
            Some(v) => self.set(key, v.to_string()),
            None => Ok(()),
        }
    }

    /// `self` overridden by every value in `overrides`.
    pub fn merged(mut self, overrides: &Settings) -> Self {
        for (k, v) in &overrides.values {
            self.values.insert(k.clone(), v.clone());
        }
        self
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|e| Error::Config(format!("bad value `{v}` for `{key}`: {e}"))),
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.raw(key).map(str::trim) {
            None => Ok(false),
            Some("true" | "yes" | "1" | "on") => Ok(true),
            Some("false" | "no" | "0" | "off") => Ok(false),
            Some(v) => Err(Error::Config(format!(
                "bad value `{v}` for `{key}`: expected true or false"
            ))),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(|v| PathBuf::from(v.trim()))
    }

    fn require_path(&self, key: &str, context: &str) -> Result<PathBuf> {
        self.path(key)
            .ok_or_else(|| Error::Config(format!("{context} needs `--{key}`")))
    }

    pub fn format(&self) -> Result<ReportFormat> {
        Ok(self.get("format")?.unwrap_or_default())
    }

    /// Comma-separated temperatures for a sweep.
    pub fn t_values(&self) -> Result<Vec<f64>> {
        let raw = self
            .raw("t-values")
            .ok_or_else(|| Error::Config("a sweep needs `--t-values`".into()))?;
        raw.split(',')
            .map(|v| {
                v.trim().parse::<f64>().map_err(|_| {
                    Error::Config(format!("bad temperature `{}` in `t-values`", v.trim()))
                })
            })
            .collect()
    }

    fn layers(&self, key: &str) -> Result<Option<Vec<LayerTemplate>>> {
        self.raw(key).map(LayerTemplate::parse_list).transpose()
    }

    /// Builds a plan: the defaults for `kind`, then every setting applied.
    pub fn to_plan(&self, kind: ExperimentKind) -> Result<ExperimentPlan> {
        let mut plan = match kind {
            ExperimentKind::Synthetic => {
                let scenario = self
                    .get::<Scenario>("scenario")?
                    .unwrap_or(Scenario::CleanLabels);
                let task = self
                    .get::<SynthTask>("task")?
                    .unwrap_or(SynthTask::Classification);
                let mut plan = ExperimentPlan::synthetic(scenario, task);
                if let DataSource::Synthetic(cfg) = &mut plan.source {
                    if let Some(n) = self.get("train-n")? {
                        cfg.n_train = n;
                    }
                    if let Some(n) = self.get("test-n")? {
                        cfg.n_test = n;
                    }
                    if let Some(d) = self.get("d")? {
                        cfg.d = d;
                    }
                    if let Some(d) = self.get("d-star")? {
                        cfg.d_star = d;
                    }
                }
                plan
            }
            ExperimentKind::Mnist => {
                let dir = self.path("mnist-dir");
                let pick = |key: &str, file: &str| -> Result<PathBuf> {
                    match (self.path(key), &dir) {
                        (Some(p), _) => Ok(p),
                        (None, Some(d)) => Ok(d.join(file)),
                        (None, None) => self.require_path(key, "the mnist experiment"),
                    }
                };
                let mut plan = ExperimentPlan::mnist(
                    pick("idx-images", MNIST_FILES[0])?,
                    pick("idx-labels", MNIST_FILES[1])?,
                    pick("idx-test-images", MNIST_FILES[2])?,
                    pick("idx-test-labels", MNIST_FILES[3])?,
                );
                if let DataSource::Mnist(m) = &mut plan.source {
                    if let Some(n) = self.get("train-n")? {
                        m.train_n = n;
                    }
                    m.test_n = self.get("test-n")?;
                }
                plan
            }
            ExperimentKind::Tabular => {
                let path = self.require_path("csv", "the tabular experiment")?;
                let task = match self.raw("task").map(str::trim) {
                    None | Some("regression") => Task::Regression,
                    Some("classification") => Task::Classification,
                    Some(other) => {
                        return Err(Error::Config(format!(
                            "unknown tabular task `{other}` (expected regression or classification)"
                        )))
                    }
                };
                let mut plan = ExperimentPlan::tabular(path, task, self.get("affinity-cutoff")?);
                if let DataSource::Tabular(t) = &mut plan.source {
                    t.positive = self.get::<PositiveClass>("positive")?.unwrap_or_default();
                }
                plan
            }
        };

        if let Some(loss) = self.get::<LossMode>("loss")? {
            plan.loss = loss;
        }
        if let Some(t) = self.get("T")? {
            plan.temperature = t;
        }
        if let Some(l) = self.get("lambda")? {
            plan.distill_lambda = l;
        }
        if let Some(t) = self.get("distill-T")? {
            plan.distill_temperature = t;
        }
        if let Some(r) = self.get("reps")? {
            plan.repetitions = r;
        }
        if let Some(s) = self.get("seed")? {
            plan.base_seed = s;
        }
        if let Some(e) = self.get::<usize>("epochs")? {
            plan.student_train.epochs = e;
            plan.teacher_train.epochs = e;
        }
        if let Some(lr) = self.get::<f64>("lr")? {
            plan.student_train.learning_rate = lr;
            plan.teacher_train.learning_rate = lr;
        }
        if let Some(b) = self.get::<BatchSize>("batch")? {
            plan.student_train.batch_size = b;
            plan.teacher_train.batch_size = b;
        }
        if let Some(e) = self.get("teacher-epochs")? {
            plan.teacher_train.epochs = e;
        }
        if let Some(lr) = self.get("teacher-lr")? {
            plan.teacher_train.learning_rate = lr;
        }
        if let Some(b) = self.get("teacher-batch")? {
            plan.teacher_train.batch_size = b;
        }
        if let Some(h) = self.layers("hidden")? {
            plan.teacher_hidden = h.clone();
            plan.student_hidden = h;
        }
        if let Some(h) = self.layers("teacher-hidden")? {
            plan.teacher_hidden = h;
        }
        if let Some(h) = self.layers("student-hidden")? {
            plan.student_hidden = h;
        }
        if self.raw("standardize").is_some() {
            plan.standardize = self.flag("standardize")?;
        }
        plan.validate()?;
        Ok(plan)
    }
}
