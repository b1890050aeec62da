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
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::Task;
use crate::error::{Error, Result};
use crate::loss::{BaseLossKind, DistillConfig, MetaLossConfig};
use crate::nn::{Activation, BatchSize, LayerSpec, ModelSpec, TrainConfig};
use crate::synth::{Scenario, SynthConfig, SynthTask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Synthetic,
    Mnist,
    Tabular,
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "synthetic" => Ok(Self::Synthetic),
            "mnist" => Ok(Self::Mnist),
            "tabular" => Ok(Self::Tabular),
            other => Err(Error::Config(format!("unknown experiment `{other}`"))),
        }
    }
}

/// How the LUPI student is trained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// No teacher: the LUPI row repeats the input-only model.
    Plain,
    /// Temperature-weighted teacher/target meta-loss.
    MetaEq2,
    /// Softened distillation with a fixed λ.
    DistillEq1,
}

impl FromStr for LossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "plain" => Ok(Self::Plain),
            "eq2" | "meta" | "meta_eq2" => Ok(Self::MetaEq2),
            "eq1" | "distill" | "distill_eq1" => Ok(Self::DistillEq1),
            other => Err(Error::Config(format!(
                "unknown loss mode `{other}` (expected plain, eq1 or eq2)"
            ))),
        }
    }
}

/// Which side of the affinity cutoff counts as the positive class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositiveClass {
    /// `y < cutoff` is positive and lower predictions rank higher.
    #[default]
    Below,
    /// `y > cutoff` is positive and higher predictions rank higher.
    Above,
}

impl FromStr for PositiveClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "below" => Ok(Self::Below),
            "above" => Ok(Self::Above),
            other => Err(Error::Config(format!(
                "unknown positive class `{other}` (expected below or above)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Width {
    Fixed(usize),
    /// As wide as the model's input.
    Input,
}

/// A hidden layer whose width may depend on the input width. Written as
/// `<width>:<activation>`, e.g. `16:relu` or `input:linear`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerTemplate {
    pub width: Width,
    pub activation: Activation,
}

impl LayerTemplate {
    pub fn fixed(width: usize, activation: Activation) -> Self {
        Self {
            width: Width::Fixed(width),
            activation,
        }
    }

    pub fn resolve(&self, input_dim: usize) -> LayerSpec {
        let width = match self.width {
            Width::Fixed(w) => w,
            Width::Input => input_dim,
        };
        LayerSpec::new(width, self.activation)
    }

    /// Comma-separated templates; an empty string or `none` means no hidden layers.
    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        let s = s.trim();
        if s.is_empty() || s == "none" {
            return Ok(Vec::new());
        }
        s.split(',').map(str::parse).collect()
    }

    pub fn format_list(layers: &[Self]) -> String {
        if layers.is_empty() {
            return "none".into();
        }
        layers
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Linear => "linear",
        Activation::Relu => "relu",
        Activation::Sigmoid => "sigmoid",
        Activation::Softmax => "softmax",
    }
}

impl fmt::Display for LayerTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.width {
            Width::Fixed(w) => write!(f, "{w}:{}", activation_name(self.activation)),
            Width::Input => write!(f, "input:{}", activation_name(self.activation)),
        }
    }
}

impl FromStr for LayerTemplate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Config(format!(
                "bad layer `{s}` (expected <width|input>:<activation>)"
            ))
        };
        let (w, a) = s.trim().split_once(':').ok_or_else(bad)?;
        let width = match w.trim() {
            "input" => Width::Input,
            n => Width::Fixed(n.parse().map_err(|_| bad())?),
        };
        let activation = match a.trim() {
            "linear" => Activation::Linear,
            "relu" => Activation::Relu,
            "sigmoid" => Activation::Sigmoid,
            _ => return Err(bad()),
        };
        Ok(Self { width, activation })
    }
}

impl Serialize for LayerTemplate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LayerTemplate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MnistSource {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    pub train_n: usize,
    /// Evaluate on the first `test_n` test images only; `None` uses all.
    pub test_n: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularSource {
    pub path: PathBuf,
    pub task: Task,
    /// Threshold turning regression targets into binary labels for AUC metrics.
    pub affinity_cutoff: Option<f64>,
    pub positive: PositiveClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum DataSource {
    Synthetic(SynthConfig),
    Mnist(MnistSource),
    Tabular(TabularSource),
}

impl DataSource {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            DataSource::Synthetic(_) => ExperimentKind::Synthetic,
            DataSource::Mnist(_) => ExperimentKind::Mnist,
            DataSource::Tabular(_) => ExperimentKind::Tabular,
        }
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub source: DataSource,
    pub teacher_hidden: Vec<LayerTemplate>,
    pub student_hidden: Vec<LayerTemplate>,
    pub loss: LossMode,
    /// Temperature of the meta-loss weight.
    pub temperature: f64,
    pub distill_lambda: f64,
    pub distill_temperature: f64,
    /// Seeds inside these configs are replaced per repetition.
    pub teacher_train: TrainConfig,
    pub student_train: TrainConfig,
    pub repetitions: usize,
    pub base_seed: u64,
    /// Z-score input and privileged features with training-split statistics.
    pub standardize: bool,
}

impl ExperimentPlan {
    /// Defaults: 200/1000 split, `d = 50`, single-layer models, full-batch
    /// gradient descent (rate 0.05, 2000 epochs), 10 repetitions, `T = 0`.
    pub fn synthetic(scenario: Scenario, task: SynthTask) -> Self {
        let train = TrainConfig::full_batch(0.05, 2000);
        Self {
            source: DataSource::Synthetic(SynthConfig::new(scenario, task, 0)),
            teacher_hidden: Vec::new(),
            student_hidden: Vec::new(),
            loss: LossMode::MetaEq2,
            temperature: 0.0,
            distill_lambda: 0.5,
            distill_temperature: 1.0,
            teacher_train: train.clone(),
            student_train: train,
            repetitions: 10,
            base_seed: 0,
            standardize: true,
        }
    }

    /// Defaults: 16 then 32 ReLU units before a 10-way softmax, 500 training
    /// images, the full test set, one repetition, `T = 1`. Mini-batches of 32;
    /// the teacher trains for 100 epochs at rate 0.01, the students for 1000
    /// epochs at rate 0.05.
    pub fn mnist(
        train_images: impl Into<PathBuf>,
        train_labels: impl Into<PathBuf>,
        test_images: impl Into<PathBuf>,
        test_labels: impl Into<PathBuf>,
    ) -> Self {
        let hidden = vec![
            LayerTemplate::fixed(16, Activation::Relu),
            LayerTemplate::fixed(32, Activation::Relu),
        ];
        // a briefly trained teacher keeps informative, unsaturated outputs
        let teacher_train = TrainConfig {
            learning_rate: 0.01,
            epochs: 100,
            batch_size: BatchSize::Size(32),
            seed: 0,
        };
        let student_train = TrainConfig {
            learning_rate: 0.05,
            epochs: 1000,
            batch_size: BatchSize::Size(32),
            seed: 0,
        };
        Self {
            source: DataSource::Mnist(MnistSource {
                train_images: train_images.into(),
                train_labels: train_labels.into(),
                test_images: test_images.into(),
                test_labels: test_labels.into(),
                train_n: 500,
                test_n: None,
            }),
            teacher_hidden: hidden.clone(),
            student_hidden: hidden,
            loss: LossMode::MetaEq2,
            temperature: 1.0,
            distill_lambda: 0.5,
            distill_temperature: 2.0,
            teacher_train,
            student_train,
            repetitions: 1,
            base_seed: 0,
            standardize: false,
        }
    }

    /// Defaults: one linear hidden layer as wide as the input, full-batch
    /// gradient descent (rate 0.01, 500 epochs), `T = 0`.
    pub fn tabular(path: impl Into<PathBuf>, task: Task, affinity_cutoff: Option<f64>) -> Self {
        let hidden = vec![LayerTemplate {
            width: Width::Input,
            activation: Activation::Linear,
        }];
        let train = TrainConfig::full_batch(0.01, 500);
        Self {
            source: DataSource::Tabular(TabularSource {
                path: path.into(),
                task,
                affinity_cutoff,
                positive: PositiveClass::Below,
            }),
            teacher_hidden: hidden.clone(),
            student_hidden: hidden,
            loss: LossMode::MetaEq2,
            temperature: 0.0,
            distill_lambda: 0.5,
            distill_temperature: 1.0,
            teacher_train: train.clone(),
            student_train: train,
            repetitions: 1,
            base_seed: 0,
            standardize: true,
        }
    }

    pub fn kind(&self) -> ExperimentKind {
        self.source.kind()
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        for (who, cfg) in [
            ("teacher", &self.teacher_train),
            ("student", &self.student_train),
        ] {
            if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
                return Err(Error::Config(format!(
                    "{who} learning rate must be positive, got {}",
                    cfg.learning_rate
                )));
            }
        }
        for layer in self.teacher_hidden.iter().chain(&self.student_hidden) {
            if layer.width == Width::Fixed(0) {
                return Err(Error::Config("hidden layers need a positive width".into()));
            }
        }
        match self.loss {
            LossMode::MetaEq2 => {
                MetaLossConfig::new(self.temperature, BaseLossKind::Mse).validate()?
            }
            LossMode::DistillEq1 => {
                if self.task() == Task::Regression {
                    return Err(Error::UnsupportedMode(
                        "softened distillation (eq1) needs a classification task".into(),
                    ));
                }
                DistillConfig {
                    lambda: self.distill_lambda,
                    temperature: self.distill_temperature,
                    base_loss: BaseLossKind::Bce,
                }
                .validate()?
            }
            LossMode::Plain => {}
        }
        match &self.source {
            DataSource::Synthetic(cfg) => cfg.validate()?,
            DataSource::Mnist(m) => {
                if m.train_n == 0 {
                    return Err(Error::Config("train_n must be at least 1".into()));
                }
                if m.test_n == Some(0) {
                    return Err(Error::Config("test_n must be at least 1".into()));
                }
            }
            DataSource::Tabular(t) => {
                if let Some(c) = t.affinity_cutoff {
                    if !c.is_finite() {
                        return Err(Error::Config("affinity cutoff must be finite".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn task(&self) -> Task {
        match &self.source {
            DataSource::Synthetic(cfg) => cfg.task.dataset_task(),
            DataSource::Mnist(_) => Task::Classification,
            DataSource::Tabular(t) => t.task,
        }
    }

    pub fn meta_config(&self, base_loss: BaseLossKind) -> MetaLossConfig {
        MetaLossConfig::new(self.temperature, base_loss)
    }

    pub fn distill_config(&self, base_loss: BaseLossKind) -> DistillConfig {
        DistillConfig {
            lambda: self.distill_lambda,
            temperature: self.distill_temperature,
            base_loss,
        }
    }
}

/// Loss used for a task with `target_dim` target columns.
pub fn base_loss_for(task: Task, target_dim: usize) -> BaseLossKind {
    match (task, target_dim) {
        (Task::Regression, _) => BaseLossKind::Mse,
        (Task::Classification, 1) => BaseLossKind::Bce,
        (Task::Classification, _) => BaseLossKind::CrossEntropy,
    }
}

/// Output layer matching a task: sigmoid for one binary column, softmax for
/// one-hot classes, linear for regression.
pub fn output_layer(task: Task, target_dim: usize) -> LayerSpec {
    let activation = match (task, target_dim) {
        (Task::Regression, _) => Activation::Linear,
        (Task::Classification, 1) => Activation::Sigmoid,
        (Task::Classification, _) => Activation::Softmax,
    };
    LayerSpec::new(target_dim, activation)
}

pub fn model_spec(
    input_dim: usize,
    hidden: &[LayerTemplate],
    task: Task,
    target_dim: usize,
    seed: u64,
) -> ModelSpec {
    let mut layers: Vec<LayerSpec> = hidden.iter().map(|h| h.resolve(input_dim)).collect();
    layers.push(output_layer(task, target_dim));
    ModelSpec::new(input_dim, layers, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_templates_parse_and_print() {
        let l = LayerTemplate::parse_list("16:relu, 32:relu").unwrap();
        assert_eq!(l.len(), 2);
        assert_eq!(LayerTemplate::format_list(&l), "16:relu,32:relu");
        let l = LayerTemplate::parse_list("input:linear").unwrap();
        assert_eq!(l[0].resolve(800).width, 800);
        assert!(LayerTemplate::parse_list("none").unwrap().is_empty());
        assert!("16".parse::<LayerTemplate>().is_err());
        assert!("16:softmax".parse::<LayerTemplate>().is_err());
        assert!("x:relu".parse::<LayerTemplate>().is_err());
    }

    #[test]
    fn eq1_rejects_regression() {
        let mut plan = ExperimentPlan::synthetic(Scenario::CleanLabels, SynthTask::Regression);
        plan.loss = LossMode::DistillEq1;
        assert!(matches!(plan.validate(), Err(Error::UnsupportedMode(_))));
        plan.source = DataSource::Synthetic(SynthConfig::new(
            Scenario::CleanLabels,
            SynthTask::Classification,
            0,
        ));
        plan.validate().unwrap();
    }

    #[test]
    fn plan_validation() {
        let mut plan = ExperimentPlan::synthetic(Scenario::CleanLabels, SynthTask::Regression);
        plan.validate().unwrap();
        plan.repetitions = 0;
        assert!(plan.validate().is_err());
        plan.repetitions = 1;
        plan.temperature = -1.0;
        assert!(matches!(plan.validate(), Err(Error::Domain(_))));
        plan.temperature = 0.0;
        plan.student_train.learning_rate = 0.0;
        assert!(plan.validate().is_err());
    }

    #[test]
    fn output_layers_follow_task() {
        assert_eq!(
            output_layer(Task::Classification, 1).activation,
            Activation::Sigmoid
        );
        assert_eq!(
            output_layer(Task::Classification, 10).activation,
            Activation::Softmax
        );
        assert_eq!(
            output_layer(Task::Regression, 1).activation,
            Activation::Linear
        );
        assert_eq!(
            base_loss_for(Task::Classification, 10),
            BaseLossKind::CrossEntropy
        );
    }

    #[test]
    fn plan_json_round_trip() {
        let plan = ExperimentPlan::tabular("x.csv", Task::Regression, Some(-10.86));
        let json = serde_json::to_string(&plan).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentPlan>(&json).unwrap(), plan);
    }
}
