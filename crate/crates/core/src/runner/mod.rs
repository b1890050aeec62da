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

//! Experiment orchestration: train the privileged teacher, the input-only
//! baseline and the LUPI student, repeat over seeds or folds, and report.

mod experiment;
mod plan;
mod report;
mod settings;

pub use experiment::{
    evaluate, run_experiment, run_experiment_with, t_sweep, tabular_pooled_predictions,
    train_plain_student, train_student_lupi, train_teacher, EvalSpec, RunOptions, RunSeeds,
    TrainedTriple,
};
pub use plan::{
    base_loss_for, model_spec, output_layer, DataSource, ExperimentKind, ExperimentPlan,
    LayerTemplate, LossMode, MnistSource, PositiveClass, TabularSource, Width,
};
pub use report::{
    emit_report, emit_sweep_csv, read_report, summarize, write_report, write_sweep_csv,
    write_sweep_json, Evaluation, ExperimentReport, MetricSummary, ModelRole, ModelSummary,
    RepetitionResult, ReportFormat, Timings, SCHEMA_VERSION,
};
pub use settings::{Settings, KEYS, MNIST_FILES};
