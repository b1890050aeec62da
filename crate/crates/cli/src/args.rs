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

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use lupi_core::runner::{ExperimentKind, Settings};
use lupi_core::{Scenario, SynthConfig, SynthTask};

/// Train a privileged teacher, an input-only baseline and a LUPI student,
/// and report their test metrics.
#[derive(Debug, Parser)]
#[command(name = "lupi", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthetic benchmark scenarios.
    Synthetic(SyntheticArgs),
    /// MNIST with 7x7 inputs and 28x28 privileged images.
    Mnist(MnistArgs),
    /// Precomputed features from a CSV, scored with leave-one-group-out.
    Tabular(TabularArgs),
    /// Repeat an experiment over meta-loss temperatures.
    Sweep(SweepArgs),
    /// Write a grouped synthetic table in the tabular CSV layout.
    GenTabular(GenTabularArgs),
}

/// Flags shared by every experiment. Unset flags fall back to the plan file,
/// then to the experiment defaults.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// `key = value` plan file; flags given here override it.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Task: classification, regression or binary_regression (synthetic);
    /// regression or classification (tabular).
    #[arg(long)]
    pub task: Option<String>,
    /// LUPI student loss: plain, eq1 (softened distillation) or eq2 (meta-loss).
    #[arg(long)]
    pub loss: Option<String>,
    /// Meta-loss temperature.
    #[arg(long = "T")]
    pub temperature: Option<f64>,
    /// Distillation weight on the softened teacher.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Distillation softening temperature.
    #[arg(long = "distill-T")]
    pub distill_temperature: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Base seed; repetition r uses seed + r.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Mini-batch size or `full`.
    #[arg(long)]
    pub batch: Option<String>,
    #[arg(long)]
    pub teacher_epochs: Option<usize>,
    #[arg(long)]
    pub teacher_lr: Option<f64>,
    #[arg(long)]
    pub teacher_batch: Option<String>,
    /// Hidden layers for both models, e.g. `16:relu,32:relu` or `none`.
    #[arg(long)]
    pub hidden: Option<String>,
    #[arg(long)]
    pub teacher_hidden: Option<String>,
    #[arg(long)]
    pub student_hidden: Option<String>,
    /// Z-score features with training statistics (true or false).
    #[arg(long)]
    pub standardize: Option<bool>,
    #[arg(long)]
    pub train_n: Option<usize>,
    #[arg(long)]
    pub test_n: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// json or csv.
    #[arg(long)]
    pub format: Option<String>,
    /// Include wall-clock seconds per phase in the report.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// clean_labels, clean_features, relevant_features or sample_dependent.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Input dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Privileged dimension.
    #[arg(long)]
    pub d_star: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IdxArgs {
    /// Directory holding the four standard MNIST IDX files.
    #[arg(long)]
    pub mnist_dir: Option<PathBuf>,
    #[arg(long)]
    pub idx_images: Option<PathBuf>,
    #[arg(long)]
    pub idx_labels: Option<PathBuf>,
    #[arg(long)]
    pub idx_test_images: Option<PathBuf>,
    #[arg(long)]
    pub idx_test_labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CsvArgs {
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Targets beyond this value count as positives for the AUC metrics.
    #[arg(long, allow_hyphen_values = true)]
    pub affinity_cutoff: Option<f64>,
    /// Which side of the cutoff is positive: below or above.
    #[arg(long)]
    pub positive: Option<String>,
}

#[derive(Debug, Args)]
pub struct SyntheticArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub synth: SynthArgs,
}

#[derive(Debug, Args)]
pub struct MnistArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub idx: IdxArgs,
}

#[derive(Debug, Args)]
pub struct TabularArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// synthetic (default), mnist or tabular.
    #[arg(long)]
    pub experiment: Option<String>,
    /// Comma-separated non-negative temperatures.
    #[arg(long)]
    pub t_values: Option<String>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub synth: SynthArgs,
    #[command(flatten)]
    pub idx: IdxArgs,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Args)]
pub struct GenTabularArgs {
    #[arg(long, default_value = "relevant_features")]
    pub scenario: String,
    #[arg(long, default_value = "binary_regression")]
    pub task: String,
    /// Number of rows.
    #[arg(long, default_value_t = 200)]
    pub rows: usize,
    #[arg(long, default_value_t = 10)]
    pub groups: usize,
    #[arg(long, default_value_t = 50)]
    pub d: usize,
    #[arg(long, default_value_t = 3)]
    pub d_star: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

impl GenTabularArgs {
    pub fn synth_config(&self) -> Result<SynthConfig> {
        let scenario: Scenario = self.scenario.parse()?;
        let task: SynthTask = self.task.parse()?;
        let mut cfg = SynthConfig::new(scenario, task, self.seed);
        cfg.n_train = self.rows;
        cfg.d = self.d;
        cfg.d_star = self.d_star;
        Ok(cfg)
    }
}

impl CommonArgs {
    fn fill(&self, s: &mut Settings) -> Result<()> {
        s.set_opt("task", self.task.as_ref())?;
        s.set_opt("loss", self.loss.as_ref())?;
        s.set_opt("T", self.temperature)?;
        s.set_opt("lambda", self.lambda)?;
        s.set_opt("distill-T", self.distill_temperature)?;
        s.set_opt("reps", self.reps)?;
        s.set_opt("seed", self.seed)?;
        s.set_opt("epochs", self.epochs)?;
        s.set_opt("lr", self.lr)?;
        s.set_opt("batch", self.batch.as_ref())?;
        s.set_opt("teacher-epochs", self.teacher_epochs)?;
        s.set_opt("teacher-lr", self.teacher_lr)?;
        s.set_opt("teacher-batch", self.teacher_batch.as_ref())?;
        s.set_opt("hidden", self.hidden.as_ref())?;
        s.set_opt("teacher-hidden", self.teacher_hidden.as_ref())?;
        s.set_opt("student-hidden", self.student_hidden.as_ref())?;
        s.set_opt("standardize", self.standardize)?;
        s.set_opt("train-n", self.train_n)?;
        s.set_opt("test-n", self.test_n)?;
        s.set_opt("out", self.out.as_ref().map(|p| p.display()))?;
        s.set_opt("format", self.format.as_ref())?;
        if self.timings {
            s.set("timings", "true")?;
        }
        Ok(())
    }
}

impl SynthArgs {
    fn fill(&self, s: &mut Settings) -> Result<()> {
        s.set_opt("scenario", self.scenario.as_ref())?;
        s.set_opt("d", self.d)?;
        s.set_opt("d-star", self.d_star)?;
        Ok(())
    }
}

impl IdxArgs {
    fn fill(&self, s: &mut Settings) -> Result<()> {
        s.set_opt("mnist-dir", self.mnist_dir.as_ref().map(|p| p.display()))?;
        s.set_opt("idx-images", self.idx_images.as_ref().map(|p| p.display()))?;
        s.set_opt("idx-labels", self.idx_labels.as_ref().map(|p| p.display()))?;
        s.set_opt(
            "idx-test-images",
            self.idx_test_images.as_ref().map(|p| p.display()),
        )?;
        s.set_opt(
            "idx-test-labels",
            self.idx_test_labels.as_ref().map(|p| p.display()),
        )?;
        Ok(())
    }
}

impl CsvArgs {
    fn fill(&self, s: &mut Settings) -> Result<()> {
        s.set_opt("csv", self.csv.as_ref().map(|p| p.display()))?;
        s.set_opt("affinity-cutoff", self.affinity_cutoff)?;
        s.set_opt("positive", self.positive.as_ref())?;
        Ok(())
    }
}

impl SweepArgs {
    pub fn settings(&self) -> Result<Settings> {
        let mut s = Settings::new();
        s.set_opt("experiment", self.experiment.as_ref())?;
        s.set_opt("t-values", self.t_values.as_ref())?;
        self.common.fill(&mut s)?;
        self.synth.fill(&mut s)?;
        self.idx.fill(&mut s)?;
        self.csv.fill(&mut s)?;
        Ok(s)
    }
}

impl Command {
    /// Experiment kind, shared flags and the flag-derived settings of a
    /// single-experiment subcommand.
    pub fn experiment_settings(&self) -> Result<(ExperimentKind, &CommonArgs, Settings)> {
        let mut s = Settings::new();
        let (kind, common) = match self {
            Command::Synthetic(a) => {
                a.synth.fill(&mut s)?;
                (ExperimentKind::Synthetic, &a.common)
            }
            Command::Mnist(a) => {
                a.idx.fill(&mut s)?;
                (ExperimentKind::Mnist, &a.common)
            }
            Command::Tabular(a) => {
                a.csv.fill(&mut s)?;
                (ExperimentKind::Tabular, &a.common)
            }
            Command::Sweep(_) | Command::GenTabular(_) => {
                anyhow::bail!("not a single-experiment subcommand")
            }
        };
        common.fill(&mut s)?;
        Ok((kind, common, s))
    }
}
