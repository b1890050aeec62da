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

use std::borrow::Cow;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::data::{
    downscale_4x4, load_tabular, loocv_splits, read_idx_images, read_idx_labels, subsample_indices,
    IdxImageSet, Standardizer,
};
use crate::dataset::{class_labels, one_hot, LupiDataset, Task};
use crate::error::{Error, Result};
use crate::loss::{
    base_loss, softened_distill_loss_with_soft_targets, softened_teacher, transfer_weights,
    weighted_meta_loss, BaseLossKind,
};
use crate::metrics::{accuracy, auc_pr, auc_roc, rmse, spearman, MetricReport};
use crate::nn::{self, init_model, Head, Model, TrainConfig};
use crate::synth::generate;
use crate::tensor::Tensor2D;

use super::plan::{
    base_loss_for, model_spec, DataSource, ExperimentPlan, LossMode, MnistSource, PositiveClass,
    TabularSource,
};
use super::report::{Evaluation, ExperimentReport, RepetitionResult, Timings};

/// Seeds for one repetition or fold. Data is drawn from `data`; model
/// initialisation and batch shuffling get their own streams. The plain and
/// LUPI students share theirs, so with no teacher signal they coincide.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunSeeds {
    pub data: u64,
    pub teacher_init: u64,
    pub teacher_shuffle: u64,
    pub student_init: u64,
    pub student_shuffle: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RunSeeds {
    /// Seeds for unit `index`, all derived from `base_seed + index`.
    pub fn derive(base_seed: u64, index: usize) -> Self {
        let data = base_seed.wrapping_add(index as u64);
        let sub = |tag: u64| splitmix64(data ^ tag.wrapping_mul(0xA076_1D64_78BD_642F));
        Self {
            data,
            teacher_init: sub(1),
            teacher_shuffle: sub(2),
            student_init: sub(3),
            student_shuffle: sub(4),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record wall-clock seconds per phase. Off by default because timings
    /// make otherwise identical reports differ.
    pub timings: bool,
}

fn rows_of<'a>(t: &'a Tensor2D, rows: &[usize]) -> Cow<'a, Tensor2D> {
    if rows.len() == t.rows() && rows.iter().enumerate().all(|(i, &r)| i == r) {
        Cow::Borrowed(t)
    } else {
        Cow::Owned(t.select_rows(rows))
    }
}

fn with_seed(cfg: &TrainConfig, seed: u64) -> TrainConfig {
    TrainConfig {
        seed,
        ..cfg.clone()
    }
}

fn base_loss_of(train: &LupiDataset) -> BaseLossKind {
    base_loss_for(train.task, train.target_dim())
}

fn fit_plain(
    inputs: &Tensor2D,
    targets: &Tensor2D,
    model: Model,
    cfg: &TrainConfig,
    kind: BaseLossKind,
) -> Result<Model> {
    let run = nn::train(model, inputs, cfg, Head::Output, |out, rows| {
        let l = base_loss(kind, &rows_of(targets, rows), out)?;
        Ok((l.value, l.grad))
    })?;
    Ok(run.model)
}

/// Teacher on `(X*, y)` with the plain base loss.
pub fn train_teacher(
    plan: &ExperimentPlan,
    train: &LupiDataset,
    seeds: &RunSeeds,
) -> Result<Model> {
    if train.privileged_dim() == 0 {
        return Err(Error::Config(
            "the teacher needs privileged features".into(),
        ));
    }
    let spec = model_spec(
        train.privileged_dim(),
        &plan.teacher_hidden,
        train.task,
        train.target_dim(),
        seeds.teacher_init,
    );
    let cfg = with_seed(&plan.teacher_train, seeds.teacher_shuffle);
    fit_plain(
        &train.x_star,
        &train.y,
        init_model(&spec)?,
        &cfg,
        base_loss_of(train),
    )
}

fn student_init(plan: &ExperimentPlan, train: &LupiDataset, seeds: &RunSeeds) -> Result<Model> {
    let spec = model_spec(
        train.input_dim(),
        &plan.student_hidden,
        train.task,
        train.target_dim(),
        seeds.student_init,
    );
    init_model(&spec)
}

/// Input-only student on `(X, y)` with the plain base loss.
pub fn train_plain_student(
    plan: &ExperimentPlan,
    train: &LupiDataset,
    seeds: &RunSeeds,
) -> Result<Model> {
    let cfg = with_seed(&plan.student_train, seeds.student_shuffle);
    fit_plain(
        &train.x,
        &train.y,
        student_init(plan, train, seeds)?,
        &cfg,
        base_loss_of(train),
    )
}

/// Student on `X` guided by a trained teacher. The teacher's outputs on
/// `X*` are computed once and stay fixed during training.
pub fn train_student_lupi(
    plan: &ExperimentPlan,
    train: &LupiDataset,
    teacher: &Model,
    seeds: &RunSeeds,
) -> Result<Model> {
    let kind = base_loss_of(train);
    let cfg = with_seed(&plan.student_train, seeds.student_shuffle);
    let model = student_init(plan, train, seeds)?;
    match plan.loss {
        LossMode::Plain => fit_plain(&train.x, &train.y, model, &cfg, kind),
        LossMode::MetaEq2 => {
            let teacher_out = teacher.forward(&train.x_star)?;
            let weights = transfer_weights(&plan.meta_config(kind), &teacher_out, &train.y)?;
            let run = nn::train(model, &train.x, &cfg, Head::Output, |out, rows| {
                let w: Vec<f64> = rows.iter().map(|&r| weights[r]).collect();
                let l = weighted_meta_loss(
                    kind,
                    &w,
                    out,
                    &rows_of(&teacher_out, rows),
                    &rows_of(&train.y, rows),
                )?;
                Ok((l.value, l.grad))
            })?;
            Ok(run.model)
        }
        LossMode::DistillEq1 => {
            if train.task != Task::Classification {
                return Err(Error::UnsupportedMode(
                    "softened distillation (eq1) needs a classification task".into(),
                ));
            }
            let dcfg = plan.distill_config(kind);
            let soft = softened_teacher(&dcfg, &teacher.forward_logits(&train.x_star)?)?;
            let run = nn::train(model, &train.x, &cfg, Head::Logits, |logits, rows| {
                let l = softened_distill_loss_with_soft_targets(
                    &dcfg,
                    logits,
                    &rows_of(&soft, rows),
                    &rows_of(&train.y, rows),
                )?;
                Ok((l.value, l.grad))
            })?;
            Ok(run.model)
        }
    }
}

/// How predictions are scored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalSpec {
    pub task: Task,
    /// Ranking metrics (Spearman, AUCs) for single-column regression.
    pub ranking: bool,
    pub cutoff: Option<f64>,
    pub positive: PositiveClass,
}

impl EvalSpec {
    pub fn basic(task: Task) -> Self {
        Self {
            task,
            ranking: false,
            cutoff: None,
            positive: PositiveClass::Below,
        }
    }
}

/// Scores predictions against targets. Metrics that are undefined for the
/// data (a constant vector, a single class) are left absent.
pub fn evaluate(
    spec: &EvalSpec,
    predictions: &Tensor2D,
    targets: &Tensor2D,
) -> Result<MetricReport> {
    if predictions.shape() != targets.shape() {
        return Err(Error::shape(
            "evaluate",
            format!("{:?}", targets.shape()),
            format!("{:?}", predictions.shape()),
        ));
    }
    let defined = |r: Result<f64>| match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    };
    let mut report = MetricReport::default();
    match spec.task {
        Task::Classification => {
            report.accuracy = Some(accuracy(
                &class_labels(targets),
                &class_labels(predictions),
            )?);
            if spec.ranking && targets.cols() == 1 {
                let (y, p) = (targets.col(0), predictions.col(0));
                report.auc_roc = defined(auc_roc(&y, &p))?;
                report.auc_pr = defined(auc_pr(&y, &p))?;
            }
        }
        Task::Regression => {
            report.rmse = Some(rmse(targets.data(), predictions.data())?);
            if spec.ranking && targets.cols() == 1 {
                let (y, p) = (targets.col(0), predictions.col(0));
                report.spearman = defined(spearman(&y, &p))?;
                if let Some(cut) = spec.cutoff {
                    let (labels, scores): (Vec<f64>, Vec<f64>) = match spec.positive {
                        PositiveClass::Below => y
                            .iter()
                            .zip(&p)
                            .map(|(&t, &s)| (f64::from(u8::from(t < cut)), -s))
                            .unzip(),
                        PositiveClass::Above => y
                            .iter()
                            .zip(&p)
                            .map(|(&t, &s)| (f64::from(u8::from(t > cut)), s))
                            .unzip(),
                    };
                    report.auc_roc = defined(auc_roc(&labels, &scores))?;
                    report.auc_pr = defined(auc_pr(&labels, &scores))?;
                }
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, Default)]
struct PhaseTimes {
    data: Duration,
    teacher: Duration,
    input: Duration,
    lupi: Duration,
    evaluation: Duration,
}

impl PhaseTimes {
    fn add(&mut self, o: &PhaseTimes) {
        self.data += o.data;
        self.teacher += o.teacher;
        self.input += o.input;
        self.lupi += o.lupi;
        self.evaluation += o.evaluation;
    }

    fn into_timings(self) -> Timings {
        Timings {
            data_seconds: self.data.as_secs_f64(),
            teacher_seconds: self.teacher.as_secs_f64(),
            input_seconds: self.input.as_secs_f64(),
            lupi_seconds: self.lupi.as_secs_f64(),
            evaluation_seconds: self.evaluation.as_secs_f64(),
        }
    }
}

fn timed<T>(slot: &mut Duration, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f();
    *slot += start.elapsed();
    out
}

/// The three trained models of one repetition or fold.
#[derive(Clone, Debug)]
pub struct TrainedTriple {
    pub teacher: Model,
    pub input: Model,
    pub lupi: Model,
}

fn standardized(train: &LupiDataset, test: &LupiDataset) -> (LupiDataset, LupiDataset) {
    let sx = Standardizer::fit(&train.x);
    let sp = Standardizer::fit(&train.x_star);
    let apply = |d: &LupiDataset| LupiDataset {
        x: sx.apply(&d.x),
        x_star: sp.apply(&d.x_star),
        y: d.y.clone(),
        task: d.task,
    };
    (apply(train), apply(test))
}

fn train_triple(
    plan: &ExperimentPlan,
    train: &LupiDataset,
    seeds: &RunSeeds,
    times: &mut PhaseTimes,
) -> Result<TrainedTriple> {
    let teacher = timed(&mut times.teacher, || train_teacher(plan, train, seeds))?;
    let input = timed(&mut times.input, || train_plain_student(plan, train, seeds))?;
    let lupi = timed(&mut times.lupi, || match plan.loss {
        // identical by construction; skip the duplicate run
        LossMode::Plain => Ok(input.clone()),
        _ => train_student_lupi(plan, train, &teacher, seeds),
    })?;
    Ok(TrainedTriple {
        teacher,
        input,
        lupi,
    })
}

struct Predictions {
    teacher: Tensor2D,
    input: Tensor2D,
    lupi: Tensor2D,
}

fn predict(models: &TrainedTriple, test: &LupiDataset) -> Result<Predictions> {
    Ok(Predictions {
        teacher: models.teacher.forward(&test.x_star)?,
        input: models.input.forward(&test.x)?,
        lupi: models.lupi.forward(&test.x)?,
    })
}

fn score(spec: &EvalSpec, preds: &Predictions, targets: &Tensor2D) -> Result<[MetricReport; 3]> {
    Ok([
        evaluate(spec, &preds.teacher, targets)?,
        evaluate(spec, &preds.input, targets)?,
        evaluate(spec, &preds.lupi, targets)?,
    ])
}

fn run_split(
    plan: &ExperimentPlan,
    index: usize,
    seeds: RunSeeds,
    train: LupiDataset,
    test: LupiDataset,
    mut times: PhaseTimes,
) -> Result<(RepetitionResult, PhaseTimes)> {
    let (train, test) = if plan.standardize {
        standardized(&train, &test)
    } else {
        (train, test)
    };
    let models = train_triple(plan, &train, &seeds, &mut times)?;
    let spec = EvalSpec::basic(train.task);
    let [privileged, input, lupi] = timed(&mut times.evaluation, || {
        score(&spec, &predict(&models, &test)?, &test.y)
    })?;
    Ok((
        RepetitionResult {
            index,
            seed: seeds.data,
            privileged,
            input,
            lupi,
        },
        times,
    ))
}

fn synthetic_unit(
    plan: &ExperimentPlan,
    cfg: &crate::synth::SynthConfig,
    index: usize,
) -> Result<(RepetitionResult, PhaseTimes)> {
    let seeds = RunSeeds::derive(plan.base_seed, index);
    let mut times = PhaseTimes::default();
    let (train, test) = timed(&mut times.data, || {
        generate(&crate::synth::SynthConfig {
            seed: seeds.data,
            ..cfg.clone()
        })
    })?;
    run_split(plan, index, seeds, train, test, times)
}

struct MnistData {
    train_images: IdxImageSet,
    train_labels: Vec<u8>,
    test: LupiDataset,
}

fn check_counts(images: &IdxImageSet, labels: &[u8], labels_path: &Path) -> Result<()> {
    if images.count != labels.len() {
        return Err(Error::Format {
            path: labels_path.into(),
            message: format!("{} labels for {} images", labels.len(), images.count),
        });
    }
    if images.rows != 28 || images.cols != 28 {
        return Err(Error::Format {
            path: labels_path.into(),
            message: format!(
                "expected 28x28 images, found {}x{}",
                images.rows, images.cols
            ),
        });
    }
    Ok(())
}

fn mnist_pair(images: &IdxImageSet, labels: &[u8], rows: &[usize]) -> Result<LupiDataset> {
    let full = images.select_to_tensor(rows);
    let small = downscale_4x4(&full)?;
    let classes: Vec<usize> = rows.iter().map(|&i| usize::from(labels[i])).collect();
    if let Some(&bad) = classes.iter().find(|&&c| c > 9) {
        return Err(Error::Domain(format!("digit label {bad} is outside 0..=9")));
    }
    LupiDataset::new(small, full, one_hot(&classes, 10)?, Task::Classification)
}

fn load_mnist(src: &MnistSource) -> Result<MnistData> {
    let train_images = read_idx_images(&src.train_images)?;
    let train_labels = read_idx_labels(&src.train_labels)?;
    check_counts(&train_images, &train_labels, &src.train_labels)?;
    let test_images = read_idx_images(&src.test_images)?;
    let test_labels = read_idx_labels(&src.test_labels)?;
    check_counts(&test_images, &test_labels, &src.test_labels)?;
    let test_n = src
        .test_n
        .unwrap_or(test_images.count)
        .min(test_images.count);
    let test_rows: Vec<usize> = (0..test_n).collect();
    let test = mnist_pair(&test_images, &test_labels, &test_rows)?;
    Ok(MnistData {
        train_images,
        train_labels,
        test,
    })
}

fn mnist_unit(
    plan: &ExperimentPlan,
    src: &MnistSource,
    data: &MnistData,
    index: usize,
) -> Result<(RepetitionResult, PhaseTimes)> {
    let seeds = RunSeeds::derive(plan.base_seed, index);
    let mut times = PhaseTimes::default();
    let train = timed(&mut times.data, || {
        let rows = subsample_indices(data.train_images.count, src.train_n, seeds.data)?;
        mnist_pair(&data.train_images, &data.train_labels, &rows)
    })?;
    run_split(plan, index, seeds, train, data.test.clone(), times)
}

/// Trains one triple per leave-one-group-out fold and places each fold's
/// test predictions at the original row positions.
fn pool_folds(
    plan: &ExperimentPlan,
    ds: &LupiDataset,
    groups: &[String],
    times: &mut PhaseTimes,
) -> Result<(Predictions, usize)> {
    let split = loocv_splits(groups)?;
    let folds: Vec<Result<(Vec<usize>, Predictions, PhaseTimes)>> = split
        .folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| {
            let mut t = PhaseTimes::default();
            let seeds = RunSeeds::derive(plan.base_seed, f);
            let (train, test) = (ds.select(&fold.train), ds.select(&fold.test));
            let (train, test) = if plan.standardize {
                standardized(&train, &test)
            } else {
                (train, test)
            };
            let models = train_triple(plan, &train, &seeds, &mut t)?;
            let preds = timed(&mut t.evaluation, || predict(&models, &test))?;
            Ok((fold.test.clone(), preds, t))
        })
        .collect();

    let (n, k) = (ds.len(), ds.target_dim());
    let mut pooled = Predictions {
        teacher: Tensor2D::zeros(n, k),
        input: Tensor2D::zeros(n, k),
        lupi: Tensor2D::zeros(n, k),
    };
    for fold in folds {
        let (rows, preds, t) = fold?;
        times.add(&t);
        for (i, &r) in rows.iter().enumerate() {
            pooled
                .teacher
                .row_mut(r)
                .copy_from_slice(preds.teacher.row(i));
            pooled.input.row_mut(r).copy_from_slice(preds.input.row(i));
            pooled.lupi.row_mut(r).copy_from_slice(preds.lupi.row(i));
        }
    }
    Ok((pooled, split.folds.len()))
}

fn run_tabular(
    plan: &ExperimentPlan,
    src: &TabularSource,
    times: &mut PhaseTimes,
) -> Result<(RepetitionResult, usize)> {
    let table = timed(&mut times.data, || load_tabular(&src.path, src.task))?;
    let (pooled, folds) = pool_folds(plan, &table.dataset, &table.groups, times)?;
    let spec = EvalSpec {
        task: src.task,
        ranking: true,
        cutoff: src.affinity_cutoff,
        positive: src.positive,
    };
    let [privileged, input, lupi] = timed(&mut times.evaluation, || {
        score(&spec, &pooled, &table.dataset.y)
    })?;
    Ok((
        RepetitionResult {
            index: 0,
            seed: plan.base_seed,
            privileged,
            input,
            lupi,
        },
        folds,
    ))
}

/// Out-of-fold predictions of every model for a tabular plan, one row per
/// dataset row in file order: `(privileged, input, lupi)`.
pub fn tabular_pooled_predictions(plan: &ExperimentPlan) -> Result<(Tensor2D, Tensor2D, Tensor2D)> {
    let DataSource::Tabular(src) = &plan.source else {
        return Err(Error::Config(
            "pooled predictions need a tabular plan".into(),
        ));
    };
    plan.validate()?;
    let table = load_tabular(&src.path, src.task)?;
    let (p, _) = pool_folds(
        plan,
        &table.dataset,
        &table.groups,
        &mut PhaseTimes::default(),
    )?;
    Ok((p.teacher, p.input, p.lupi))
}

pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    run_experiment_with(plan, &RunOptions::default())
}

/// Trains and evaluates the privileged, input-only and LUPI models.
///
/// Synthetic and MNIST plans repeat over seeds `base_seed + r`; tabular
/// plans run leave-one-group-out and score pooled out-of-fold predictions.
/// Units run in parallel but results are assembled by index, so the report
/// does not depend on scheduling.
pub fn run_experiment_with(plan: &ExperimentPlan, opts: &RunOptions) -> Result<ExperimentReport> {
    plan.validate()?;
    let mut times = PhaseTimes::default();
    let (repetitions, evaluation) = match &plan.source {
        DataSource::Synthetic(cfg) => {
            let units: Vec<_> = (0..plan.repetitions)
                .into_par_iter()
                .map(|r| synthetic_unit(plan, cfg, r))
                .collect();
            let mut reps = Vec::with_capacity(units.len());
            for u in units {
                let (rep, t) = u?;
                times.add(&t);
                reps.push(rep);
            }
            (reps, Evaluation::Repetitions)
        }
        DataSource::Mnist(src) => {
            let data = timed(&mut times.data, || load_mnist(src))?;
            if src.train_n > data.train_images.count {
                return Err(Error::Domain(format!(
                    "train_n = {} exceeds the {} available training images",
                    src.train_n, data.train_images.count
                )));
            }
            let units: Vec<_> = (0..plan.repetitions)
                .into_par_iter()
                .map(|r| mnist_unit(plan, src, &data, r))
                .collect();
            let mut reps = Vec::with_capacity(units.len());
            for u in units {
                let (rep, t) = u?;
                times.add(&t);
                reps.push(rep);
            }
            (reps, Evaluation::Repetitions)
        }
        DataSource::Tabular(src) => {
            let (rep, folds) = run_tabular(plan, src, &mut times)?;
            (vec![rep], Evaluation::PooledLoocv { folds })
        }
    };
    let timings = opts.timings.then(|| times.into_timings());
    ExperimentReport::assemble(plan.clone(), evaluation, repetitions, timings)
}

/// One full experiment per temperature, all sharing `plan.base_seed` so that
/// every run sees the same data.
pub fn t_sweep(plan: &ExperimentPlan, t_values: &[f64]) -> Result<Vec<(f64, ExperimentReport)>> {
    if plan.loss != LossMode::MetaEq2 {
        return Err(Error::Config(
            "a temperature sweep needs the eq2 loss mode".into(),
        ));
    }
    if t_values.is_empty() {
        return Err(Error::Config(
            "the sweep needs at least one temperature".into(),
        ));
    }
    if let Some(t) = t_values.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return Err(Error::Domain(format!(
            "sweep temperatures must be finite and non-negative, got {t}"
        )));
    }
    t_values
        .iter()
        .map(|&t| {
            let p = ExperimentPlan {
                temperature: t,
                ..plan.clone()
            };
            run_experiment(&p).map(|r| (t, r))
        })
        .collect()
}
