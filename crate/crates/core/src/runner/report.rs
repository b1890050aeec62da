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
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{aggregate, Aggregate, MetricReport};

use super::plan::ExperimentPlan;

/// Bumped whenever the JSON layout changes incompatibly.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelRole {
    /// The teacher, evaluated on privileged features.
    Privileged,
    Input,
    Lupi,
}

impl ModelRole {
    pub const ALL: [ModelRole; 3] = [ModelRole::Privileged, ModelRole::Input, ModelRole::Lupi];

    pub fn name(self) -> &'static str {
        match self {
            ModelRole::Privileged => "privileged",
            ModelRole::Input => "input",
            ModelRole::Lupi => "lupi",
        }
    }
}

impl fmt::Display for ModelRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub index: usize,
    pub seed: u64,
    pub privileged: MetricReport,
    pub input: MetricReport,
    pub lupi: MetricReport,
}

impl RepetitionResult {
    pub fn metrics(&self, role: ModelRole) -> &MetricReport {
        match role {
            ModelRole::Privileged => &self.privileged,
            ModelRole::Input => &self.input,
            ModelRole::Lupi => &self.lupi,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evaluation {
    /// Independent train/test draws, one per repetition.
    Repetitions,
    /// A single entry scored on out-of-fold predictions pooled over folds.
    PooledLoocv { folds: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    #[serde(flatten)]
    pub aggregate: Aggregate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: ModelRole,
    pub metrics: Vec<MetricSummary>,
}

/// Wall-clock seconds per phase, summed over repetitions or folds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub data_seconds: f64,
    pub teacher_seconds: f64,
    pub input_seconds: f64,
    pub lupi_seconds: f64,
    pub evaluation_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub plan: ExperimentPlan,
    pub evaluation: Evaluation,
    pub repetitions: Vec<RepetitionResult>,
    pub summary: Vec<ModelSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

/// Aggregates of every metric present in at least one repetition, models in
/// [`ModelRole::ALL`] order and metrics in [`MetricReport::NAMES`] order.
pub fn summarize(repetitions: &[RepetitionResult]) -> Result<Vec<ModelSummary>> {
    ModelRole::ALL
        .iter()
        .map(|&role| {
            let mut metrics = Vec::new();
            for name in MetricReport::NAMES {
                let values: Vec<f64> = repetitions
                    .iter()
                    .filter_map(|r| r.metrics(role).get(name))
                    .collect();
                if !values.is_empty() {
                    metrics.push(MetricSummary {
                        metric: name.to_string(),
                        aggregate: aggregate(&values)?,
                    });
                }
            }
            Ok(ModelSummary {
                model: role,
                metrics,
            })
        })
        .collect()
}

impl ExperimentReport {
    pub fn assemble(
        plan: ExperimentPlan,
        evaluation: Evaluation,
        repetitions: Vec<RepetitionResult>,
        timings: Option<Timings>,
    ) -> Result<Self> {
        let summary = summarize(&repetitions)?;
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            plan,
            evaluation,
            repetitions,
            summary,
            timings,
        })
    }

    pub fn aggregate(&self, role: ModelRole, metric: &str) -> Option<Aggregate> {
        self.summary
            .iter()
            .find(|s| s.model == role)?
            .metrics
            .iter()
            .find(|m| m.metric == metric)
            .map(|m| m.aggregate)
    }

    /// Mean of `metric` for `role`, if any repetition defines it.
    pub fn mean(&self, role: ModelRole, metric: &str) -> Option<f64> {
        self.aggregate(role, metric).map(|a| a.mean)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "report schema version {} is not supported (expected {SCHEMA_VERSION})",
                report.schema_version
            )));
        }
        Ok(report)
    }

    /// Summary CSV: `model,metric,mean,std,n_runs,rep_0,...`, one row per
    /// model and defined metric. Repetitions lacking a metric leave the cell
    /// empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = ["model", "metric", "mean", "std", "n_runs"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((0..self.repetitions.len()).map(|i| format!("rep_{i}")));
        w.write_record(&header)?;
        for model in &self.summary {
            for m in &model.metrics {
                let mut rec = vec![
                    model.model.to_string(),
                    m.metric.clone(),
                    m.aggregate.mean.to_string(),
                    m.aggregate.std.to_string(),
                    m.aggregate.n_runs.to_string(),
                ];
                rec.extend(self.repetitions.iter().map(|r| {
                    r.metrics(model.model)
                        .get(&m.metric)
                        .map_or_else(String::new, |v| v.to_string())
                }));
                w.write_record(&rec)?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Config(format!(
                "unknown format `{other}` (expected json or csv)"
            ))),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_report<W: Write>(
    report: &ExperimentReport,
    format: ReportFormat,
    mut writer: W,
) -> Result<()> {
    match format {
        ReportFormat::Json => writer
            .write_all(report.to_json()?.as_bytes())
            .map_err(|e| Error::io("<report output>", e)),
        ReportFormat::Csv => report.write_csv(writer),
    }
}

pub fn emit_report(
    report: &ExperimentReport,
    format: ReportFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_report(report, format, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<ExperimentReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentReport::from_json(&text)
}

/// Plot-ready sweep table: `T,model,metric,mean,std`.
pub fn write_sweep_csv<W: Write>(sweep: &[(f64, ExperimentReport)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["T", "model", "metric", "mean", "std"])?;
    for (t, report) in sweep {
        for model in &report.summary {
            for m in &model.metrics {
                w.write_record([
                    t.to_string(),
                    model.model.to_string(),
                    m.metric.clone(),
                    m.aggregate.mean.to_string(),
                    m.aggregate.std.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<sweep output>", e))?;
    Ok(())
}

#[derive(Serialize)]
struct SweepEntry<'a> {
    #[serde(rename = "T")]
    temperature: f64,
    report: &'a ExperimentReport,
}

/// Every sweep report as a JSON array of `{"T": .., "report": ..}`.
pub fn write_sweep_json<W: Write>(sweep: &[(f64, ExperimentReport)], mut writer: W) -> Result<()> {
    let entries: Vec<SweepEntry> = sweep
        .iter()
        .map(|(t, report)| SweepEntry {
            temperature: *t,
            report,
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&entries)?;
    text.push('\n');
    writer
        .write_all(text.as_bytes())
        .map_err(|e| Error::io("<sweep output>", e))
}

pub fn emit_sweep_csv(sweep: &[(f64, ExperimentReport)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_sweep_csv(sweep, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{Scenario, SynthTask};

    fn rep(i: usize, acc: f64, auc: Option<f64>) -> RepetitionResult {
        let m = MetricReport {
            accuracy: Some(acc),
            auc_roc: auc,
            ..Default::default()
        };
        RepetitionResult {
            index: i,
            seed: i as u64,
            privileged: m.clone(),
            input: m.clone(),
            lupi: m,
        }
    }

    fn report() -> ExperimentReport {
        let plan = ExperimentPlan::synthetic(Scenario::CleanLabels, SynthTask::Classification);
        ExperimentReport::assemble(
            plan,
            Evaluation::Repetitions,
            vec![rep(0, 0.5, Some(0.7)), rep(1, 1.0, None)],
            None,
        )
        .unwrap()
    }

    #[test]
    fn aggregates_recompute_from_repetitions() {
        let r = report();
        let a = r.aggregate(ModelRole::Lupi, "accuracy").unwrap();
        assert_eq!((a.mean, a.std, a.n_runs), (0.75, 0.25, 2));
        let auc = r.aggregate(ModelRole::Input, "auc_roc").unwrap();
        assert_eq!((auc.mean, auc.n_runs), (0.7, 1));
        assert!(r.aggregate(ModelRole::Input, "rmse").is_none());
    }

    #[test]
    fn csv_rows_and_empty_cells() {
        let r = report();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "model,metric,mean,std,n_runs,rep_0,rep_1");
        // 3 models x 2 defined metrics
        assert_eq!(lines.len(), 1 + 6);
        assert!(lines.contains(&"input,auc_roc,0.7,0,1,0.7,"));
    }

    #[test]
    fn json_round_trip() {
        let r = report();
        let back = ExperimentReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(!r.to_json().unwrap().contains("timings"));
    }

    #[test]
    fn foreign_schema_versions_are_rejected() {
        let text = report().to_json().unwrap().replacen(
            "\"schema_version\": 1",
            "\"schema_version\": 99",
            1,
        );
        assert!(matches!(
            ExperimentReport::from_json(&text),
            Err(Error::Schema(_))
        ));
    }
}
