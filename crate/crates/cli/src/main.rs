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

//! `lupi`: run privileged-information experiments from the command line.

mod args;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use lupi_core::data::save_tabular;
use lupi_core::runner::{
    run_experiment_with, t_sweep, write_report, write_sweep_csv, write_sweep_json, ExperimentKind,
    ExperimentReport, ModelRole, ReportFormat, RunOptions, Settings,
};
use lupi_core::synth::grouped_sample;

use args::{Cli, Command};

fn with_output<F>(out: Option<&Path>, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> lupi_core::Result<()>,
{
    match out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))?;
            let mut w = std::io::BufWriter::new(file);
            f(&mut w)?;
            w.flush()
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Human-readable `mean ± std` table on stderr.
fn print_summary(report: &ExperimentReport) {
    for model in ModelRole::ALL {
        let Some(summary) = report.summary.iter().find(|s| s.model == model) else {
            continue;
        };
        let cells: Vec<String> = summary
            .metrics
            .iter()
            .map(|m| {
                format!(
                    "{} {:.4} ± {:.4}",
                    m.metric, m.aggregate.mean, m.aggregate.std
                )
            })
            .collect();
        eprintln!("{:<10} {}", model.name(), cells.join("  "));
    }
}

fn settings_for(plan: Option<&Path>, overrides: Settings) -> Result<Settings> {
    let base = match plan {
        Some(p) => {
            Settings::load(p).with_context(|| format!("reading plan file {}", p.display()))?
        }
        None => Settings::new(),
    };
    Ok(base.merged(&overrides))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenTabular(g) => {
            let cfg = g.synth_config()?;
            let (ds, groups) = grouped_sample(&cfg, g.groups)?;
            save_tabular(&g.out, &ds, &groups)
                .with_context(|| format!("writing {}", g.out.display()))?;
            eprintln!(
                "wrote {} rows in {} groups to {}",
                ds.len(),
                g.groups,
                g.out.display()
            );
            Ok(())
        }
        Command::Sweep(a) => {
            let settings = settings_for(a.common.plan.as_deref(), a.settings()?)?;
            let kind = settings
                .get::<ExperimentKind>("experiment")?
                .unwrap_or(ExperimentKind::Synthetic);
            let plan = settings.to_plan(kind)?;
            let t_values = settings.t_values()?;
            let format = match settings.raw("format") {
                Some(_) => settings.format()?,
                None => ReportFormat::Csv,
            };
            let sweep = t_sweep(&plan, &t_values)?;
            for (t, report) in &sweep {
                eprintln!("T = {t}");
                print_summary(report);
            }
            with_output(settings.path("out").as_deref(), |w| match format {
                ReportFormat::Csv => write_sweep_csv(&sweep, w),
                ReportFormat::Json => write_sweep_json(&sweep, w),
            })
        }
        cmd => {
            let (kind, common, overrides) = cmd.experiment_settings()?;
            let settings = settings_for(common.plan.as_deref(), overrides)?;
            let plan = settings.to_plan(kind)?;
            let opts = RunOptions {
                timings: settings.flag("timings")?,
            };
            let format = settings.format()?;
            let report = run_experiment_with(&plan, &opts)?;
            print_summary(&report);
            with_output(settings.path("out").as_deref(), |w| {
                write_report(&report, format, w)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
