//! Consolidated reports and plots from a finished manifest.

use std::path::Path;

use nlslab::evolution::Termination;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, HarnessError, Result};
use crate::experiment::{RunManifest, RunRecord, RunStatus};
use crate::store::{create_dir, read_series, write_atomic, write_bytes, SERIES_FILE};
use crate::svg::{Line, Plot};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const PLOT_DIR: &str = "plots";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub id: String,
    pub mass_ratio: Option<f64>,
    pub mu: f64,
    pub status: RunStatus,
    pub termination: Option<String>,
    pub t_final: Option<f64>,
    pub t_star: Option<f64>,
    pub mass_drift: Option<f64>,
    pub energy_drift: Option<f64>,
    pub linf_max: Option<f64>,
    pub diagnostics: serde_json::Map<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub spec_hash: String,
    pub code_version: String,
    pub runs: Vec<RunSummary>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FileFailure {
    pub file: String,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportOutcome {
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
    pub failures: Vec<FileFailure>,
}

#[derive(Deserialize)]
struct ScaleIn {
    t: f64,
    n: f64,
}

#[derive(Deserialize)]
struct ConcentrationIn {
    t: f64,
    mass: f64,
    running_max: f64,
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|x| x.map_err(HarnessError::from)).collect()
}

fn drift(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    let v0 = *v.first()?;
    let scale = if v0 != 0.0 { v0.abs() } else { 1.0 };
    Some(v.iter().map(|x| (x - v0).abs() / scale).fold(0.0, f64::max))
}

fn summarize(run: &RunRecord, root: &Path) -> RunSummary {
    let series = read_series(&root.join(&run.point.id).join(SERIES_FILE)).unwrap_or_default();
    let termination = run.termination.as_ref().map(|t| {
        match t {
            Termination::ReachedEnd => "reached_end",
            Termination::Blowup(_) => "blowup",
            Termination::NumericFailure { .. } => "numeric_failure",
        }
        .to_string()
    });
    let t_star = match &run.termination {
        Some(Termination::Blowup(b)) => Some(b.t_star),
        _ => None,
    };
    RunSummary {
        id: run.point.id.clone(),
        mass_ratio: run.point.mass_ratio,
        mu: run.point.mu,
        status: run.status,
        termination,
        t_final: series.last().map(|s| s.t),
        t_star,
        mass_drift: drift(series.iter().map(|s| s.mass)),
        energy_drift: drift(series.iter().map(|s| s.energy)),
        linf_max: series.iter().map(|s| s.linf).reduce(f64::max),
        diagnostics: run
            .diagnostics
            .iter()
            .map(|o| {
                let v = if o.ok {
                    o.result.clone()
                } else {
                    serde_json::json!({"error": o.error})
                };
                (o.op.clone(), v)
            })
            .collect(),
    }
}

/// `N(t)` against time, or against `T* - t` on log-log axes with a `-1/2`
/// guide through the last point when the run blew up.
pub fn n_plot(id: &str, samples: &[(f64, f64)], t_star: Option<f64>) -> Plot {
    match t_star {
        Some(ts) => {
            let points: Vec<(f64, f64)> = samples
                .iter()
                .filter(|(t, _)| *t < ts)
                .map(|&(t, n)| (ts - t, n))
                .collect();
            let mut lines = vec![Line {
                label: "N(t)".into(),
                points: points.clone(),
                dashed: false,
            }];
            if let (Some(&(x_ref, n_ref)), Some(&(x_far, _))) = (points.last(), points.first()) {
                lines.push(Line {
                    label: "slope -1/2".into(),
                    points: vec![(x_far, n_ref * (x_far / x_ref).powf(-0.5)), (x_ref, n_ref)],
                    dashed: true,
                });
            }
            Plot {
                title: format!("{id}: frequency scale"),
                x_label: "T* - t".into(),
                y_label: "N(t)".into(),
                log_x: true,
                log_y: true,
                lines,
            }
        }
        None => Plot {
            title: format!("{id}: frequency scale"),
            x_label: "t".into(),
            y_label: "N(t)".into(),
            log_x: false,
            log_y: false,
            lines: vec![Line {
                label: "N(t)".into(),
                points: samples.to_vec(),
                dashed: false,
            }],
        },
    }
}

fn series_plot(id: &str, what: &str, points: Vec<(f64, f64)>) -> Plot {
    Plot {
        title: format!("{id}: {what}"),
        x_label: "t".into(),
        y_label: what.into(),
        log_x: false,
        log_y: false,
        lines: vec![Line {
            label: what.into(),
            points,
            dashed: false,
        }],
    }
}

fn plots_for(run: &RunRecord, summary: &RunSummary, root: &Path) -> Vec<(String, Result<Plot>)> {
    let id = &run.point.id;
    let dir = root.join(id);
    let mut out = Vec::new();
    let series = read_series(&dir.join(SERIES_FILE));
    if dir.join(SERIES_FILE).is_file() {
        match series {
            Ok(rows) => {
                out.push((
                    format!("{id}_mass.svg"),
                    Ok(series_plot(id, "mass", rows.iter().map(|r| (r.t, r.mass)).collect())),
                ));
                out.push((
                    format!("{id}_energy.svg"),
                    Ok(series_plot(
                        id,
                        "energy",
                        rows.iter().map(|r| (r.t, r.energy)).collect(),
                    )),
                ));
            }
            Err(e) => out.push((format!("{id}_mass.svg"), Err(e))),
        }
    }
    let scales = dir.join("scales.csv");
    if scales.is_file() {
        let plot = read_csv::<ScaleIn>(&scales)
            .map(|rows| n_plot(id, &rows.iter().map(|r| (r.t, r.n)).collect::<Vec<_>>(), summary.t_star));
        out.push((format!("{id}_n.svg"), plot));
    }
    let conc = dir.join("concentration.csv");
    if conc.is_file() {
        let plot = read_csv::<ConcentrationIn>(&conc).map(|rows| {
            let mut p = series_plot(id, "concentrated mass", rows.iter().map(|r| (r.t, r.mass)).collect());
            p.lines.push(Line {
                label: "running max".into(),
                points: rows.iter().map(|r| (r.t, r.running_max)).collect(),
                dashed: true,
            });
            p
        });
        out.push((format!("{id}_concentration.svg"), plot));
    }
    out
}

fn write_summary_csv(path: &Path, runs: &[RunSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "id",
        "mass_ratio",
        "mu",
        "status",
        "termination",
        "t_final",
        "t_star",
        "mass_drift",
        "energy_drift",
        "linf_max",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in runs {
        let status = serde_json::to_value(r.status)?;
        w.write_record([
            r.id.clone(),
            opt(r.mass_ratio),
            r.mu.to_string(),
            status.as_str().unwrap_or_default().to_string(),
            r.termination.clone().unwrap_or_default(),
            opt(r.t_final),
            opt(r.t_star),
            opt(r.mass_drift),
            opt(r.energy_drift),
            opt(r.linf_max),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Writes `report.json`, `report.csv` and per-run SVG plots under `root`.
/// A file that cannot be produced is listed in the outcome and the rest are
/// still written.
pub fn emit_report(manifest: &RunManifest, root: &Path) -> Result<ReportOutcome> {
    if !manifest.complete {
        return Err(invalid!(
            "manifest of '{}' is incomplete; finish or rerun the sweep",
            manifest.name
        ));
    }
    create_dir(root)?;
    let mut outcome = ReportOutcome::default();
    let summaries: Vec<RunSummary> = manifest.runs.iter().map(|r| summarize(r, root)).collect();
    let report = Report {
        name: manifest.name.clone(),
        spec_hash: manifest.spec_hash.clone(),
        code_version: manifest.code_version.clone(),
        runs: summaries.clone(),
    };
    let mut record = |file: String, res: Result<()>| match res {
        Ok(()) => outcome.files.push(file),
        Err(e) => outcome.failures.push(FileFailure {
            file,
            error: e.to_string(),
        }),
    };
    record(
        REPORT_JSON.into(),
        serde_json::to_vec_pretty(&report)
            .map_err(HarnessError::from)
            .and_then(|b| write_atomic(&root.join(REPORT_JSON), &b)),
    );
    record(REPORT_CSV.into(), write_summary_csv(&root.join(REPORT_CSV), &summaries));
    let plot_dir = root.join(PLOT_DIR);
    for (run, summary) in manifest.runs.iter().zip(&summaries) {
        for (name, plot) in plots_for(run, summary, root) {
            let file = format!("{PLOT_DIR}/{name}");
            let res = plot.and_then(|p| {
                create_dir(&plot_dir)?;
                write_bytes(&plot_dir.join(&name), p.to_svg().as_bytes())
            });
            record(file, res);
        }
    }
    Ok(outcome)
}
