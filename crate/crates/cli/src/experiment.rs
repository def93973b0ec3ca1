//! Experiment specifications, sweeps and run manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nlslab::evolution::{evolve, Backend, EvolveConfig, Termination};
use nlslab::spectral::RadialGrid;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::{invalid, HarnessError, Result};
use crate::initial::InitialData;
use crate::ops::{run_ops, DiagnosticOp, OpOutcome};
use crate::store::{create_dir, save_trajectory, write_atomic};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SPEC_FILE: &str = "spec.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const RUN_FILE: &str = "run.json";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { n: 512, radius: 20.0 }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<std::sync::Arc<RadialGrid>> {
        Ok(RadialGrid::new(self.n, self.radius)?)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sweep {
    /// `m / M(Q)` values; each rescales the initial data to that mass.
    pub mass_ratio: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub initial_data: InitialData,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub diagnostics: Vec<DiagnosticOp>,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub seed: u64,
    pub output: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub id: String,
    pub mass_ratio: Option<f64>,
    pub mu: f64,
}

impl ExperimentSpec {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&bytes)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(invalid!("experiment needs a name"));
        }
        self.evolve.validate()?;
        if self.evolve.backend != Backend::Radial {
            return Err(invalid!("experiments run on the radial backend only"));
        }
        if self.grid.n < 8 || !(self.grid.radius.is_finite() && self.grid.radius > 0.0) {
            return Err(invalid!("grid needs n >= 8 and a finite R > 0"));
        }
        self.initial_data.validate()?;
        if let Some(t0) = self.initial_data.start_time() {
            if t0 != self.evolve.t_start {
                return Err(invalid!(
                    "evolve.t_start = {} does not match the initial data time {t0}",
                    self.evolve.t_start
                ));
            }
        }
        for &m in &self.sweep.mass_ratio {
            if !(m.is_finite() && m >= 0.0) {
                return Err(invalid!("sweep mass ratio {m} is not finite and non-negative"));
            }
        }
        for &mu in &self.sweep.mu {
            if mu != 1.0 && mu != -1.0 {
                return Err(invalid!("sweep mu must be +1 or -1, got {mu}"));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Grid points in row-major order over (mass_ratio, mu).
    pub fn grid_points(&self) -> Vec<GridPoint> {
        let ratios: Vec<Option<f64>> = if self.sweep.mass_ratio.is_empty() {
            vec![self.initial_data.mass_ratio()]
        } else {
            self.sweep.mass_ratio.iter().map(|&m| Some(m)).collect()
        };
        let mus = if self.sweep.mu.is_empty() {
            vec![self.evolve.mu]
        } else {
            self.sweep.mu.clone()
        };
        let mut out = Vec::with_capacity(ratios.len() * mus.len());
        for m in &ratios {
            for &mu in &mus {
                out.push(GridPoint {
                    id: format!("run-{:03}", out.len()),
                    mass_ratio: *m,
                    mu,
                });
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// Not finished; the value left behind by an interrupted sweep.
    Pending,
    Completed,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    #[serde(flatten)]
    pub point: GridPoint,
    pub status: RunStatus,
    pub termination: Option<Termination>,
    pub error: Option<String>,
    pub exit_code: i32,
    pub wall_time_s: f64,
    /// Artifact paths relative to the experiment output directory.
    pub artifacts: Vec<String>,
    pub diagnostics: Vec<OpOutcome>,
}

impl RunRecord {
    fn pending(point: GridPoint) -> Self {
        RunRecord {
            point,
            status: RunStatus::Pending,
            termination: None,
            error: None,
            exit_code: 0,
            wall_time_s: 0.0,
            artifacts: Vec::new(),
            diagnostics: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub spec_hash: String,
    pub code_version: String,
    pub grid: GridSpec,
    pub seed: u64,
    pub wall_time_s: f64,
    /// `false` until every run has been attempted.
    pub complete: bool,
    /// Top-level artifacts, relative to the output directory.
    pub files: Vec<String>,
    pub runs: Vec<RunRecord>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let path = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_path_buf()
        };
        let bytes = fs::read(&path).map_err(|e| HarnessError::io(&path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join(MANIFEST_FILE), &serde_json::to_vec_pretty(self)?)
    }

    pub fn failed_runs(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(|r| r.status != RunStatus::Completed)
    }
}

fn execute(spec: &ExperimentSpec, point: &GridPoint, root: &Path) -> RunRecord {
    let start = Instant::now();
    let mut record = RunRecord::pending(point.clone());
    let dir = root.join(&point.id);
    let outcome = (|| -> Result<(Termination, Vec<String>, Vec<OpOutcome>)> {
        create_dir(&dir)?;
        let grid = spec.grid.build()?;
        let data = match point.mass_ratio {
            Some(m) => spec.initial_data.with_mass_ratio(m),
            None => spec.initial_data.clone(),
        };
        let u0 = data.build(&grid, spec.seed)?;
        let cfg = EvolveConfig {
            mu: point.mu,
            ..spec.evolve.clone()
        };
        let traj = evolve(&u0, &cfg)?;
        let provenance = json!({"experiment": spec.name, "run": point.id, "seed": spec.seed});
        let mut files = save_trajectory(&dir, &traj, &provenance)?;
        let outcomes = run_ops(&traj, &spec.diagnostics, &dir);
        files.extend(outcomes.iter().flat_map(|o| o.files.iter().cloned()));
        write_atomic(&dir.join(DIAGNOSTICS_FILE), &serde_json::to_vec_pretty(&outcomes)?)?;
        files.push(DIAGNOSTICS_FILE.to_string());
        Ok((traj.termination, files, outcomes))
    })();
    match outcome {
        Ok((termination, files, outcomes)) => {
            if let Termination::NumericFailure { message } = &termination {
                record.status = RunStatus::Failed;
                record.error = Some(message.clone());
                record.exit_code = 3;
            } else {
                record.status = RunStatus::Completed;
            }
            record.termination = Some(termination);
            record.artifacts = files.into_iter().map(|f| format!("{}/{f}", point.id)).collect();
            record.diagnostics = outcomes;
        }
        Err(e) => {
            record.status = RunStatus::Failed;
            record.exit_code = e.exit_code();
            record.error = Some(e.to_string());
        }
    }
    record.wall_time_s = start.elapsed().as_secs_f64();
    record.artifacts.push(format!("{}/{RUN_FILE}", point.id));
    if let Ok(bytes) = serde_json::to_vec_pretty(&record) {
        let _ = write_atomic(&dir.join(RUN_FILE), &bytes);
    }
    record
}

/// Validates `spec`, runs every grid point in a worker pool and writes
/// `manifest.json` last. Failures of individual runs are recorded in the
/// manifest; only validation and top-level IO errors are returned.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunManifest> {
    spec.validate()?;
    let start = Instant::now();
    let root = spec.output.clone();
    create_dir(&root)?;
    write_atomic(&root.join(SPEC_FILE), &serde_json::to_vec_pretty(spec)?)?;
    let points = spec.grid_points();
    let mut manifest = RunManifest {
        name: spec.name.clone(),
        spec_hash: spec.hash()?,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        grid: spec.grid,
        seed: spec.seed,
        wall_time_s: 0.0,
        complete: false,
        files: vec![SPEC_FILE.to_string(), MANIFEST_FILE.to_string()],
        runs: points.iter().cloned().map(RunRecord::pending).collect(),
    };
    manifest.write(&root)?;
    manifest.runs = points.par_iter().map(|p| execute(spec, p, &root)).collect();
    manifest.complete = true;
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.write(&root)?;
    Ok(manifest)
}
