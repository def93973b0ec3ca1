//! On-disk trajectories: `series.csv`, numbered `.nlsf` snapshots and a
//! `trajectory.json` index.

use std::fs;
use std::path::{Path, PathBuf};

use nlslab::evolution::{Sample, Termination, Trajectory};
use nlslab::spectral::snapshot::{read_snapshot, sidecar_path, write_snapshot};
use nlslab::spectral::RadialField;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, HarnessError, Result};

pub const SERIES_FILE: &str = "series.csv";
pub const INDEX_FILE: &str = "trajectory.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub linf: f64,
    pub l4_cum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub t: f64,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryIndex {
    pub mu: f64,
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub termination: Termination,
    pub snapshots: Vec<SnapshotEntry>,
}

pub fn snapshot_name(i: usize) -> String {
    format!("snap_{i:05}.nlsf")
}

fn sidecar_name(name: &str) -> String {
    sidecar_path(Path::new(name)).to_string_lossy().into_owned()
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

/// Writes via a temporary file and a rename, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    write_bytes(&tmp, bytes)?;
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

pub fn write_series(path: &Path, series: &[Sample]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in series {
        w.serialize(SeriesRow {
            t: s.t,
            mass: s.mass,
            energy: s.energy,
            linf: s.linf,
            l4_cum: s.l4_cum,
        })?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

pub fn read_series(path: &Path) -> Result<Vec<SeriesRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(HarnessError::from)).collect()
}

/// Writes every artifact of `traj` into `dir` and returns the file names,
/// relative to `dir`.
pub fn save_trajectory(
    dir: &Path,
    traj: &Trajectory<RadialField>,
    provenance: &serde_json::Value,
) -> Result<Vec<String>> {
    create_dir(dir)?;
    let mut files = Vec::with_capacity(traj.snapshots.len() + 2);
    write_series(&dir.join(SERIES_FILE), &traj.series)?;
    files.push(SERIES_FILE.to_string());
    let mut entries = Vec::with_capacity(traj.snapshots.len());
    for (i, (t, u)) in traj.snapshots.iter().enumerate() {
        let name = snapshot_name(i);
        let path = dir.join(&name);
        write_snapshot(&path, u, Some(*t), provenance.clone())?;
        files.push(name.clone());
        files.push(sidecar_name(&name));
        entries.push(SnapshotEntry { t: *t, file: name });
    }
    let (n, radius) = traj
        .snapshots
        .first()
        .map(|(_, u)| (u.grid().n(), u.grid().radius()))
        .unwrap_or((0, 0.0));
    let index = TrajectoryIndex {
        mu: traj.mu,
        n,
        radius,
        termination: traj.termination.clone(),
        snapshots: entries,
    };
    write_atomic(&dir.join(INDEX_FILE), &serde_json::to_vec_pretty(&index)?)?;
    files.push(INDEX_FILE.to_string());
    Ok(files)
}

pub fn read_index(dir: &Path) -> Result<TrajectoryIndex> {
    let path = dir.join(INDEX_FILE);
    if !path.is_file() {
        return Err(invalid!(
            "{} is not a trajectory directory (no {INDEX_FILE})",
            dir.display()
        ));
    }
    let bytes = fs::read(&path).map_err(|e| HarnessError::io(&path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Reloads a saved trajectory. Per-step `dt` is recovered from the time
/// column; the spectral tail is not stored and reads back as zero.
pub fn load_trajectory(dir: &Path) -> Result<Trajectory<RadialField>> {
    let index = read_index(dir)?;
    let rows = read_series(&dir.join(SERIES_FILE))?;
    let series = rows
        .iter()
        .enumerate()
        .map(|(i, r)| Sample {
            t: r.t,
            dt: if i == 0 { 0.0 } else { r.t - rows[i - 1].t },
            mass: r.mass,
            energy: r.energy,
            linf: r.linf,
            l4_cum: r.l4_cum,
            tail_fraction: 0.0,
        })
        .collect();
    let snapshots = index
        .snapshots
        .iter()
        .map(|e| Ok((e.t, read_snapshot(&dir.join(&e.file))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        mu: index.mu,
        snapshots,
        series,
        termination: index.termination,
    })
}
