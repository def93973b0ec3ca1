//! Diagnostic operations addressed by name, with `key=value` parameters:
//! `virial:R=20`, `concentration:c=10`, `scattering:k=5,tol=1e-3`, `bubble:eta=0.1`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nlslab::diagnostics::bubble::BUBBLE_C;
use nlslab::diagnostics::{
    classify_scenario, concentration_mass, find_bubble, fit_scale_exponent, scale_functions, scattering_test,
    strichartz_accumulate, virial, virial_identity, ScaleSeries,
};
use nlslab::evolution::{duhamel_residual, Trajectory};
use nlslab::groundstate::MASS_Q;
use nlslab::spectral::snapshot::write_snapshot;
use nlslab::spectral::RadialField;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{invalid, HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    Mass,
    Energy,
    Scales,
    Classify,
    Virial,
    Concentration,
    Scattering,
    Strichartz,
    Duhamel,
    Bubble,
}

impl OpKind {
    pub const ALL: [OpKind; 10] = [
        OpKind::Mass,
        OpKind::Energy,
        OpKind::Scales,
        OpKind::Classify,
        OpKind::Virial,
        OpKind::Concentration,
        OpKind::Scattering,
        OpKind::Strichartz,
        OpKind::Duhamel,
        OpKind::Bubble,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            OpKind::Mass => "mass",
            OpKind::Energy => "energy",
            OpKind::Scales => "scales",
            OpKind::Classify => "classify",
            OpKind::Virial => "virial",
            OpKind::Concentration => "concentration",
            OpKind::Scattering => "scattering",
            OpKind::Strichartz => "strichartz",
            OpKind::Duhamel => "duhamel",
            OpKind::Bubble => "bubble",
        }
    }

    fn allowed(&self) -> &'static [&'static str] {
        match self {
            OpKind::Mass | OpKind::Energy => &[],
            OpKind::Scales | OpKind::Classify => &["eta"],
            OpKind::Virial => &["R", "t"],
            OpKind::Concentration => &["c", "k"],
            OpKind::Scattering => &["k", "tol"],
            OpKind::Strichartz | OpKind::Duhamel => &["a", "b"],
            OpKind::Bubble => &["t", "eta", "c", "a", "b"],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DiagnosticOp {
    pub kind: OpKind,
    pub params: BTreeMap<String, f64>,
}

impl DiagnosticOp {
    pub fn new(kind: OpKind) -> Self {
        DiagnosticOp {
            kind,
            params: BTreeMap::new(),
        }
    }

    fn get(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn count(&self, key: &str, default: usize) -> usize {
        self.params.get(key).map(|v| *v as usize).unwrap_or(default)
    }
}

impl fmt::Display for DiagnosticOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.key())?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            write!(f, "{}{k}={v}", if i == 0 { ':' } else { ',' })?;
        }
        Ok(())
    }
}

impl FromStr for DiagnosticOp {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let kind = OpKind::ALL
            .into_iter()
            .find(|k| k.key() == name)
            .ok_or_else(|| invalid!("unknown diagnostic op '{name}'"))?;
        let mut params = BTreeMap::new();
        for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| invalid!("parameter '{pair}' of '{name}' is not key=value"))?;
            if !kind.allowed().contains(&k) {
                return Err(invalid!("'{name}' takes no parameter '{k}'"));
            }
            let v: f64 = v
                .parse()
                .map_err(|_| invalid!("parameter {k} of '{name}' is not a number"))?;
            if !v.is_finite() {
                return Err(invalid!("parameter {k} of '{name}' must be finite"));
            }
            params.insert(k.to_string(), v);
        }
        Ok(DiagnosticOp { kind, params })
    }
}

impl TryFrom<String> for DiagnosticOp {
    type Error = HarnessError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DiagnosticOp> for String {
    fn from(op: DiagnosticOp) -> String {
        op.to_string()
    }
}

/// Parses a comma list where parameters of one op are separated from the
/// next op by the op name: `mass,virial:R=20,t=1,scales`.
pub fn parse_op_list(s: &str) -> Result<Vec<DiagnosticOp>> {
    let mut groups: Vec<String> = Vec::new();
    for piece in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let is_param = !piece.contains(':') && piece.contains('=');
        match groups.last_mut() {
            Some(g) if is_param => {
                g.push(',');
                g.push_str(piece);
            }
            _ => groups.push(piece.to_string()),
        }
    }
    groups.iter().map(|g| g.parse()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpOutcome {
    pub op: String,
    pub ok: bool,
    pub result: serde_json::Value,
    pub error: Option<String>,
    pub exit_code: i32,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
}

#[derive(Serialize)]
struct TimeValue {
    t: f64,
    value: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn max_rel_drift(values: &[f64]) -> f64 {
    let Some(&v0) = values.first() else {
        return 0.0;
    };
    let scale = if v0.abs() > 0.0 { v0.abs() } else { 1.0 };
    values.iter().map(|v| (v - v0).abs() / scale).fold(0.0, f64::max)
}

struct Runner<'a> {
    traj: &'a Trajectory<RadialField>,
    dir: &'a Path,
    scales: BTreeMap<u64, ScaleSeries>,
}

impl Runner<'_> {
    fn scales(&mut self, eta: f64) -> Result<&ScaleSeries> {
        let key = eta.to_bits();
        if !self.scales.contains_key(&key) {
            let s = scale_functions(self.traj, eta)?;
            self.scales.insert(key, s);
        }
        Ok(&self.scales[&key])
    }

    fn interval(&self, op: &DiagnosticOp) -> Result<(f64, f64)> {
        let times = self.traj.times();
        let (Some(&lo), Some(&hi)) = (times.first(), times.last()) else {
            return Err(invalid!("trajectory has no snapshots"));
        };
        Ok((op.get("a", lo), op.get("b", hi)))
    }

    fn run(&mut self, op: &DiagnosticOp, files: &mut Vec<String>) -> Result<serde_json::Value> {
        let traj = self.traj;
        let csv_name = format!("{}.csv", op.kind.key());
        let csv_path = self.dir.join(&csv_name);
        let value = match op.kind {
            OpKind::Mass | OpKind::Energy => {
                let pick = |s: &nlslab::evolution::Sample| {
                    if op.kind == OpKind::Mass {
                        s.mass
                    } else {
                        s.energy
                    }
                };
                let values: Vec<f64> = traj.series.iter().map(pick).collect();
                write_csv(
                    &csv_path,
                    traj.series.iter().map(|s| TimeValue { t: s.t, value: pick(s) }),
                )?;
                files.push(csv_name);
                json!({
                    "initial": values.first(),
                    "final": values.last(),
                    "max_rel_drift": max_rel_drift(&values),
                })
            }
            OpKind::Scales => {
                let eta = op.get("eta", nlslab::diagnostics::scales::DEFAULT_ETA);
                let t_star = traj.blowup().map(|b| b.t_star);
                let s = self.scales(eta)?.clone();
                write_csv(&csv_path, s.samples.iter().map(|x| ScaleRow::from(x)))?;
                files.push(csv_name);
                let n = s.n_values();
                let exponent = t_star.map(|ts| fit_scale_exponent(&s, ts)).transpose().unwrap_or(None);
                json!({
                    "eta": s.eta,
                    "c_hat": s.c_hat,
                    "n_min": n.iter().copied().fold(f64::INFINITY, f64::min),
                    "n_max": n.iter().copied().fold(0.0, f64::max),
                    "t_star": t_star,
                    "exponent": exponent,
                })
            }
            OpKind::Classify => {
                let eta = op.get("eta", nlslab::diagnostics::scales::DEFAULT_ETA);
                let c = classify_scenario(self.scales(eta)?)?;
                serde_json::to_value(c)?
            }
            OpKind::Virial => {
                let r_cut = op.get("R", 20.0);
                let times = traj.times();
                if times.len() < 5 {
                    return Err(invalid!("virial needs at least 5 snapshots, got {}", times.len()));
                }
                let t = op.get("t", times[times.len() / 2]);
                let report = virial_identity(traj, t, r_cut, traj.mu)?;
                let rows = traj
                    .snapshots
                    .iter()
                    .map(|(t, u)| {
                        Ok(TimeValue {
                            t: *t,
                            value: virial(u, r_cut)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                write_csv(&csv_path, rows)?;
                files.push(csv_name);
                let mut v = serde_json::to_value(&report)?;
                v["rhs"] = json!(report.rhs());
                v
            }
            OpKind::Concentration => {
                let c = op.get("c", 10.0);
                let k = op.count("k", traj.snapshots.len());
                let samples = concentration_mass(traj, c, k)?;
                write_csv(&csv_path, &samples)?;
                files.push(csv_name);
                let peak = samples.last().map(|s| s.running_max).unwrap_or(0.0);
                json!({
                    "c": c,
                    "samples": samples.len(),
                    "final_mass": samples.last().map(|s| s.mass),
                    "running_max": peak,
                    "ratio_to_mass_q": peak / MASS_Q,
                })
            }
            OpKind::Scattering => {
                let k = op.count("k", 5);
                let tol = op.get("tol", 1e-3);
                let report = scattering_test(traj, k, tol)?;
                if let Some(u_plus) = &report.u_plus {
                    let name = "u_plus.nlsf";
                    write_snapshot(&self.dir.join(name), u_plus, None, json!({"op": op.to_string()}))?;
                    files.push(name.to_string());
                    files.push("u_plus.json".to_string());
                }
                let mut v = serde_json::to_value(&report)?;
                v["tol"] = json!(tol);
                v
            }
            OpKind::Strichartz => {
                let (a, b) = self.interval(op)?;
                json!({"interval": [a, b], "l4_norm_4": strichartz_accumulate(traj, (a, b))?})
            }
            OpKind::Duhamel => {
                let (a, b) = self.interval(op)?;
                json!({"interval": [a, b], "residual": duhamel_residual(traj, a, b)?})
            }
            OpKind::Bubble => {
                let last = traj
                    .snapshots
                    .last()
                    .ok_or_else(|| invalid!("trajectory has no snapshots"))?
                    .0;
                let (_, phi) = traj.nearest(op.get("t", last)).expect("non-empty");
                let interval = (op.get("a", -1.0), op.get("b", 1.0));
                let bubble = find_bubble(phi, interval, op.get("eta", 0.1), op.get("c", BUBBLE_C))?;
                serde_json::to_value(bubble)?
            }
        };
        Ok(value)
    }
}

#[derive(Serialize)]
struct ScaleRow {
    t: f64,
    n: f64,
    freq_radius: f64,
    space_radius: f64,
}

impl From<&nlslab::diagnostics::scales::ScaleSample> for ScaleRow {
    fn from(s: &nlslab::diagnostics::scales::ScaleSample) -> Self {
        ScaleRow {
            t: s.t,
            n: s.n,
            freq_radius: s.freq_radius,
            space_radius: s.space_radius,
        }
    }
}

/// Runs every op, writing per-op CSV series into `dir`. A failing op is
/// recorded in its outcome and does not stop the others.
pub fn run_ops(traj: &Trajectory<RadialField>, ops: &[DiagnosticOp], dir: &Path) -> Vec<OpOutcome> {
    let mut runner = Runner {
        traj,
        dir,
        scales: BTreeMap::new(),
    };
    ops.iter()
        .map(|op| {
            let mut files = Vec::new();
            match runner.run(op, &mut files) {
                Ok(result) => OpOutcome {
                    op: op.to_string(),
                    ok: true,
                    result,
                    error: None,
                    exit_code: 0,
                    files,
                },
                Err(e) => OpOutcome {
                    op: op.to_string(),
                    ok: false,
                    result: serde_json::Value::Null,
                    error: Some(e.to_string()),
                    exit_code: e.exit_code(),
                    files,
                },
            }
        })
        .collect()
}
