//! Initial data specifications.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};

use nlslab::diagnostics::probes::ensemble;
use nlslab::groundstate::{shoot_ground_state, MASS_Q};
use nlslab::spectral::snapshot::read_snapshot;
use nlslab::spectral::{RadialField, RadialGrid};
use nlslab::symmetry::pc_soliton;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tolerance of the shooting solve behind `groundstate` and `pc-soliton` data.
pub const Q_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    /// `sqrt(m) Q` with `m = mass_ratio`.
    Groundstate {
        #[serde(default = "one")]
        mass_ratio: f64,
    },
    /// `amplitude exp(-r^2 / (2 width^2) + i chirp r^2)`.
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        chirp: f64,
        mass_ratio: Option<f64>,
    },
    /// A stored `.nlsf` field, resampled onto the run grid if needed.
    Snapshot { path: PathBuf, mass_ratio: Option<f64> },
    /// The pseudoconformal image of the soliton at time `t0 < 0`, scaled to
    /// `mass_ratio M(Q)`; blows up at `t = 0` when the ratio is 1.
    PcSoliton {
        #[serde(default = "minus_one")]
        t0: f64,
        #[serde(default = "one")]
        mass_ratio: f64,
    },
    /// Member `index` of the seeded probe ensemble, at unit scale.
    Ensemble {
        #[serde(default)]
        index: usize,
        mass_ratio: Option<f64>,
    },
}

/// Shooting solve shared across runs on the same grid.
pub fn ground_state(grid: &Arc<RadialGrid>) -> Result<RadialField> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), RadialField>>> = OnceLock::new();
    let key = (grid.n(), grid.radius().to_bits());
    let cache = CACHE.get_or_init(Default::default);
    if let Some(q) = cache.lock().unwrap().get(&key) {
        return Ok(q.clone());
    }
    let q = shoot_ground_state(grid, Q_TOL)?.profile;
    cache.lock().unwrap().insert(key, q.clone());
    Ok(q)
}

fn one() -> f64 {
    1.0
}

fn minus_one() -> f64 {
    -1.0
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        let ratio = self.mass_ratio();
        if let Some(m) = ratio {
            if !(m.is_finite() && m >= 0.0) {
                return Err(invalid!("mass ratio must be finite and non-negative, got {m}"));
            }
        }
        match self {
            InitialData::Gaussian {
                amplitude,
                width,
                chirp,
                ..
            } => {
                if !(amplitude.is_finite() && chirp.is_finite() && width.is_finite() && *width > 0.0) {
                    return Err(invalid!("gaussian needs finite amplitude and chirp and width > 0"));
                }
            }
            InitialData::Snapshot { path, .. } => {
                if !path.is_file() {
                    return Err(invalid!("initial data file {} does not exist", path.display()));
                }
            }
            InitialData::PcSoliton { t0, .. } => {
                if !(t0.is_finite() && *t0 != 0.0) {
                    return Err(invalid!("pc-soliton needs a finite t0 != 0"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn mass_ratio(&self) -> Option<f64> {
        match self {
            InitialData::Groundstate { mass_ratio } | InitialData::PcSoliton { mass_ratio, .. } => Some(*mass_ratio),
            InitialData::Gaussian { mass_ratio, .. }
            | InitialData::Snapshot { mass_ratio, .. }
            | InitialData::Ensemble { mass_ratio, .. } => *mass_ratio,
        }
    }

    pub fn with_mass_ratio(&self, m: f64) -> InitialData {
        let mut out = self.clone();
        match &mut out {
            InitialData::Groundstate { mass_ratio } | InitialData::PcSoliton { mass_ratio, .. } => *mass_ratio = m,
            InitialData::Gaussian { mass_ratio, .. }
            | InitialData::Snapshot { mass_ratio, .. }
            | InitialData::Ensemble { mass_ratio, .. } => *mass_ratio = Some(m),
        }
        out
    }

    /// Start time implied by the data, if any.
    pub fn start_time(&self) -> Option<f64> {
        match self {
            InitialData::PcSoliton { t0, .. } => Some(*t0),
            _ => None,
        }
    }

    pub fn build(&self, grid: &Arc<RadialGrid>, seed: u64) -> Result<RadialField> {
        let base = match self {
            InitialData::Groundstate { .. } => ground_state(grid)?,
            InitialData::Gaussian {
                amplitude,
                width,
                chirp,
                ..
            } => {
                let (a, w, c) = (*amplitude, *width, *chirp);
                RadialField::from_fn(grid.clone(), |r| {
                    Complex64::from_polar(a * (-r * r / (2.0 * w * w)).exp(), c * r * r)
                })
            }
            InitialData::Snapshot { path, .. } => {
                let f = read_snapshot(path)?;
                if f.grid().as_ref() == grid.as_ref() {
                    f
                } else {
                    let values = f.evaluate(grid.r());
                    RadialField::new(grid.clone(), values)?
                }
            }
            InitialData::PcSoliton { t0, .. } => {
                let q = ground_state(grid)?;
                pc_soliton(&q, *t0)?
            }
            InitialData::Ensemble { index, .. } => {
                let members = ensemble(seed, index + 1);
                members[*index].sample(grid, 1.0)
            }
        };
        Ok(match self.mass_ratio() {
            Some(m) => {
                let mass = base.mass();
                if mass == 0.0 {
                    return Err(invalid!("cannot rescale zero initial data to a mass ratio"));
                }
                base.scale(Complex64::from((m * MASS_Q / mass).sqrt()))
            }
            None => base,
        })
    }
}
