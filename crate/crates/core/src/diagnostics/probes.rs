//! Empirical probes of the linear estimates, over a seeded radial ensemble.
//!
//! Frequency-localised probes place each ensemble member at spatial scale
//! `1/N` before projecting, so that every dyadic block sees data adapted to
//! it; time windows shrink like `N^{-2}` accordingly.

use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bubble::{free_samples, time_nodes};
use crate::error::{invalid, NlsError, Result};
use crate::evolution::{linear_fit, simpson_weights};
use crate::spectral::{lp_project, FrequencyBand, RadialField, RadialGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    Bernstein,
    RadialSobolev,
    Dispersive,
    StrichartzL4,
    StrichartzL2Linf,
    Bilinear,
    Weighted,
    Shao,
}

impl Probe {
    pub const ALL: [Probe; 8] = [
        Probe::Bernstein,
        Probe::RadialSobolev,
        Probe::Dispersive,
        Probe::StrichartzL4,
        Probe::StrichartzL2Linf,
        Probe::Bilinear,
        Probe::Weighted,
        Probe::Shao,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            Probe::Bernstein => "bernstein",
            Probe::RadialSobolev => "radial_sobolev",
            Probe::Dispersive => "dispersive",
            Probe::StrichartzL4 => "strichartz_l4",
            Probe::StrichartzL2Linf => "strichartz_l2linf",
            Probe::Bilinear => "bilinear",
            Probe::Weighted => "weighted",
            Probe::Shao => "shao",
        }
    }
}

impl FromStr for Probe {
    type Err = NlsError;

    fn from_str(s: &str) -> Result<Self> {
        Probe::ALL
            .iter()
            .find(|p| p.key() == s)
            .copied()
            .ok_or_else(|| invalid!("unknown probe '{s}'"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub seed: u64,
    pub ensemble: usize,
    /// Half-length of the time window at unit frequency.
    pub window: f64,
    /// Dyadic frequencies for the frequency-localised probes.
    pub frequencies: Vec<f64>,
    /// Exponent of the Shao probe.
    pub q: f64,
    /// Low frequency `M` of the bilinear probe.
    pub bilinear_low: f64,
    /// Values of `N / M` for the bilinear probe.
    pub bilinear_ratios: Vec<f64>,
    /// Re-run on a grid with twice as many nodes and compare.
    pub refine: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            n: 256,
            radius: 20.0,
            seed: 7,
            ensemble: 64,
            window: 2.0,
            frequencies: vec![1.0, 2.0, 4.0, 8.0],
            q: 3.5,
            bilinear_low: 0.5,
            bilinear_ratios: vec![4.0, 16.0, 64.0],
            refine: true,
        }
    }
}

/// One ensemble member: a normalised mixture of Gaussians, chirped
/// Gaussians and annular bumps at unit scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub components: Vec<Component>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub amplitude: (f64, f64),
    pub width: f64,
    pub center: f64,
    pub chirp: f64,
}

impl Member {
    fn profile(&self, r: f64) -> Complex64 {
        self.components
            .iter()
            .map(|c| {
                let d = r - c.center;
                Complex64::new(c.amplitude.0, c.amplitude.1)
                    * (-d * d / (2.0 * c.width * c.width)).exp()
                    * Complex64::from_polar(1.0, c.chirp * r * r)
            })
            .sum()
    }

    /// `N f(N r)` sampled on `grid`, normalised in `L^2`.
    pub fn sample(&self, grid: &Arc<RadialGrid>, n: f64) -> RadialField {
        let f = RadialField::from_fn(grid.clone(), |r| self.profile(n * r));
        let norm = f.l2_norm();
        f.scale(Complex64::new(1.0 / norm, 0.0))
    }
}

/// The seeded ensemble; member `i` depends only on `(seed, i)`.
pub fn ensemble(seed: u64, size: usize) -> Vec<Member> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|_| {
            let k = rng.gen_range(1..=3);
            let components = (0..k)
                .map(|_| {
                    let amp = rng.gen_range(0.5..1.0);
                    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                    let kind = rng.gen_range(0..3);
                    Component {
                        amplitude: (amp * phase.cos(), amp * phase.sin()),
                        width: (rng.gen_range(0.7f64.ln()..1.4f64.ln())).exp(),
                        center: if kind == 2 { rng.gen_range(0.5..2.0) } else { 0.0 },
                        chirp: if kind == 1 { rng.gen_range(-0.5..0.5) } else { 0.0 },
                    }
                })
                .collect();
            Member { components }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub fitted: f64,
    pub expected: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub n: usize,
    pub worst_ratio: f64,
    pub relative_change: f64,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub name: String,
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub seed: u64,
    pub ensemble: usize,
    pub worst_ratio: f64,
    pub fitted_constant: f64,
    /// `(scale, worst ratio at that scale)`.
    pub per_scale: Vec<(f64, f64)>,
    pub exponent: Option<ExponentFit>,
    pub refinement: Option<Refinement>,
}

/// Relative change allowed between a grid and its refinement.
pub const REFINE_TOLERANCE: f64 = 0.25;

pub fn probe_inequality(probe: Probe, cfg: &ProbeConfig) -> Result<ProbeReport> {
    if cfg.ensemble == 0 {
        return Err(invalid!("ensemble must be non-empty"));
    }
    if !(cfg.window > 0.0) || cfg.frequencies.is_empty() || cfg.frequencies.iter().any(|n| !(*n > 0.0)) {
        return Err(invalid!("window and frequencies must be positive"));
    }
    let members = ensemble(cfg.seed, cfg.ensemble);
    let grid = RadialGrid::new(cfg.n, cfg.radius)?;
    let (per_scale, exponent, constant) = evaluate(probe, cfg, &grid, &members)?;
    let worst = per_scale.iter().map(|p| p.1).fold(0.0, f64::max);
    if !worst.is_finite() {
        return Err(NlsError::NumericFailure(format!("{} ratio is not finite", probe.key())));
    }
    let refinement = if cfg.refine {
        let fine = RadialGrid::new(2 * cfg.n, cfg.radius)?;
        let (ps, _, _) = evaluate(probe, cfg, &fine, &members)?;
        let w = ps.iter().map(|p| p.1).fold(0.0, f64::max);
        let change = (w - worst).abs() / worst;
        Some(Refinement {
            n: 2 * cfg.n,
            worst_ratio: w,
            relative_change: change,
            stable: change <= REFINE_TOLERANCE,
        })
    } else {
        None
    };
    Ok(ProbeReport {
        name: probe.key().to_string(),
        n: cfg.n,
        radius: cfg.radius,
        seed: cfg.seed,
        ensemble: cfg.ensemble,
        worst_ratio: worst,
        fitted_constant: constant.unwrap_or(worst),
        per_scale,
        exponent,
        refinement,
    })
}

type Evaluation = (Vec<(f64, f64)>, Option<ExponentFit>, Option<f64>);

fn sup(u: &[Complex64]) -> f64 {
    u.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn fit(xs: &[f64], ys: &[f64], expected: f64) -> (Option<ExponentFit>, Option<f64>) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (slope, intercept, _) = linear_fit(&lx, &ly);
    (
        Some(ExponentFit {
            fitted: slope,
            expected,
        }),
        Some(intercept.exp()),
    )
}

/// `(\int \int |u|^q dx dt)^{1/q}` over sampled times.
fn lq_spacetime(samples: &[Vec<Complex64>], tw: &[f64], grid: &RadialGrid, q: f64) -> f64 {
    samples
        .iter()
        .zip(tw)
        .map(|(u, w)| {
            w * u
                .iter()
                .zip(grid.weights())
                .map(|(v, x)| x * v.norm().powf(q))
                .sum::<f64>()
        })
        .sum::<f64>()
        .powf(1.0 / q)
}

fn evaluate(probe: Probe, cfg: &ProbeConfig, grid: &Arc<RadialGrid>, members: &[Member]) -> Result<Evaluation> {
    let t0 = cfg.window;
    match probe {
        Probe::Bernstein | Probe::RadialSobolev => {
            let mut per = Vec::new();
            for &n in &cfg.frequencies {
                let mut worst: f64 = 0.0;
                for m in members {
                    let p = lp_project(&m.sample(grid, n), FrequencyBand::Dyadic { n }, false)?;
                    let l2 = p.l2_norm();
                    let lhs = if probe == Probe::Bernstein {
                        p.linf()
                    } else {
                        p.values()
                            .iter()
                            .zip(grid.r())
                            .map(|(v, r)| r.sqrt() * v.norm())
                            .fold(0.0, f64::max)
                    };
                    let rhs = if probe == Probe::Bernstein {
                        n * l2
                    } else {
                        n.sqrt() * l2
                    };
                    worst = worst.max(lhs / rhs);
                }
                per.push((n, worst));
            }
            Ok((per, None, None))
        }
        Probe::Dispersive => {
            let times: Vec<f64> = time_nodes(0.0, t0, grid.kmax())
                .into_iter()
                .filter(|t| *t > 0.0)
                .collect();
            let mut worst: f64 = 0.0;
            for m in members {
                let f = m.sample(grid, 1.0);
                let l1 = f.lp_norm_p(1.0);
                let samples = free_samples(&f.forward(), &times);
                for (t, u) in times.iter().zip(&samples) {
                    let origin = grid.value_at_origin(&grid.forward(u)).norm();
                    worst = worst.max(t * sup(u).max(origin) / l1);
                }
            }
            Ok((vec![(1.0, worst)], None, None))
        }
        Probe::StrichartzL4 | Probe::StrichartzL2Linf | Probe::Weighted => {
            let times = time_nodes(-t0, t0, grid.kmax());
            let tw = simpson_weights(&times);
            let r_min = 2.0 / grid.kmax();
            let mut worst: f64 = 0.0;
            for m in members {
                let f = m.sample(grid, 1.0);
                let samples = free_samples(&f.forward(), &times);
                let lhs = match probe {
                    Probe::StrichartzL4 => lq_spacetime(&samples, &tw, grid, 4.0),
                    Probe::StrichartzL2Linf => samples
                        .iter()
                        .zip(&tw)
                        .map(|(u, w)| {
                            let origin = grid.value_at_origin(&grid.forward(u)).norm();
                            w * sup(u).max(origin).powi(2)
                        })
                        .sum::<f64>()
                        .sqrt(),
                    _ => samples
                        .iter()
                        .zip(&tw)
                        .map(|(u, w)| {
                            let s = u
                                .iter()
                                .zip(grid.r())
                                .filter(|(_, r)| **r >= r_min)
                                .map(|(v, r)| r.sqrt() * v.norm())
                                .fold(0.0, f64::max);
                            w * s.powi(4)
                        })
                        .sum::<f64>()
                        .powf(0.25),
                };
                worst = worst.max(lhs / f.l2_norm());
            }
            Ok((vec![(1.0, worst)], None, None))
        }
        Probe::Shao => {
            let q = cfg.q;
            if !(q > 10.0 / 3.0) {
                return Err(invalid!("the Shao probe needs q > 10/3, got {q}"));
            }
            let mut per = Vec::new();
            for &n in &cfg.frequencies {
                let span = t0 / (n * n);
                let times = time_nodes(-span, span, grid.kmax());
                let tw = simpson_weights(&times);
                let mut worst: f64 = 0.0;
                for m in members {
                    let f = m.sample(grid, n);
                    let p = lp_project(&f, FrequencyBand::Dyadic { n }, false)?;
                    let samples = free_samples(&p.forward(), &times);
                    worst = worst.max(lq_spacetime(&samples, &tw, grid, q) / f.l2_norm());
                }
                per.push((n, worst));
            }
            let xs: Vec<f64> = per.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = per.iter().map(|p| p.1).collect();
            let (e, c) = fit(&xs, &ys, 1.0 - 4.0 / q);
            Ok((per, e, c))
        }
        Probe::Bilinear => {
            let m_low = cfg.bilinear_low;
            let n_top = cfg.bilinear_ratios.iter().cloned().fold(0.0, f64::max) * m_low;
            if grid.kmax() < 2.5 * n_top {
                return Err(NlsError::OutOfRange(format!(
                    "bilinear probe needs kmax >= {:.1}, grid has {:.1}",
                    2.5 * n_top,
                    grid.kmax()
                )));
            }
            let mut per = Vec::new();
            for &ratio in &cfg.bilinear_ratios {
                let n_high = ratio * m_low;
                // stop before the fast component returns from the boundary
                let span = t0.min(grid.radius() / (5.0 * n_high));
                let times = time_nodes(-span, span, grid.kmax());
                let tw = simpson_weights(&times);
                let mut worst: f64 = 0.0;
                for (i, m) in members.iter().enumerate() {
                    let partner = &members[(i + 1) % members.len()];
                    let hi = lp_project(&m.sample(grid, n_high), FrequencyBand::Above { n: n_high }, false)?;
                    let lo = lp_project(&partner.sample(grid, m_low), FrequencyBand::AtMost { n: m_low }, false)?;
                    let (a, b) = (hi.l2_norm(), lo.l2_norm());
                    if a == 0.0 || b == 0.0 {
                        continue;
                    }
                    let us = free_samples(&hi.forward(), &times);
                    let vs = free_samples(&lo.forward(), &times);
                    let lhs = us
                        .iter()
                        .zip(&vs)
                        .zip(&tw)
                        .map(|((u, v), w)| {
                            w * u
                                .iter()
                                .zip(v)
                                .zip(grid.weights())
                                .map(|((x, y), g)| g * (x * y).norm_sqr())
                                .sum::<f64>()
                        })
                        .sum::<f64>()
                        .sqrt();
                    worst = worst.max(lhs / (a * b));
                }
                per.push((m_low / n_high, worst));
            }
            let xs: Vec<f64> = per.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = per.iter().map(|p| p.1).collect();
            let (e, c) = fit(&xs, &ys, 0.5);
            Ok((per, e, c))
        }
    }
}

/// `|t| ||e^{it Delta} f||_inf / ||f||_1` at each time.
pub fn dispersive_ratios(f: &RadialField, times: &[f64]) -> Vec<f64> {
    let grid = f.grid();
    let l1 = f.lp_norm_p(1.0);
    free_samples(&f.forward(), times)
        .iter()
        .zip(times)
        .map(|(u, t)| {
            let origin = grid.value_at_origin(&grid.forward(u)).norm();
            t.abs() * sup(u).max(origin) / l1
        })
        .collect()
}
