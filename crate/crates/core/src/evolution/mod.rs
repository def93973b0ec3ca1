//! Split-step integration of `i u_t + Delta u = mu |u|^2 u`.
//!
//! One Strang step is: half a step of the exact linear flow (diagonal in
//! frequency), the exact nonlinear phase `u <- exp(-i mu |u|^2 dt) u`, and
//! another linear half step.

mod cartesian;
mod duhamel;
mod radial;

use serde::{Deserialize, Serialize};

pub use cartesian::CartesianField;
pub use duhamel::{duhamel_residual, simpson_weights};

use crate::error::{invalid, NlsError, Result};

/// Per-instant observables, all from one spectral evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub mass: f64,
    pub grad_norm_sq: f64,
    pub l4_norm_4: f64,
    pub linf: f64,
    /// Fraction of the mass carried by unresolved frequencies.
    pub tail_fraction: f64,
}

impl Observables {
    pub fn energy(&self, mu: f64) -> f64 {
        0.5 * self.grad_norm_sq + 0.25 * mu * self.l4_norm_4
    }
}

/// A field the split-step integrator can advance.
pub trait NlsField: Clone + Send + Sync {
    fn observe(&self) -> Observables;

    /// One Strang step of size `dt` (negative `dt` runs backwards).
    fn strang_step(&mut self, dt: f64, mu: f64);

    fn is_finite(&self) -> bool;

    /// `e^{i t Delta}` applied in place.
    fn free_evolve(&mut self, t: f64);

    fn l2_distance(&self, other: &Self) -> Result<f64>;
}

/// One Strang step; refuses non-finite output.
pub fn step_nls<F: NlsField>(u: &F, dt: f64, mu: f64) -> Result<F> {
    if !(dt.is_finite() && dt != 0.0) {
        return Err(invalid!("time step must be finite and nonzero, got {dt}"));
    }
    let mut v = u.clone();
    v.strang_step(dt, mu);
    if !v.is_finite() {
        return Err(NlsError::NumericFailure("non-finite values after a step".into()));
    }
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Radial,
    Cartesian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolveConfig {
    /// `+1` defocusing, `-1` focusing.
    pub mu: f64,
    pub dt0: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub adaptive: bool,
    /// Adaptive step `dt = min(dt0, c_a / |u|_inf^2)`.
    pub c_a: f64,
    /// Default: `1e6 * |u0|_inf`.
    pub blowup_linf_threshold: Option<f64>,
    pub snapshot_stride: usize,
    pub backend: Backend,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            mu: -1.0,
            dt0: 1e-3,
            t_start: 0.0,
            t_end: 1.0,
            adaptive: false,
            c_a: 0.1,
            blowup_linf_threshold: None,
            snapshot_stride: 10,
            backend: Backend::Radial,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu != 1.0 && self.mu != -1.0 {
            return Err(invalid!("mu must be +1 or -1, got {}", self.mu));
        }
        if !(self.dt0 > 0.0 && self.dt0.is_finite()) {
            return Err(invalid!("dt0 must be positive, got {}", self.dt0));
        }
        if !(self.t_end > self.t_start) {
            return Err(invalid!(
                "t_end ({}) must exceed t_start ({})",
                self.t_end,
                self.t_start
            ));
        }
        if !(self.c_a > 0.0) {
            return Err(invalid!("c_a must be positive"));
        }
        if let Some(th) = self.blowup_linf_threshold {
            if !(th > 0.0) {
                return Err(invalid!("blowup threshold must be positive"));
            }
        }
        if self.snapshot_stride == 0 {
            return Err(invalid!("snapshot stride must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub energy: f64,
    pub linf: f64,
    /// `\int_{t_start}^t \int |u|^4 dx ds`.
    pub l4_cum: f64,
    pub tail_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    pub t_star: f64,
    /// Fitted `p` in `|u|_inf ~ (T* - t)^{-p}`.
    pub exponent: f64,
    pub window: (f64, f64),
    /// Last time at which the solution was still resolved on the grid.
    pub resolved_until: f64,
    pub trigger: String,
    /// `false` when the singularity lies in the past (time-reversed runs).
    #[serde(default = "yes")]
    pub forward: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    ReachedEnd,
    Blowup(BlowupFit),
    /// The trajectory stops at the last good snapshot.
    NumericFailure {
        message: String,
    },
}

#[derive(Clone, Debug)]
pub struct Trajectory<F = crate::spectral::RadialField> {
    pub mu: f64,
    pub snapshots: Vec<(f64, F)>,
    pub series: Vec<Sample>,
    pub termination: Termination,
}

impl<F: NlsField> Trajectory<F> {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|(t, _)| *t).collect()
    }

    pub fn blowup(&self) -> Option<&BlowupFit> {
        match &self.termination {
            Termination::Blowup(b) => Some(b),
            _ => None,
        }
    }

    /// Snapshot whose time is closest to `t`.
    pub fn nearest(&self, t: f64) -> Option<&(f64, F)> {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
    }
}

/// Spectral tail above which a focusing solution is declared unresolved.
pub const UNRESOLVED_TAIL: f64 = 1e-8;
/// Growth of `|u|_inf` over its initial value required before loss of
/// resolution counts as blowup rather than a bad grid.
pub const BLOWUP_GROWTH: f64 = 3.0;

/// Runs the split-step scheme from `cfg.t_start` to `cfg.t_end`.
///
/// Blowup is declared when either `|u|_inf` passes the threshold while the
/// adaptive step has fallen below `1e-12`, or the solution leaves the
/// resolved band after `|u|_inf` has grown by [`BLOWUP_GROWTH`]; both need a
/// successful fit of `T*`.
pub fn evolve<F: NlsField>(u0: &F, cfg: &EvolveConfig) -> Result<Trajectory<F>> {
    cfg.validate()?;
    if !u0.is_finite() {
        return Err(invalid!("initial data contains non-finite values"));
    }
    let mu = cfg.mu;
    let obs0 = u0.observe();
    if obs0.tail_fraction > UNRESOLVED_TAIL {
        return Err(invalid!(
            "initial data is not resolved (spectral tail fraction {:.2e})",
            obs0.tail_fraction
        ));
    }
    let threshold = cfg
        .blowup_linf_threshold
        .unwrap_or(1e6 * obs0.linf.max(f64::MIN_POSITIVE));
    let mut u = u0.clone();
    let mut t = cfg.t_start;
    let mut obs = obs0;
    let mut l4_cum = 0.0;
    let mut series = vec![Sample {
        t,
        dt: 0.0,
        mass: obs.mass,
        energy: obs.energy(mu),
        linf: obs.linf,
        l4_cum,
        tail_fraction: obs.tail_fraction,
    }];
    let mut snapshots = vec![(t, u.clone())];
    let mut step = 0usize;
    // absorbs rounding in the accumulated time
    let eps = 1e-6 * cfg.dt0;

    let termination = loop {
        if t >= cfg.t_end - eps {
            break Termination::ReachedEnd;
        }
        let mut dt = cfg.dt0;
        if cfg.adaptive && obs.linf > 0.0 {
            dt = dt.min(cfg.c_a / (obs.linf * obs.linf));
        }
        if t + dt > cfg.t_end - eps {
            dt = cfg.t_end - t;
        }
        if obs.linf > threshold && dt < 1e-12 {
            match fit_blowup(&series, "sup-norm threshold") {
                Some(fit) => break Termination::Blowup(fit),
                None => {
                    break Termination::NumericFailure {
                        message: "sup-norm threshold passed but no blowup time could be fitted".into(),
                    }
                }
            }
        }
        let mut next = u.clone();
        next.strang_step(dt, mu);
        if !next.is_finite() {
            break Termination::NumericFailure {
                message: format!("non-finite values at t = {}", t + dt),
            };
        }
        let next_obs = next.observe();
        if next_obs.tail_fraction > UNRESOLVED_TAIL {
            if next_obs.linf >= BLOWUP_GROWTH * obs0.linf {
                match fit_blowup(&series, "loss of resolution") {
                    Some(fit) => break Termination::Blowup(fit),
                    None => {
                        break Termination::NumericFailure {
                            message: format!("resolution lost at t = {} without a blowup fit", t + dt),
                        }
                    }
                }
            }
            break Termination::NumericFailure {
                message: format!(
                    "resolution lost at t = {} (tail {:.2e}) without focusing",
                    t + dt,
                    next_obs.tail_fraction
                ),
            };
        }
        l4_cum += 0.5 * dt * (obs.l4_norm_4 + next_obs.l4_norm_4);
        t = if (t + dt - cfg.t_end).abs() <= eps {
            cfg.t_end
        } else {
            t + dt
        };
        u = next;
        obs = next_obs;
        step += 1;
        series.push(Sample {
            t,
            dt,
            mass: obs.mass,
            energy: obs.energy(mu),
            linf: obs.linf,
            l4_cum,
            tail_fraction: obs.tail_fraction,
        });
        if step % cfg.snapshot_stride == 0 || t >= cfg.t_end - eps {
            snapshots.push((t, u.clone()));
        }
    };
    if snapshots.last().map(|s| s.0) != Some(t) {
        snapshots.push((t, u));
    }
    Ok(Trajectory {
        mu,
        snapshots,
        series,
        termination,
    })
}

/// Fits `log |u|_inf = c - p log(T* - t)` over the last decade of growth,
/// with `T*` found by golden-section search on the regression residual.
pub fn fit_blowup(series: &[Sample], trigger: &str) -> Option<BlowupFit> {
    let last = series.last()?;
    let floor = last.linf / 10.0;
    let start = series.iter().rposition(|s| s.linf < floor).map(|i| i + 1).unwrap_or(0);
    let window: Vec<(f64, f64)> = series[start..].iter().map(|s| (s.t, s.linf.ln())).collect();
    if window.len() < 8 {
        return None;
    }
    let t_last = last.t;
    let span = t_last - window[0].0;
    if span <= 0.0 {
        return None;
    }
    let fit_at = |t_star: f64| -> (f64, f64) {
        let xs: Vec<f64> = window.iter().map(|(t, _)| (t_star - t).ln()).collect();
        let ys: Vec<f64> = window.iter().map(|(_, y)| *y).collect();
        let (slope, _, sse) = linear_fit(&xs, &ys);
        (sse, -slope)
    };
    // golden-section search over log(T* - t_last), from just past the last
    // sample to a few window spans beyond it
    let to_t = |s: f64| t_last + s.exp();
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut la, mut lb) = ((1e-9 * span).ln(), (4.0 * span).ln());
    let mut c = lb - g * (lb - la);
    let mut d = la + g * (lb - la);
    for _ in 0..200 {
        if fit_at(to_t(c)).0 < fit_at(to_t(d)).0 {
            lb = d;
        } else {
            la = c;
        }
        c = lb - g * (lb - la);
        d = la + g * (lb - la);
        if (lb - la).abs() < 1e-12 {
            break;
        }
    }
    let (a, b) = (to_t(la), to_t(lb));
    let t_star = 0.5 * (a + b);
    let (_, exponent) = fit_at(t_star);
    if !(exponent.is_finite() && exponent > 0.0) {
        return None;
    }
    Some(BlowupFit {
        t_star,
        exponent,
        window: (window[0].0, t_last),
        resolved_until: t_last,
        trigger: trigger.to_string(),
        forward: true,
    })
}

/// Least squares `y = slope x + intercept`; returns `(slope, intercept, sse)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    (slope, intercept, sse)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_synthetic_law() {
        let t_star = 0.37;
        let series: Vec<Sample> = (0..400)
            .map(|i| {
                let t = t_star - 0.3 * (1.0 - i as f64 / 400.0).powi(3) - 1e-4;
                Sample {
                    t,
                    dt: 0.0,
                    mass: 1.0,
                    energy: 0.0,
                    linf: 2.0 * (t_star - t).powf(-0.5),
                    l4_cum: 0.0,
                    tail_fraction: 0.0,
                }
            })
            .collect();
        let fit = fit_blowup(&series, "test").unwrap();
        assert!((fit.t_star - t_star).abs() < 1e-6, "{}", fit.t_star);
        assert!((fit.exponent - 0.5).abs() < 1e-6);
    }

    #[test]
    fn config_validation() {
        let mut cfg = EvolveConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.mu = 0.5;
        assert!(cfg.validate().is_err());
        cfg = EvolveConfig {
            dt0: -1.0,
            ..EvolveConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
