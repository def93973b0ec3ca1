use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::evolution::{linear_fit, Trajectory};
use crate::spectral::RadialField;

/// Refinement step of the scale grid: `N` ranges over `2^{k/4}`.
pub const REFINE: f64 = 0.25;
pub const DEFAULT_ETA: f64 = 0.01;
pub const MODULUS_ETAS: [f64; 3] = [0.1, 0.01, 0.001];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSample {
    pub t: f64,
    /// Frequency scale.
    pub n: f64,
    pub x: [f64; 2],
    pub xi: [f64; 2],
    /// Smallest frequency with tail mass at most `eta M` beyond it.
    pub freq_radius: f64,
    /// Smallest radius with mass at most `eta M` outside it.
    pub space_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSeries {
    pub eta: f64,
    pub samples: Vec<ScaleSample>,
    /// `(eta', C_hat(eta'))`.
    pub c_hat: Vec<(f64, f64)>,
}

impl ScaleSeries {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn n_values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.n).collect()
    }
}

/// Smallest frequency `k` with `\int_{|xi| > k} |f^|^2 <= eta M`.
fn frequency_radius(f: &RadialField, eta: f64) -> f64 {
    let spec = f.forward();
    let grid = f.grid();
    let w = grid.xi_weights();
    let xi = grid.xi();
    let m: Vec<f64> = spec.coeffs().iter().zip(w).map(|(c, w)| w * c.norm_sqr()).collect();
    radius_from_masses(&m, xi, eta)
}

/// Smallest radius `r` with `\int_{|x| > r} |f|^2 <= eta M`.
fn space_radius(f: &RadialField, eta: f64) -> f64 {
    let grid = f.grid();
    let m: Vec<f64> = f
        .values()
        .iter()
        .zip(grid.weights())
        .map(|(v, w)| w * v.norm_sqr())
        .collect();
    radius_from_masses(&m, grid.r(), eta)
}

fn radius_from_masses(m: &[f64], nodes: &[f64], eta: f64) -> f64 {
    let total: f64 = m.iter().sum();
    if total == 0.0 {
        return nodes[0];
    }
    let mut tail = 0.0;
    for i in (0..m.len()).rev() {
        if tail + m[i] > eta * total {
            return nodes[i];
        }
        tail += m[i];
    }
    nodes[0]
}

fn snap_to_grid(n: f64) -> f64 {
    2f64.powf((n.log2() / REFINE).round() * REFINE)
}

/// `N(t)` balancing the two tails: with `k_eta` and `r_eta` the frequency and
/// space radii, `N = sqrt(k_eta / r_eta)` makes the single constant
/// `C = max(k_eta / N, N r_eta)` as small as possible; `N` is then rounded to
/// the `2^{k/4}` grid.  On the radial backend `x = xi = 0`.
pub fn scale_functions(traj: &Trajectory<RadialField>, eta: f64) -> Result<ScaleSeries> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(invalid!("eta must lie in (0, 0.5), got {eta}"));
    }
    let mut samples = Vec::with_capacity(traj.snapshots.len());
    for (t, u) in &traj.snapshots {
        let kmax = u.grid().kmax();
        let k = frequency_radius(u, eta);
        let r = space_radius(u, eta);
        let n = snap_to_grid((k / r).sqrt()).min(kmax);
        samples.push(ScaleSample {
            t: *t,
            n,
            x: [0.0; 2],
            xi: [0.0; 2],
            freq_radius: k,
            space_radius: r,
        });
    }
    let mut c_hat = Vec::new();
    for &e in &MODULUS_ETAS {
        let mut c: f64 = 0.0;
        for ((_, u), s) in traj.snapshots.iter().zip(&samples) {
            let k = frequency_radius(u, e);
            let r = space_radius(u, e);
            c = c.max(k / s.n).max(s.n * r);
        }
        c_hat.push((e, c));
    }
    Ok(ScaleSeries { eta, samples, c_hat })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SolitonLike,
    Cascade,
    SelfSimilar,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub scenario: Scenario,
    pub max_over_min: f64,
    /// Slope and `R^2` of `log N` against `log t`, when all times are positive.
    pub slope: Option<(f64, f64)>,
}

pub const MIN_SAMPLES: usize = 50;

/// Decision rules, in order: soliton-like when `max N / min N <= 4`;
/// self-similar when `log N` against `log t` has slope in `[-0.6, -0.4]`
/// with `R^2 >= 0.9`; cascade when `max N <= 4 median` and both window ends
/// fall below a quarter of the median; otherwise inconclusive.
pub fn classify_scenario(scales: &ScaleSeries) -> Result<Classification> {
    let n = scales.samples.len();
    if n < MIN_SAMPLES {
        return Err(invalid!("need at least {MIN_SAMPLES} samples, got {n}"));
    }
    let ns = scales.n_values();
    let max = ns.iter().cloned().fold(f64::MIN, f64::max);
    let min = ns.iter().cloned().fold(f64::MAX, f64::min);
    let ratio = max / min;
    let times = scales.times();
    let slope = if times.iter().all(|&t| t > 0.0) {
        let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
        let ys: Vec<f64> = ns.iter().map(|v| v.ln()).collect();
        let (b, _, sse) = linear_fit(&xs, &ys);
        let my = ys.iter().sum::<f64>() / n as f64;
        let sst: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let r2 = if sst > 0.0 { 1.0 - sse / sst } else { 0.0 };
        Some((b, r2))
    } else {
        None
    };
    let mut sorted = ns.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[n / 2];
    let scenario = if ratio <= 4.0 {
        Scenario::SolitonLike
    } else if matches!(slope, Some((b, r2)) if (-0.6..=-0.4).contains(&b) && r2 >= 0.9) {
        Scenario::SelfSimilar
    } else if max <= 4.0 * median && ns[0] < 0.25 * median && ns[n - 1] < 0.25 * median {
        Scenario::Cascade
    } else {
        Scenario::Inconclusive
    };
    Ok(Classification {
        scenario,
        max_over_min: ratio,
        slope,
    })
}

/// Fitted exponent `p` in `N(t) ~ (T* - t)^p` over samples with `t < T*`.
pub fn fit_scale_exponent(scales: &ScaleSeries, t_star: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = scales
        .samples
        .iter()
        .filter(|s| s.t < t_star)
        .map(|s| ((t_star - s.t).ln(), s.n.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(invalid!("need at least 3 samples before T*"));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Ok(linear_fit(&xs, &ys).0)
}
