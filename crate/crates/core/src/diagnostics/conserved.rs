use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::evolution::{NlsField, Termination, Trajectory};
use crate::spectral::RadialField;

/// `M(f) = \int |f|^2`.
pub fn mass(f: &RadialField) -> f64 {
    f.mass()
}

/// `E(f) = \int 1/2 |grad f|^2 + mu/4 |f|^4`, gradient taken spectrally.
pub fn energy(f: &RadialField, mu: f64) -> f64 {
    0.5 * f.grad_norm_sq() + 0.25 * mu * f.l4_norm_4()
}

fn l4_cum_at<F>(traj: &Trajectory<F>, t: f64) -> f64 {
    let s = &traj.series;
    let i = s.partition_point(|x| x.t < t);
    if i == 0 {
        return s[0].l4_cum;
    }
    if i == s.len() {
        return s[s.len() - 1].l4_cum;
    }
    let (a, b) = (&s[i - 1], &s[i]);
    if b.t == a.t {
        return b.l4_cum;
    }
    a.l4_cum + (t - a.t) / (b.t - a.t) * (b.l4_cum - a.l4_cum)
}

/// `\int_a^b \int |u|^4 dx dt`, read off the per-step cumulative series
/// (linear interpolation between steps).
pub fn strichartz_accumulate<F>(traj: &Trajectory<F>, interval: (f64, f64)) -> Result<f64> {
    let (a, b) = interval;
    let (Some(first), Some(last)) = (traj.series.first(), traj.series.last()) else {
        return Err(invalid!("trajectory has no samples"));
    };
    let slack = 1e-9 * (1.0 + last.t.abs().max(first.t.abs()));
    if !(a <= b) || a < first.t - slack || b > last.t + slack {
        return Err(invalid!("interval [{a}, {b}] is not inside [{}, {}]", first.t, last.t));
    }
    Ok(l4_cum_at(traj, b) - l4_cum_at(traj, a))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScatteringReport<F> {
    pub scatters: bool,
    /// `e^{-i t_end Delta} u(t_end)`.
    #[serde(skip)]
    pub u_plus: Option<F>,
    /// `max_{i,j} ||v(t_i) - v(t_j)||_2` over the tail snapshots.
    pub cauchy_gap: f64,
    /// `\int |u|^4` per unit time over the first and second half of the tail.
    pub l4_rates: (f64, f64),
    pub tail_times: Vec<f64>,
}

/// Pulls the last `k` snapshots back by the free flow and measures how far
/// they are from a single asymptotic state.
pub fn scattering_test<F: NlsField>(traj: &Trajectory<F>, k: usize, tol: f64) -> Result<ScatteringReport<F>> {
    match traj.termination {
        Termination::ReachedEnd => {}
        _ => return Err(invalid!("scattering needs a trajectory that reached its end time")),
    }
    if k < 2 || traj.snapshots.len() < k {
        return Err(invalid!(
            "need at least 2 and at most {} tail snapshots, got {k}",
            traj.snapshots.len()
        ));
    }
    let tail = &traj.snapshots[traj.snapshots.len() - k..];
    let pulled: Vec<F> = tail
        .iter()
        .map(|(t, u)| {
            let mut v = u.clone();
            v.free_evolve(-t);
            v
        })
        .collect();
    let mut gap: f64 = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            gap = gap.max(pulled[i].l2_distance(&pulled[j])?);
        }
    }
    let t0 = tail[0].0;
    let t1 = tail[k - 1].0;
    let tm = 0.5 * (t0 + t1);
    let rate = |a: f64, b: f64| -> Result<f64> {
        if b > a {
            Ok(strichartz_accumulate(traj, (a, b))? / (b - a))
        } else {
            Ok(0.0)
        }
    };
    let rates = (rate(t0, tm)?, rate(tm, t1)?);
    let decaying = rates.1 <= rates.0 * (1.0 + 1e-12) + 1e-300;
    Ok(ScatteringReport {
        scatters: gap <= tol && decaying,
        u_plus: pulled.last().cloned(),
        cauchy_gap: gap,
        l4_rates: rates,
        tail_times: tail.iter().map(|(t, _)| *t).collect(),
    })
}
