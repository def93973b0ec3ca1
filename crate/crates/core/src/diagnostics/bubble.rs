use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, NlsError, Result};
use crate::evolution::{simpson_weights, Trajectory};
use crate::spectral::{lp_project, FrequencyBand, RadialField, SpectralField};
use crate::symmetry::GroupElement;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationSample {
    pub t: f64,
    pub radius: f64,
    pub mass: f64,
    pub running_max: f64,
}

/// Mass within `c_window (T* - t)^{1/2}` for the last `k` snapshots before the
/// fitted blowup time.
pub fn concentration_mass(traj: &Trajectory<RadialField>, c_window: f64, k: usize) -> Result<Vec<ConcentrationSample>> {
    let fit = traj
        .blowup()
        .ok_or_else(|| invalid!("concentration needs a trajectory that blows up"))?;
    if !(c_window > 0.0) || k == 0 {
        return Err(invalid!("need c_window > 0 and k >= 1"));
    }
    let before: Vec<&(f64, RadialField)> = traj.snapshots.iter().filter(|(t, _)| *t < fit.t_star).collect();
    let start = before.len().saturating_sub(k);
    let mut running: f64 = 0.0;
    Ok(before[start..]
        .iter()
        .map(|(t, u)| {
            let radius = if c_window.is_infinite() {
                f64::INFINITY
            } else {
                c_window * (fit.t_star - t).sqrt()
            };
            let mass = u.mass_within(radius);
            running = running.max(mass);
            ConcentrationSample {
                t: *t,
                radius,
                mass,
                running_max: running,
            }
        })
        .collect())
}

/// Time nodes on `[a, b]`, geometrically refined towards `t = 0` when the
/// interval contains it (free waves change fastest near the data).
pub fn time_nodes(a: f64, b: f64, kmax: f64) -> Vec<f64> {
    const PER_OCTAVE: f64 = 12.0;
    let mut nodes = Vec::new();
    let span = b - a;
    let tau_min = (0.01 / (kmax * kmax)).min(span * 1e-3);
    let push_side = |lo: f64, hi: f64, sign: f64, nodes: &mut Vec<f64>| {
        // distances from 0 in [lo, hi]
        if hi <= lo {
            return;
        }
        let start = lo.max(tau_min);
        let octaves = (hi / start).log2().max(0.0);
        let count = (octaves * PER_OCTAVE).ceil().max(8.0) as usize;
        for i in 0..=count {
            nodes.push(sign * start * (hi / start).powf(i as f64 / count as f64));
        }
    };
    if a < 0.0 && b > 0.0 {
        nodes.push(0.0);
        push_side(0.0, -a, -1.0, &mut nodes);
        push_side(0.0, b, 1.0, &mut nodes);
    } else if a >= 0.0 {
        if a == 0.0 {
            nodes.push(0.0);
        }
        push_side(a, b, 1.0, &mut nodes);
        nodes.push(a);
    } else {
        if b == 0.0 {
            nodes.push(0.0);
        }
        push_side(-b, -a, -1.0, &mut nodes);
        nodes.push(b);
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (1.0 + y.abs()));
    nodes
}

/// `e^{it Delta} f` at each node, in one batched synthesis.
pub fn free_samples(f: &SpectralField, times: &[f64]) -> Vec<Vec<Complex64>> {
    let grid = f.grid();
    let xi = grid.xi();
    let coeffs: Vec<Vec<Complex64>> = times
        .iter()
        .map(|t| {
            f.coeffs()
                .iter()
                .zip(xi)
                .map(|(c, x)| c * Complex64::from_polar(1.0, -t * x * x))
                .collect()
        })
        .collect();
    grid.inverse_many(&coeffs)
}

/// `\int_a^b \int |e^{it Delta} f|^4 dx dt`.
pub fn free_l4(f: &RadialField, interval: (f64, f64)) -> Result<f64> {
    let (a, b) = interval;
    if !(b > a) {
        return Err(invalid!("empty time interval [{a}, {b}]"));
    }
    let grid = f.grid();
    let times = time_nodes(a, b, grid.kmax());
    let w = simpson_weights(&times);
    let samples = free_samples(&f.forward(), &times);
    Ok(samples
        .iter()
        .zip(&w)
        .map(|(u, wt)| {
            wt * u
                .iter()
                .zip(grid.weights())
                .map(|(v, w)| w * v.norm_sqr().powi(2))
                .sum::<f64>()
        })
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub t0: f64,
    pub x0: [f64; 2],
    pub xi0: [f64; 2],
    /// Dyadic frequency carrying the largest free `L^4` norm.
    pub frequency: f64,
    pub radius: f64,
    pub mass_in_ball: f64,
    /// `J`.
    pub window: (f64, f64),
    /// Radius at which `|e^{i t0 Delta} f_M|` peaks (the ball is still centred at 0).
    pub peak_radius: f64,
    /// `(M, \int\int |e^{it Delta} f_M|^4)` for every scanned `M`.
    pub scan: Vec<(f64, f64)>,
}

pub const BUBBLE_C: f64 = 2.0;

fn dyadic_range(f: &RadialField) -> Vec<f64> {
    let grid = f.grid();
    let lo = (1.0 / grid.radius()).log2().floor() as i32;
    let hi = (grid.kmax() / (1.0 + crate::spectral::BRIDGE)).log2().floor() as i32;
    (lo..=hi).map(|k| 2f64.powi(k)).collect()
}

/// Locates a concentrated piece of the free evolution of `phi`: scans dyadic
/// `M`, picks the one with the largest free `L^4` norm on `interval`, finds
/// the spacetime maximum of `|e^{it Delta} phi_M|` and reports the ball of
/// radius `c / M` about the origin at that time.
pub fn find_bubble(phi: &RadialField, interval: (f64, f64), eta: f64, c: f64) -> Result<Bubble> {
    if !(eta > 0.0) || !(c > 0.0) {
        return Err(invalid!("need eta > 0 and c > 0"));
    }
    let total = free_l4(phi, interval)?;
    if total < eta {
        return Err(NlsError::HypothesisNotMet(format!(
            "free L4 norm {total:.3e} is below eta = {eta:.3e}"
        )));
    }
    let grid = phi.grid().clone();
    let times = time_nodes(interval.0, interval.1, grid.kmax());
    let w = simpson_weights(&times);
    let mut scan = Vec::new();
    let mut best: Option<(f64, f64, Vec<Vec<Complex64>>)> = None;
    for m in dyadic_range(phi) {
        let piece = lp_project(phi, FrequencyBand::Dyadic { n: m }, false)?;
        let samples = free_samples(&piece.forward(), &times);
        let l4: f64 = samples
            .iter()
            .zip(&w)
            .map(|(u, wt)| {
                wt * u
                    .iter()
                    .zip(grid.weights())
                    .map(|(v, w)| w * v.norm_sqr().powi(2))
                    .sum::<f64>()
            })
            .sum();
        scan.push((m, l4));
        if best.as_ref().map(|b| l4 > b.1).unwrap_or(true) {
            best = Some((m, l4, samples));
        }
    }
    let (m, _, samples) = best.ok_or_else(|| invalid!("grid admits no dyadic frequency"))?;
    let mut peak = (0usize, 0usize, -1.0);
    for (i, u) in samples.iter().enumerate() {
        for (k, v) in u.iter().enumerate() {
            if v.norm() > peak.2 {
                peak = (i, k, v.norm());
            }
        }
    }
    let t0 = times[peak.0];
    let radius = c / m;
    let at_t0 = crate::spectral::free_evolve(phi, t0);
    let half = 1.0 / (m * m);
    Ok(Bubble {
        t0,
        x0: [0.0; 2],
        xi0: [0.0; 2],
        frequency: m,
        radius,
        mass_in_ball: at_t0.mass_within(radius),
        window: ((t0 - half).max(interval.0), (t0 + half).min(interval.1)),
        peak_radius: grid.r()[peak.1],
        scan,
    })
}

#[derive(Clone, Debug)]
pub struct Profile {
    /// The extracted piece at time 0, before renormalisation.
    pub field: RadialField,
    pub element: GroupElement,
    pub time: f64,
    pub mass: f64,
}

impl Profile {
    /// `g_j^{-1}` applied to the piece.
    pub fn renormalized(&self) -> Result<RadialField> {
        use crate::symmetry::Symmetric;
        self.field
            .apply_group(&GroupElement::radial(-self.element.theta, 1.0 / self.element.lambda))
    }
}

#[derive(Clone, Debug)]
pub struct ProfileDecomposition {
    pub profiles: Vec<Profile>,
    pub remainder: RadialField,
    pub mass_decoupling_gap: f64,
    pub remainder_l4: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// Reference interval for the free `L^4` norms.
    pub interval: (f64, f64),
    /// Each piece is the sharp frequency band `[M / K, K M]` around the bubble.
    pub band_factor: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            interval: (0.0, 1.0),
            band_factor: 8.0,
        }
    }
}

/// Greedy radial extraction on the last element of `sequence`: find a
/// bubble, cut out the frequency band around its scale, repeat on the
/// remainder until its free `L^4` norm drops below `tol` or `max_j` pieces
/// have been taken.
pub fn extract_profiles(
    sequence: &[RadialField],
    max_j: usize,
    tol: f64,
    opts: &ProfileOptions,
) -> Result<ProfileDecomposition> {
    let f = sequence.last().ok_or_else(|| invalid!("empty sequence"))?;
    if sequence.iter().any(|g| !g.is_finite()) {
        return Err(invalid!("sequence contains non-finite values"));
    }
    if !(tol > 0.0) || !(opts.band_factor > 1.0) {
        return Err(invalid!("need tol > 0 and band_factor > 1"));
    }
    let total = f.mass();
    let mut w = f.clone();
    let mut profiles = Vec::new();
    let mut rem_l4 = free_l4(&w, opts.interval)?;
    while profiles.len() < max_j && rem_l4 >= tol {
        let bubble = find_bubble(&w, opts.interval, tol, BUBBLE_C)?;
        let m = bubble.frequency;
        let (lo, hi) = (m / opts.band_factor, m * opts.band_factor);
        let piece = w
            .forward()
            .apply_multiplier(|x| Complex64::new(if x >= lo && x <= hi { 1.0 } else { 0.0 }, 0.0))
            .inverse();
        let pm = piece.mass();
        if pm <= 1e-12 * total {
            break;
        }
        w = w.sub(&piece)?;
        profiles.push(Profile {
            field: piece,
            element: GroupElement::radial(0.0, bubble.radius),
            time: bubble.t0,
            mass: pm,
        });
        rem_l4 = free_l4(&w, opts.interval)?;
    }
    let gap = (total - profiles.iter().map(|p| p.mass).sum::<f64>() - w.mass()).abs();
    Ok(ProfileDecomposition {
        profiles,
        remainder: w,
        mass_decoupling_gap: gap,
        remainder_l4: rem_l4,
    })
}
