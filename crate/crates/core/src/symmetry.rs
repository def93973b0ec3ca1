//! Phase, Galilean, translation and scaling symmetries, time reversal, time
//! translation and the pseudoconformal map, on data and on trajectories.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, NlsError, Result};
use crate::evolution::{CartesianField, NlsField, Sample, Termination, Trajectory, UNRESOLVED_TAIL};
use crate::spectral::RadialField;

/// `[g f](x) = lambda^{-1} e^{i theta} e^{i x.xi0} f((x - x0) / lambda)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub theta: f64,
    pub xi0: [f64; 2],
    pub x0: [f64; 2],
    pub lambda: f64,
    /// Marks membership in the radial subgroup; forces zero shifts.
    #[serde(default)]
    pub radial: bool,
}

impl Default for GroupElement {
    fn default() -> Self {
        GroupElement::identity()
    }
}

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement {
            theta: 0.0,
            xi0: [0.0; 2],
            x0: [0.0; 2],
            lambda: 1.0,
            radial: true,
        }
    }

    /// Element of the radial subgroup.
    pub fn radial(theta: f64, lambda: f64) -> Self {
        GroupElement {
            theta: theta.rem_euclid(2.0 * std::f64::consts::PI),
            lambda,
            ..Self::identity()
        }
    }

    pub fn is_radial(&self) -> bool {
        self.xi0 == [0.0; 2] && self.x0 == [0.0; 2]
    }

    fn has_shifts(&self) -> bool {
        !self.is_radial()
    }

    pub fn validate(&self) -> Result<()> {
        let finite =
            self.theta.is_finite() && self.xi0.iter().chain(&self.x0).all(|v| v.is_finite()) && self.lambda.is_finite();
        if !finite || self.lambda <= 0.0 {
            return Err(invalid!("group element needs finite parameters and lambda > 0"));
        }
        if self.radial && self.has_shifts() {
            return Err(invalid!("a radial group element cannot shift position or frequency"));
        }
        Ok(())
    }

    /// `self o other`, so that `compose(g1, g2) f = g1 (g2 f)`.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let l1 = self.lambda;
        let dot = self.x0[0] * other.xi0[0] + self.x0[1] * other.xi0[1];
        GroupElement {
            theta: (self.theta + other.theta - dot / l1).rem_euclid(2.0 * std::f64::consts::PI),
            xi0: [self.xi0[0] + other.xi0[0] / l1, self.xi0[1] + other.xi0[1] / l1],
            x0: [self.x0[0] + l1 * other.x0[0], self.x0[1] + l1 * other.x0[1]],
            lambda: l1 * other.lambda,
            radial: self.radial && other.radial,
        }
    }
}

/// Fields on which the symmetry group acts.
pub trait Symmetric: NlsField {
    fn apply_group(&self, g: &GroupElement) -> Result<Self>;
    fn conj(&self) -> Self;
    fn chirp(&self, t: f64) -> Self;
}

/// Relative mass change beyond which a resampled field counts as unresolved.
const MASS_SLACK: f64 = 1e-10;

impl Symmetric for RadialField {
    fn apply_group(&self, g: &GroupElement) -> Result<Self> {
        g.validate()?;
        if !g.radial {
            return Err(invalid!("radial fields only admit elements of the radial subgroup"));
        }
        let phase = Complex64::from_polar(1.0, g.theta);
        if g.lambda == 1.0 {
            return Ok(self.scale(phase));
        }
        let out = self.dilate(g.lambda).scale(phase);
        check_mass(self.mass(), out.mass(), g.lambda)?;
        Ok(out)
    }

    fn conj(&self) -> Self {
        RadialField::conj(self)
    }

    fn chirp(&self, t: f64) -> Self {
        let mut out = self.clone();
        let r = self.grid().r().to_vec();
        for (v, r) in out.values_mut().iter_mut().zip(r) {
            *v *= Complex64::from_polar(1.0, r * r / (4.0 * t));
        }
        out
    }
}

fn check_mass(before: f64, after: f64, lambda: f64) -> Result<()> {
    if before > 0.0 && ((after - before) / before).abs() > MASS_SLACK {
        return Err(NlsError::OutOfRange(format!(
            "rescaling by {lambda} is not resolved on this grid (mass changes by {:.2e})",
            (after - before) / before
        )));
    }
    Ok(())
}

impl Symmetric for CartesianField {
    fn apply_group(&self, g: &GroupElement) -> Result<Self> {
        g.validate()?;
        let side = self.side();
        let n = self.n();
        let lattice = 2.0 * std::f64::consts::PI / side;
        for &k in &g.xi0 {
            if ((k / lattice).round() - k / lattice).abs() > 1e-9 {
                return Err(invalid!("boost {k} is not a multiple of 2 pi / L = {lattice}"));
            }
        }
        let mut out = self.clone();
        if g.lambda != 1.0 {
            out = rescale_cartesian(&out, g.lambda)?;
        }
        if g.x0 != [0.0; 2] {
            let [a, b] = g.x0;
            out.apply_multiplier(|kx, ky| Complex64::from_polar(1.0, -(kx * a + ky * b)));
        }
        let [p, q] = g.xi0;
        let theta = g.theta;
        let out = out.map(|x, y, v| v * Complex64::from_polar(1.0, theta + x * p + y * q));
        debug_assert_eq!(out.n(), n);
        Ok(out)
    }

    fn conj(&self) -> Self {
        self.map(|_, _, v| v.conj())
    }

    fn chirp(&self, t: f64) -> Self {
        self.map(|x, y, v| v * Complex64::from_polar(1.0, (x * x + y * y) / (4.0 * t)))
    }
}

/// `lambda^{-1} f(x / lambda)` by evaluating the trigonometric interpolant,
/// one dimension at a time.
fn rescale_cartesian(f: &CartesianField, lambda: f64) -> Result<CartesianField> {
    let n = f.n();
    let x = f.coords();
    let k = f.wavenumbers();
    // 1D map: samples -> interpolant at x_i / lambda
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        let target = x[i] / lambda;
        for j in 0..n {
            // sum over modes of e^{ik(target - x_j)} / n
            let mut s = Complex64::new(0.0, 0.0);
            for &kk in &k {
                s += Complex64::from_polar(1.0, kk * (target - x[j]));
            }
            // the Nyquist mode is taken symmetric
            let nyq = k[n / 2];
            s -= 0.5 * Complex64::from_polar(1.0, nyq * (target - x[j]));
            s += 0.5 * Complex64::from_polar(1.0, -nyq * (target - x[j]));
            m[i * n + j] = s / n as f64;
        }
    }
    let v = f.values();
    let mut rows = vec![Complex64::new(0.0, 0.0); n * n];
    for r in 0..n {
        for i in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                s += m[i * n + j] * v[r * n + j];
            }
            rows[r * n + i] = s;
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for c in 0..n {
        for i in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                s += m[i * n + j] * rows[j * n + c];
            }
            out[i * n + c] = s / lambda;
        }
    }
    let g = CartesianField::new(n, f.side(), out)?;
    check_mass(f.mass(), g.mass(), lambda)?;
    Ok(g)
}

/// Applies `g` to `f`.
pub fn apply_group_element<F: Symmetric>(g: &GroupElement, f: &F) -> Result<F> {
    f.apply_group(g)
}

/// Rebuilds the per-snapshot series of a transformed trajectory.
fn series_from_snapshots<F: NlsField>(mu: f64, snapshots: &[(f64, F)]) -> Vec<Sample> {
    let mut l4_cum = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    snapshots
        .iter()
        .map(|(t, u)| {
            let o = u.observe();
            let dt = prev.map(|(tp, _)| t - tp).unwrap_or(0.0);
            if let Some((tp, lp)) = prev {
                l4_cum += 0.5 * (t - tp) * (lp + o.l4_norm_4);
            }
            prev = Some((*t, o.l4_norm_4));
            Sample {
                t: *t,
                dt,
                mass: o.mass,
                energy: o.energy(mu),
                linf: o.linf,
                l4_cum,
                tail_fraction: o.tail_fraction,
            }
        })
        .collect()
}

fn rebuild<F: NlsField>(mu: f64, snapshots: Vec<(f64, F)>, termination: Termination) -> Trajectory<F> {
    Trajectory {
        mu,
        series: series_from_snapshots(mu, &snapshots),
        snapshots,
        termination,
    }
}

/// `[T_g u](t, x) = lambda^{-1} e^{i theta} e^{i x.xi0} e^{-i t |xi0|^2} u(t / lambda^2, (x - x0 - 2 xi0 t) / lambda)`.
pub fn transform_trajectory<F: Symmetric>(g: &GroupElement, traj: &Trajectory<F>) -> Result<Trajectory<F>> {
    g.validate()?;
    let l2 = g.lambda * g.lambda;
    let xi_sq = g.xi0[0] * g.xi0[0] + g.xi0[1] * g.xi0[1];
    let snapshots = traj
        .snapshots
        .iter()
        .map(|(s, u)| {
            let t = l2 * s;
            let gt = GroupElement {
                theta: g.theta - t * xi_sq,
                xi0: g.xi0,
                x0: [g.x0[0] + 2.0 * g.xi0[0] * t, g.x0[1] + 2.0 * g.xi0[1] * t],
                lambda: g.lambda,
                radial: g.radial,
            };
            Ok((t, u.apply_group(&gt)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let termination = match &traj.termination {
        Termination::Blowup(b) => {
            let mut b = b.clone();
            b.t_star *= l2;
            b.window = (b.window.0 * l2, b.window.1 * l2);
            b.resolved_until *= l2;
            Termination::Blowup(b)
        }
        other => other.clone(),
    };
    if g.xi0 != [0.0; 2] {
        // the boosted energy needs the momentum, which the series does not carry
        return Ok(rebuild(traj.mu, snapshots, termination));
    }
    // tail fractions are carried over unchanged
    let series = traj
        .series
        .iter()
        .map(|s| Sample {
            t: l2 * s.t,
            dt: l2 * s.dt,
            energy: s.energy / l2,
            linf: s.linf / g.lambda,
            ..*s
        })
        .collect();
    Ok(Trajectory {
        mu: traj.mu,
        snapshots,
        series,
        termination,
    })
}

/// `u~(t, x) = conj(u(-t, x))`.
pub fn time_reverse<F: Symmetric>(traj: &Trajectory<F>) -> Trajectory<F> {
    let snapshots: Vec<(f64, F)> = traj.snapshots.iter().rev().map(|(t, u)| (-t, u.conj())).collect();
    let termination = match &traj.termination {
        Termination::Blowup(b) => {
            let mut b = b.clone();
            b.t_star = -b.t_star;
            b.window = (-b.window.1, -b.window.0);
            b.resolved_until = -b.resolved_until;
            b.forward = !b.forward;
            Termination::Blowup(b)
        }
        other => other.clone(),
    };
    let total = traj.series.last().map(|s| s.l4_cum).unwrap_or(0.0);
    let series = (0..traj.series.len())
        .rev()
        .map(|i| {
            let s = traj.series[i];
            Sample {
                t: -s.t,
                dt: traj.series.get(i + 1).map(|n| n.dt).unwrap_or(0.0),
                l4_cum: total - s.l4_cum,
                ..s
            }
        })
        .collect();
    Trajectory {
        mu: traj.mu,
        series,
        snapshots,
        termination,
    }
}

/// `u_{t0}(t, x) = u(t + t0, x)`.
pub fn time_translate<F: Symmetric>(traj: &Trajectory<F>, t0: f64) -> Trajectory<F> {
    let snapshots: Vec<(f64, F)> = traj.snapshots.iter().map(|(t, u)| (t - t0, u.clone())).collect();
    let termination = match &traj.termination {
        Termination::Blowup(b) => {
            let mut b = b.clone();
            b.t_star -= t0;
            b.window = (b.window.0 - t0, b.window.1 - t0);
            b.resolved_until -= t0;
            Termination::Blowup(b)
        }
        other => other.clone(),
    };
    let series = traj.series.iter().map(|s| Sample { t: s.t - t0, ..*s }).collect();
    Trajectory {
        mu: traj.mu,
        snapshots,
        series,
        termination,
    }
}

/// Largest local chirp frequency `R / (2|t|)` the grid accepts.
fn check_chirp(f: &RadialField, t: f64) -> Result<()> {
    let grid = f.grid();
    let local = grid.radius() / (2.0 * t.abs());
    if local > grid.resolved_kmax() {
        return Err(NlsError::OutOfRange(format!(
            "chirp frequency {local:.3} at r = R exceeds the resolved limit {:.3}",
            grid.resolved_kmax()
        )));
    }
    Ok(())
}

/// `v(t) = |t|^{-1} e^{i r^2 / 4t} u(s, r / |t|)` at `t = -1/s`, for one snapshot.
pub fn pseudoconformal_field(u: &RadialField, s: f64) -> Result<(f64, RadialField)> {
    if s == 0.0 {
        return Err(invalid!("the pseudoconformal map is undefined at t = 0"));
    }
    let t = -1.0 / s;
    check_chirp(u, t)?;
    let dilated = u.dilate(t.abs());
    check_mass(u.mass(), dilated.mass(), t.abs())?;
    Ok((t, Symmetric::chirp(&dilated, t)))
}

/// Pseudoconformal image of a radial trajectory; maps the lifespan `I` to `-1/I`.
pub fn pseudoconformal(traj: &Trajectory<RadialField>) -> Result<Trajectory<RadialField>> {
    let times = traj.times();
    let (lo, hi) = (times[0], *times.last().unwrap());
    if lo <= 0.0 && hi >= 0.0 {
        return Err(invalid!("time interval [{lo}, {hi}] contains 0"));
    }
    let snapshots = traj
        .snapshots
        .iter()
        .map(|(s, u)| pseudoconformal_field(u, *s))
        .collect::<Result<Vec<_>>>()?;
    let termination = match &traj.termination {
        Termination::ReachedEnd => Termination::ReachedEnd,
        Termination::Blowup(b) => {
            let mut b = b.clone();
            b.t_star = if b.t_star == 0.0 {
                f64::INFINITY
            } else {
                -1.0 / b.t_star
            };
            Termination::Blowup(b)
        }
        other => other.clone(),
    };
    Ok(rebuild(traj.mu, snapshots, termination))
}

/// Closed form of the pseudoconformal image of `e^{it} Q` at time `t != 0`:
/// `|t|^{-1} e^{i r^2/4t} e^{-i/t} Q(r/|t|)`.
///
/// The chirp only matters where the profile has mass, so resolution is
/// judged on the spectral tail of the result rather than the chirp at `r = R`.
pub fn pc_soliton(q: &RadialField, t: f64) -> Result<RadialField> {
    if t == 0.0 {
        return Err(invalid!("the pseudoconformal soliton is singular at t = 0"));
    }
    let grid = q.grid().clone();
    let radii: Vec<f64> = grid.r().iter().map(|r| r / t.abs()).collect();
    let vals = q.evaluate(&radii);
    let phase = -1.0 / t;
    let values = vals
        .iter()
        .zip(grid.r())
        .map(|(v, r)| v / t.abs() * Complex64::from_polar(1.0, r * r / (4.0 * t) + phase))
        .collect();
    let out = RadialField::new(grid, values)?;
    let tail = out.observe().tail_fraction;
    if tail > UNRESOLVED_TAIL {
        return Err(NlsError::OutOfRange(format!(
            "pseudoconformal soliton at t = {t} is not resolved (tail fraction {tail:.2e})"
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_is_associative_and_has_identity() {
        let a = GroupElement {
            theta: 0.3,
            xi0: [1.0, -0.5],
            x0: [0.2, 0.7],
            lambda: 1.7,
            radial: false,
        };
        let b = GroupElement {
            theta: 2.1,
            xi0: [0.0, 2.0],
            x0: [-1.0, 0.1],
            lambda: 0.6,
            radial: false,
        };
        let c = GroupElement::radial(1.0, 3.0);
        let l = a.compose(&b).compose(&c);
        let r = a.compose(&b.compose(&c));
        assert!((l.lambda - r.lambda).abs() < 1e-12);
        assert!((l.theta - r.theta).abs() < 1e-12);
        for i in 0..2 {
            assert!((l.xi0[i] - r.xi0[i]).abs() < 1e-12);
            assert!((l.x0[i] - r.x0[i]).abs() < 1e-12);
        }
        assert_eq!(a.compose(&GroupElement::identity()).lambda, a.lambda);
    }

    #[test]
    fn validation() {
        assert!(GroupElement::radial(0.0, 0.0).validate().is_err());
        assert!(GroupElement::radial(0.0, -1.0).validate().is_err());
        assert!(GroupElement::radial(f64::NAN, 1.0).validate().is_err());
    }
}
