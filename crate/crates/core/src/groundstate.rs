//! The ground state `Q` of `Delta Q + Q^3 = Q` in the plane and the sharp
//! Gagliardo-Nirenberg ratio it saturates.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::bessel_k01;
use crate::error::{invalid, NlsError, Result};
use crate::ode::Dopri5;
use crate::spectral::{RadialField, RadialGrid};

/// Reference value of `||Q||_2^2`, used when no computed ground state is at hand.
pub const MASS_Q: f64 = 11.700_896_524_56;

/// Reference value of `Q(0)`.
pub const Q0: f64 = 2.206_200_864_65;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Shooting,
    GradientFlow,
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub profile: RadialField,
    pub mass: f64,
    pub grad_norm_sq: f64,
    pub l4_norm_4: f64,
    pub q0: f64,
    pub method: Method,
    pub residual: f64,
}

/// JSON summary written next to a ground-state snapshot.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GroundStateReport {
    pub mass: f64,
    pub grad_norm_sq: f64,
    pub l4_norm_4: f64,
    pub q0: f64,
    pub residual: f64,
    pub gn_at_q: f64,
}

impl GroundState {
    fn from_profile(profile: RadialField, q0: f64, method: Method) -> GroundState {
        let residual = equation_residual(&profile);
        GroundState {
            mass: profile.mass(),
            grad_norm_sq: profile.grad_norm_sq(),
            l4_norm_4: profile.l4_norm_4(),
            q0,
            method,
            residual,
            profile,
        }
    }

    /// `E(Q) = |grad Q|^2 / 2 - \int Q^4 / 4` (focusing energy).
    pub fn energy(&self) -> f64 {
        0.5 * self.grad_norm_sq - 0.25 * self.l4_norm_4
    }

    pub fn report(&self) -> GroundStateReport {
        GroundStateReport {
            mass: self.mass,
            grad_norm_sq: self.grad_norm_sq,
            l4_norm_4: self.l4_norm_4,
            q0: self.q0,
            residual: self.residual,
            gn_at_q: gn_ratio(&self.profile, self.mass).unwrap_or(f64::NAN),
        }
    }
}

/// `sup |Delta Q + Q^3 - Q|` over the nodes with `r <= R/2`.
pub fn equation_residual(q: &RadialField) -> f64 {
    let lap = q.laplacian();
    let half = 0.5 * q.grid().radius();
    q.values()
        .iter()
        .zip(lap.values())
        .zip(q.grid().r())
        .filter(|(_, &r)| r <= half)
        .map(|((v, l), _)| (l + v * v.norm_sqr() - v).norm())
        .fold(0.0, f64::max)
}

/// `J(f) = \int |f|^4 M(Q) / (2 ||f||^2 ||grad f||^2)`; at most one, with
/// equality exactly on the orbit of `Q`.
pub fn gn_ratio(f: &RadialField, mass_q: f64) -> Result<f64> {
    let m = f.mass();
    let g = f.grad_norm_sq();
    if m == 0.0 || g == 0.0 {
        return Err(invalid!("the Gagliardo-Nirenberg ratio is undefined at f = 0"));
    }
    Ok(f.l4_norm_4() * mass_q / (2.0 * m * g))
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Fate {
    /// `Q` crossed zero: `Q(0)` too large.
    Crossed,
    /// `Q'` turned positive while `Q > 0`: `Q(0)` too small.
    Turned,
    Survived,
}

const R_START: f64 = 1e-3;
const R_SCAN: f64 = 40.0;
const R_MATCH_MAX: f64 = 12.0;
const R_MATCH_MIN: f64 = 5.0;

fn rhs(r: f64, y: &[f64; 2]) -> [f64; 2] {
    [y[1], -y[1] / r + y[0] - y[0] * y[0] * y[0]]
}

fn start_state(a: f64) -> [f64; 2] {
    let b = (a - a * a * a) / 4.0;
    let c = (1.0 - 3.0 * a * a) * b / 16.0;
    let r = R_START;
    [a + b * r * r + c * r.powi(4), 2.0 * b * r + 4.0 * c * r.powi(3)]
}

fn solver(a: f64, tol: f64) -> Dopri5<fn(f64, &[f64; 2]) -> [f64; 2], 2> {
    Dopri5::new(
        rhs as fn(f64, &[f64; 2]) -> [f64; 2],
        R_START,
        start_state(a),
        tol,
        tol * 1e-3,
    )
}

fn fate(a: f64, tol: f64) -> Fate {
    let mut ode = solver(a, tol);
    let mut out = Fate::Survived;
    ode.advance_to(R_SCAN, |_, y| {
        if y[0] < 0.0 {
            out = Fate::Crossed;
            true
        } else if y[1] > 0.0 {
            out = Fate::Turned;
            true
        } else {
            false
        }
    });
    out
}

/// Samples of the trajectory starting from `a` at the increasing radii `at`;
/// entries after the trajectory leaves the admissible region are `None`.
fn sample(a: f64, tol: f64, at: &[f64]) -> Vec<Option<[f64; 2]>> {
    let mut ode = solver(a, tol);
    let mut alive = true;
    at.iter()
        .map(|&r| {
            if alive && r >= R_START {
                alive = ode.advance_to(r, |_, y| y[0] < 0.0 || y[1] > 0.0);
            }
            if !alive {
                None
            } else if r < R_START {
                let b = (a - a * a * a) / 4.0;
                let c = (1.0 - 3.0 * a * a) * b / 16.0;
                Some([a + b * r * r + c * r.powi(4), 2.0 * b * r + 4.0 * c * r.powi(3)])
            } else {
                Some(ode.y)
            }
        })
        .collect()
}

/// Solves the radial ground-state ODE by bisection on `Q(0)` and samples the
/// result on `grid`. Beyond a matching radius where the bracketing
/// trajectories still agree, the decaying solution `c K0(r)` of the
/// linearised equation takes over.
pub fn shoot_ground_state(grid: &Arc<RadialGrid>, tol: f64) -> Result<GroundState> {
    if !(tol >= 1e-13 && tol < 1.0) {
        return Err(invalid!("shooting tolerance must lie in [1e-13, 1), got {tol}"));
    }
    let (mut lo, mut hi) = bracket(tol)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match fate(mid, tol) {
            Fate::Crossed => hi = mid,
            Fate::Turned => lo = mid,
            Fate::Survived => {
                lo = mid;
                hi = mid;
                break;
            }
        }
    }
    let a = 0.5 * (lo + hi);

    // matching radius: last point where the two bracketing trajectories agree
    let probe: Vec<f64> = (1..=((R_MATCH_MAX / 0.05) as usize)).map(|i| 0.05 * i as f64).collect();
    let below = sample(lo, tol, &probe);
    let above = sample(hi, tol, &probe);
    let mut r_match = 0.0;
    for ((&r, p), q) in probe.iter().zip(&below).zip(&above) {
        match (p, q) {
            (Some(p), Some(q)) if (p[0] - q[0]).abs() <= 1e-9 * p[0].abs() => r_match = r,
            _ => break,
        }
    }
    if r_match < R_MATCH_MIN {
        return Err(NlsError::NumericFailure(format!(
            "shooting trajectories separate at r = {r_match}; cannot match the far field"
        )));
    }

    let nodes = grid.r();
    let mut inner: Vec<f64> = nodes.iter().copied().filter(|&r| r < r_match).collect();
    inner.push(r_match);
    let samples = sample(a, tol, &inner);
    let at_match = samples
        .last()
        .copied()
        .flatten()
        .ok_or_else(|| NlsError::NumericFailure("shooting trajectory left the admissible region".into()))?;
    let (k0m, k1m) = bessel_k01(r_match);
    let c = at_match[0] / k0m;
    log::debug!(
        "shooting: Q(0) = {a:.15}, match at r = {r_match}, slope mismatch {:.2e}",
        at_match[1] + c * k1m
    );
    let mut values = Vec::with_capacity(nodes.len());
    for (k, &r) in nodes.iter().enumerate() {
        let v = if r < r_match {
            samples[k].map(|s| s[0]).unwrap_or(0.0)
        } else {
            c * bessel_k01(r).0
        };
        values.push(Complex64::new(v, 0.0));
    }
    let profile = RadialField::new(Arc::clone(grid), values)?;
    Ok(GroundState::from_profile(profile, a, Method::Shooting))
}

fn bracket(tol: f64) -> Result<(f64, f64)> {
    let mut a = 2.0;
    match fate(a, tol) {
        Fate::Turned => {
            for _ in 0..60 {
                let b = 2.0 * a;
                if fate(b, tol) == Fate::Crossed {
                    return Ok((a, b));
                }
                a = b;
            }
        }
        Fate::Crossed => {
            for _ in 0..60 {
                let b = 0.5 * a;
                if fate(b, tol) == Fate::Turned {
                    return Ok((b, a));
                }
                a = b;
            }
        }
        Fate::Survived => return Ok((a, a)),
    }
    Err(NlsError::NumericFailure("no shooting bracket found".into()))
}

/// Options for the normalised descent flow.
#[derive(Clone, Copy, Debug)]
pub struct FlowOptions {
    pub seed_width: f64,
    pub max_iter: usize,
    /// Iterations between dilations that return the multiplier to one.
    pub rescale_every: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            seed_width: 1.0,
            max_iter: 200_000,
            rescale_every: 200,
        }
    }
}

/// Ground state by the normalised descent flow started from a Gaussian.
pub fn gradient_flow_ground_state(grid: &Arc<RadialGrid>, tol: f64) -> Result<GroundState> {
    let seed = RadialField::from_real_fn(Arc::clone(grid), |r| (-0.5 * r * r).exp());
    gradient_flow_from(&seed, tol, FlowOptions::default())
}

/// Descent flow of `log(|grad f|^2 |f|^2 / \int f^4)` at fixed mass:
/// `f_t = Delta f - omega f + kappa f^3` with `omega = A/B`, `kappa = 2A/C`.
/// Its fixed points are `a Q(b x)`, `b = sqrt(omega)`, `a = sqrt(omega/kappa)`,
/// and the result is mapped back to `Q`.
pub fn gradient_flow_from(seed: &RadialField, tol: f64, opts: FlowOptions) -> Result<GroundState> {
    let grid = Arc::clone(seed.grid());
    if grid.radius() < 15.0 {
        return Err(invalid!("the descent flow needs R >= 15, got {}", grid.radius()));
    }
    if !(tol > 0.0) {
        return Err(invalid!("tolerance must be positive, got {tol}"));
    }
    let mut f = seed.map(|v| Complex64::new(v.norm(), 0.0));
    let mass0 = f.mass();
    if mass0 == 0.0 || !mass0.is_finite() {
        return Err(invalid!("the descent flow needs a nonzero seed"));
    }
    let xi = grid.xi().to_vec();
    let mut last = f64::INFINITY;

    for iter in 0..opts.max_iter {
        let a = f.grad_norm_sq();
        let c = f.l4_norm_4();
        let omega = a / mass0;
        let kappa = 2.0 * a / c;
        if iter % opts.rescale_every == 0 && iter > 0 {
            f = f.dilate(omega.sqrt());
            continue;
        }
        let linf = f.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let dt = 0.1 / (1.0 + linf * linf);
        let cubic = f.map(|v| v * v.norm_sqr() * kappa).forward();
        let mut spec = f.forward();
        for ((s, n), x) in spec.coeffs_mut().iter_mut().zip(cubic.coeffs()).zip(&xi) {
            *s = (*s + dt * n) / (1.0 + dt * (x * x + omega));
        }
        let mut next = spec.inverse();
        for v in next.values_mut() {
            *v = Complex64::new(v.re, 0.0);
        }
        next = next.scale(Complex64::new((mass0 / next.mass()).sqrt(), 0.0));

        if iter % 20 == 0 {
            let res = scaled_residual(&next, omega, kappa);
            if !res.is_finite() {
                return Err(NlsError::NumericFailure("descent flow diverged".into()));
            }
            last = res;
            if res < tol {
                f = next;
                let q = normalise(&f);
                let q0 = q.value_at_origin().re;
                return Ok(GroundState::from_profile(q, q0, Method::GradientFlow));
            }
        }
        f = next;
    }
    Err(NlsError::NumericFailure(format!(
        "descent flow did not converge in {} iterations (last residual {last:.3e})",
        opts.max_iter
    )))
}

/// `sup |Delta f - omega f + kappa f^3|` relative to `omega sup|f|`, over `r <= R/2`.
fn scaled_residual(f: &RadialField, omega: f64, kappa: f64) -> f64 {
    let lap = f.laplacian();
    let half = 0.5 * f.grid().radius();
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for ((v, l), &r) in f.values().iter().zip(lap.values()).zip(f.grid().r()) {
        scale = scale.max(v.norm());
        if r <= half {
            worst = worst.max((l - v * omega + v * v.norm_sqr() * kappa).norm());
        }
    }
    worst / (omega * scale)
}

/// Maps a fixed point `a Q(b x)` of the flow to `Q`.
fn normalise(f: &RadialField) -> RadialField {
    let a_ = f.grad_norm_sq();
    let b_ = f.mass();
    let c_ = f.l4_norm_4();
    let omega = a_ / b_;
    let kappa = 2.0 * a_ / c_;
    let b = omega.sqrt();
    let amp = (omega / kappa).sqrt();
    // Q(y) = f(y / b) / amp
    f.dilate(b).scale(Complex64::new(b / amp, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fate_classifies_the_two_failure_modes() {
        assert_eq!(fate(2.0, 1e-10), Fate::Turned);
        assert_eq!(fate(2.5, 1e-10), Fate::Crossed);
    }

    #[test]
    fn zero_seed_is_rejected() {
        let g = RadialGrid::new(64, 20.0).unwrap();
        let z = RadialField::zeros(g);
        assert!(matches!(
            gradient_flow_from(&z, 1e-10, FlowOptions::default()),
            Err(NlsError::InvalidArgument(_))
        ));
    }

    #[test]
    fn gn_ratio_rejects_zero() {
        let g = RadialGrid::new(64, 20.0).unwrap();
        assert!(gn_ratio(&RadialField::zeros(g), MASS_Q).is_err());
    }
}
