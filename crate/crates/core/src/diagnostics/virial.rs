use std::ops::{Add, Div, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::evolution::Trajectory;
use crate::spectral::RadialField;

/// Truncated Taylor series `c0 + c1 h + c2 h^2 + c3 h^3`.
#[derive(Clone, Copy, Debug)]
struct Jet([f64; 4]);

impl Jet {
    fn var(x: f64) -> Jet {
        Jet([x, 1.0, 0.0, 0.0])
    }

    fn cst(c: f64) -> Jet {
        Jet([c, 0.0, 0.0, 0.0])
    }

    fn exp(self) -> Jet {
        let [a, b, c, d] = self.0;
        let e = a.exp();
        Jet([e, e * b, e * (c + b * b / 2.0), e * (d + b * c + b * b * b / 6.0)])
    }

    fn recip(self) -> Jet {
        let [a, b, c, d] = self.0;
        let r0 = 1.0 / a;
        let r1 = -b * r0 / a;
        let r2 = -(b * r1 + c * r0) / a;
        let r3 = -(b * r2 + c * r1 + d * r0) / a;
        Jet([r0, r1, r2, r3])
    }

    /// Value and first three derivatives.
    fn derivatives(self) -> [f64; 4] {
        let [a, b, c, d] = self.0;
        [a, b, 2.0 * c, 6.0 * d]
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (a, b) = (self.0, o.0);
        Jet([
            a[0] * b[0],
            a[0] * b[1] + a[1] * b[0],
            a[0] * b[2] + a[1] * b[1] + a[2] * b[0],
            a[0] * b[3] + a[1] * b[2] + a[2] * b[1] + a[3] * b[0],
        ])
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

/// `e^{-1/s}` for `s > 0`, as a jet.
fn h(s: Jet) -> Jet {
    if s.0[0] <= 0.0 {
        Jet::cst(0.0)
    } else {
        (Jet::cst(-1.0) / s).exp()
    }
}

/// The cutoff `psi`: 1 on `[0, 1]`, 0 on `[2, inf)`, smooth in between.
/// Returns `[psi, psi', psi'', psi''']`.
pub fn psi(r: f64) -> [f64; 4] {
    if r <= 1.0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    if r >= 2.0 {
        return [0.0; 4];
    }
    let s = Jet::var(r) - Jet::cst(1.0);
    let a = h(Jet::cst(1.0) - s);
    (a / (a + h(s))).derivatives()
}

/// `M_a = 2 Im \int conj(u) a . grad u` with `a(x) = x psi(|x| / R)`.
pub fn virial(f: &RadialField, r_cut: f64) -> Result<f64> {
    if !(r_cut > 0.0) {
        return Err(invalid!("cutoff radius must be positive"));
    }
    let ur = f.radial_derivative();
    let grid = f.grid();
    Ok(2.0
        * f.values()
            .iter()
            .zip(&ur)
            .zip(grid.r())
            .zip(grid.weights())
            .map(|(((u, d), r), w)| w * r * psi(r / r_cut)[0] * (u.conj() * d).im)
            .sum::<f64>())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirialReport {
    #[serde(rename = "R")]
    pub r_cut: f64,
    pub t: f64,
    /// `(t, M_a)` at the five snapshots of the stencil.
    pub ma: Vec<(f64, f64)>,
    pub dma_dt_fd: f64,
    /// `[8E, mass term, gradient term, quartic term]`.
    pub rhs_terms: [f64; 4],
    pub identity_gap: f64,
}

impl VirialReport {
    pub fn rhs(&self) -> f64 {
        self.rhs_terms.iter().sum()
    }
}

/// Right-hand side of the truncated virial identity at one instant.
pub fn virial_rhs(u: &RadialField, r_cut: f64, mu: f64) -> [f64; 4] {
    let grid = u.grid();
    let ur = u.radial_derivative();
    let energy = 0.5 * u.grad_norm_sq() + 0.25 * mu * u.l4_norm_4();
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for (((v, d), &r), &w) in u.values().iter().zip(&ur).zip(grid.r()).zip(grid.weights()) {
        let [p, p1, p2, p3] = psi(r / r_cut);
        let rho = r / r_cut;
        let m = v.norm_sqr();
        m2 -= w * (3.0 / (r_cut * r) * p1 + 5.0 / (r_cut * r_cut) * p2 + rho / (r_cut * r_cut) * p3) * m;
        m3 += 4.0 * w * (p - 1.0 + rho * p1) * d.norm_sqr();
        m4 += mu * w * (2.0 * p - 2.0 + rho * p1) * m * m;
    }
    [8.0 * energy, m2, m3, m4]
}

/// Checks `d/dt M_a = 8E + (mass) + (gradient) + (quartic)` at the snapshot
/// nearest `t`, differentiating `M_a` with the five-point centred stencil.
pub fn virial_identity(traj: &Trajectory<RadialField>, t: f64, r_cut: f64, mu: f64) -> Result<VirialReport> {
    let snaps = &traj.snapshots;
    let i = snaps
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 .0 - t).abs().total_cmp(&(b.1 .0 - t).abs()))
        .map(|(i, _)| i)
        .ok_or_else(|| invalid!("empty trajectory"))?;
    if i < 2 || i + 2 >= snaps.len() {
        return Err(invalid!("snapshot at t = {} is too close to the boundary", snaps[i].0));
    }
    let h = snaps[i + 1].0 - snaps[i].0;
    for j in i - 2..i + 2 {
        let d = snaps[j + 1].0 - snaps[j].0;
        if (d - h).abs() > 1e-9 * h.abs().max(1e-300) {
            return Err(invalid!(
                "the five snapshots around t = {} are not equally spaced",
                snaps[i].0
            ));
        }
    }
    let ma = (i - 2..=i + 2)
        .map(|j| Ok((snaps[j].0, virial(&snaps[j].1, r_cut)?)))
        .collect::<Result<Vec<_>>>()?;
    let dma = (-ma[4].1 + 8.0 * ma[3].1 - 8.0 * ma[1].1 + ma[0].1) / (12.0 * h);
    let rhs_terms = virial_rhs(&snaps[i].1, r_cut, mu);
    let gap = (dma - rhs_terms.iter().sum::<f64>()).abs();
    Ok(VirialReport {
        r_cut,
        t: snaps[i].0,
        ma,
        dma_dt_fd: dma,
        rhs_terms,
        identity_gap: gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_derivatives_match_differences() {
        for r in [1.1, 1.37, 1.5, 1.81] {
            let h = 1e-4;
            let d = psi(r);
            let fd1 = (psi(r + h)[0] - psi(r - h)[0]) / (2.0 * h);
            let fd2 = (psi(r + h)[1] - psi(r - h)[1]) / (2.0 * h);
            let fd3 = (psi(r + h)[2] - psi(r - h)[2]) / (2.0 * h);
            assert!((d[1] - fd1).abs() < 1e-6 * (1.0 + fd1.abs()));
            assert!((d[2] - fd2).abs() < 1e-5 * (1.0 + fd2.abs()));
            assert!((d[3] - fd3).abs() < 1e-4 * (1.0 + fd3.abs()));
        }
        assert_eq!(psi(0.5), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(psi(2.5), [0.0; 4]);
        assert!((psi(1.5)[0] - 0.5).abs() < 1e-15);
    }
}
