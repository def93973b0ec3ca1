use num_complex::Complex64;

use super::Trajectory;
use crate::error::{invalid, Result};
use crate::spectral::RadialField;

/// Quadrature weights on arbitrary increasing nodes: composite Simpson on
/// interval pairs, with the quadratic through the last three nodes closing an
/// odd count.
pub fn simpson_weights(x: &[f64]) -> Vec<f64> {
    let m = x.len();
    let mut w = vec![0.0; m];
    if m < 2 {
        return w;
    }
    if m == 2 {
        let h = x[1] - x[0];
        return vec![0.5 * h, 0.5 * h];
    }
    let intervals = m - 1;
    let paired = if intervals % 2 == 0 { intervals } else { intervals - 1 };
    let mut i = 0;
    while i < paired {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        let s = h0 + h1;
        w[i] += s / 6.0 * (2.0 - h1 / h0);
        w[i + 1] += s * s * s / (6.0 * h0 * h1);
        w[i + 2] += s / 6.0 * (2.0 - h0 / h1);
        i += 2;
    }
    if paired < intervals {
        let k = m - 3;
        let h0 = x[k + 1] - x[k];
        let h1 = x[k + 2] - x[k + 1];
        w[k] -= h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
        w[k + 1] += h1 * (h1 + 3.0 * h0) / (6.0 * h0);
        w[k + 2] += h1 * (2.0 * h1 + 3.0 * h0) / (6.0 * (h0 + h1));
    }
    w
}

/// `|| u(t1) - e^{i(t1-t0)Delta} u(t0) + i \int_{t0}^{t1} e^{i(t1-s)Delta} F(u(s)) ds ||_2`
/// with `F(u) = mu |u|^2 u`, integrated over the stored snapshots.
pub fn duhamel_residual(traj: &Trajectory<RadialField>, t0: f64, t1: f64) -> Result<f64> {
    if t0 == t1 {
        return Ok(0.0);
    }
    if t1 < t0 {
        return Err(invalid!("need t0 < t1, got {t0} > {t1}"));
    }
    let tol = 1e-9 * (1.0 + t1.abs());
    let picked: Vec<&(f64, RadialField)> = traj
        .snapshots
        .iter()
        .filter(|(t, _)| *t >= t0 - tol && *t <= t1 + tol)
        .collect();
    let starts = picked.first().map(|s| (s.0 - t0).abs() <= tol).unwrap_or(false);
    let ends = picked.last().map(|s| (s.0 - t1).abs() <= tol).unwrap_or(false);
    if !starts || !ends {
        return Err(invalid!("t0 and t1 must be snapshot times"));
    }
    if picked.len() < 10 {
        return Err(invalid!(
            "need at least 8 snapshots strictly between t0 and t1, found {}",
            picked.len().saturating_sub(2)
        ));
    }
    let grid = picked[0].1.grid().clone();
    let times: Vec<f64> = picked.iter().map(|s| s.0).collect();
    let weights = simpson_weights(&times);
    let mu = traj.mu;
    let cubic: Vec<Vec<Complex64>> = picked
        .iter()
        .map(|(_, u)| u.values().iter().map(|v| v * v.norm_sqr() * mu).collect())
        .collect();
    let cubic_hat = grid.forward_many(&cubic);
    let xi = grid.xi();
    let n = grid.n();
    let mut integral = vec![Complex64::new(0.0, 0.0); n];
    for ((s, w), f) in times.iter().zip(&weights).zip(&cubic_hat) {
        for l in 0..n {
            integral[l] += f[l] * Complex64::from_polar(*w, -(t1 - s) * xi[l] * xi[l]);
        }
    }
    let u0_hat = picked[0].1.forward();
    let u1_hat = picked.last().unwrap().1.forward();
    let i = Complex64::new(0.0, 1.0);
    let resid: Vec<Complex64> = (0..n)
        .map(|l| {
            u1_hat.coeffs()[l] - u0_hat.coeffs()[l] * Complex64::from_polar(1.0, -(t1 - t0) * xi[l] * xi[l])
                + i * integral[l]
        })
        .collect();
    Ok(resid
        .iter()
        .zip(grid.xi_weights())
        .map(|(c, w)| w * c.norm_sqr())
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_cubics_exactly() {
        for x in [
            vec![0.0, 0.1, 0.3, 0.35, 0.7, 1.0, 1.2],
            vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5],
        ] {
            let w = simpson_weights(&x);
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * (x * x - 2.0 * x + 1.0)).sum();
            let a = x[0];
            let b = *x.last().unwrap();
            let exact = |t: f64| t * t * t / 3.0 - t * t + t;
            assert!((q - (exact(b) - exact(a))).abs() < 1e-13);
        }
    }
}
