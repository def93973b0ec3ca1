//! Small periodic 2D backend, used for symmetries that break radiality.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{NlsField, Observables};
use crate::error::{invalid, NlsError, Result};
use crate::spectral::{RadialField, RESOLVED_FRACTION};

#[derive(Clone)]
struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// `n x n` samples on the periodic square `[-L/2, L/2)^2`, row-major with
/// `y` the slow index.
#[derive(Clone)]
pub struct CartesianField {
    n: usize,
    side: f64,
    values: Vec<Complex64>,
    plan: Plan,
}

impl std::fmt::Debug for CartesianField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CartesianField")
            .field("n", &self.n)
            .field("side", &self.side)
            .finish()
    }
}

impl CartesianField {
    pub fn new(n: usize, side: f64, values: Vec<Complex64>) -> Result<Self> {
        if !n.is_power_of_two() || n < 8 {
            return Err(invalid!("cartesian size must be a power of two >= 8, got {n}"));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(invalid!("cartesian side must be positive, got {side}"));
        }
        if values.len() != n * n {
            return Err(invalid!("expected {} samples, got {}", n * n, values.len()));
        }
        let mut planner = FftPlanner::new();
        let plan = Plan {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        Ok(CartesianField { n, side, values, plan })
    }

    pub fn from_fn(n: usize, side: f64, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let h = side / n as f64;
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                values.push(f(-0.5 * side + i as f64 * h, -0.5 * side + j as f64 * h));
            }
        }
        Self::new(n, side, values)
    }

    /// Samples a radial field (band-limited interpolation in `r`).
    pub fn from_radial(f: &RadialField, n: usize, side: f64) -> Result<Self> {
        let h = side / n as f64;
        let coord = |i: usize| -0.5 * side + i as f64 * h;
        let radii: Vec<f64> = (0..n * n).map(|k| coord(k % n).hypot(coord(k / n))).collect();
        Self::new(n, side, f.evaluate(&radii))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn coords(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n).map(|i| -0.5 * self.side + i as f64 * h).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        (0..n)
            .map(|m| {
                let m = if m < n / 2 { m } else { m - n };
                2.0 * PI * m as f64 / self.side
            })
            .collect()
    }

    fn fft2(&self, data: &mut [Complex64], forward: bool) {
        let n = self.n;
        let fft = if forward {
            &self.plan.forward
        } else {
            &self.plan.inverse
        };
        for row in data.chunks_mut(n) {
            fft.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                col[j] = data[j * n + i];
            }
            fft.process(&mut col);
            for j in 0..n {
                data[j * n + i] = col[j];
            }
        }
        if !forward {
            let s = 1.0 / (n * n) as f64;
            data.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Multiplies the Fourier coefficients by `symbol(kx, ky)`.
    pub fn apply_multiplier(&mut self, symbol: impl Fn(f64, f64) -> Complex64) {
        let k = self.wavenumbers();
        let mut data = std::mem::take(&mut self.values);
        self.fft2(&mut data, true);
        let n = self.n;
        for j in 0..n {
            for i in 0..n {
                data[j * n + i] *= symbol(k[i], k[j]);
            }
        }
        self.fft2(&mut data, false);
        self.values = data;
    }

    fn spectrum(&self) -> Vec<Complex64> {
        let mut data = self.values.clone();
        self.fft2(&mut data, true);
        data
    }

    pub fn mass(&self) -> f64 {
        let h = self.spacing();
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * h * h
    }

    /// Mass-weighted mean position.
    pub fn centroid(&self) -> (f64, f64) {
        let x = self.coords();
        let n = self.n;
        let (mut sx, mut sy, mut m) = (0.0, 0.0, 0.0);
        for j in 0..n {
            for i in 0..n {
                let w = self.values[j * n + i].norm_sqr();
                sx += w * x[i];
                sy += w * x[j];
                m += w;
            }
        }
        (sx / m, sy / m)
    }

    /// Fraction of spectral mass beyond `RESOLVED_FRACTION` of the Nyquist wavenumber.
    pub fn aliasing_fraction(&self) -> f64 {
        let spec = self.spectrum();
        let k = self.wavenumbers();
        let cut = RESOLVED_FRACTION * PI / self.spacing();
        let n = self.n;
        let (mut tail, mut total) = (0.0, 0.0);
        for j in 0..n {
            for i in 0..n {
                let m = spec[j * n + i].norm_sqr();
                total += m;
                if k[i].abs() > cut || k[j].abs() > cut {
                    tail += m;
                }
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }

    pub fn check_resolved(&self) -> Result<()> {
        let a = self.aliasing_fraction();
        if a >= 1e-8 {
            return Err(invalid!("cartesian field is aliased (tail fraction {a:.2e})"));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64, f64, Complex64) -> Complex64) -> CartesianField {
        let x = self.coords();
        let n = self.n;
        let mut out = self.clone();
        for j in 0..n {
            for i in 0..n {
                out.values[j * n + i] = f(x[i], x[j], self.values[j * n + i]);
            }
        }
        out
    }

    fn same_shape(&self, other: &CartesianField) -> Result<()> {
        if self.n != other.n || self.side != other.side {
            return Err(NlsError::GridMismatch);
        }
        Ok(())
    }

    /// Mass-weighted distance used for matched comparisons.
    pub fn distance(&self, other: &CartesianField) -> Result<f64> {
        self.same_shape(other)?;
        let h = self.spacing();
        Ok((self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * h
            * h)
            .sqrt())
    }

    fn linear(&mut self, dt: f64) {
        self.apply_multiplier(|kx, ky| Complex64::from_polar(1.0, -dt * (kx * kx + ky * ky)));
    }
}

impl NlsField for CartesianField {
    fn observe(&self) -> Observables {
        let spec = self.spectrum();
        let k = self.wavenumbers();
        let n = self.n;
        let h = self.spacing();
        let cut = RESOLVED_FRACTION * PI / h;
        // Parseval: sum |u|^2 h^2 = sum |U|^2 h^2 / n^2
        let norm = h * h / (n * n) as f64;
        let (mut grad, mut tail, mut total) = (0.0, 0.0, 0.0);
        for j in 0..n {
            for i in 0..n {
                let m = spec[j * n + i].norm_sqr() * norm;
                total += m;
                grad += m * (k[i] * k[i] + k[j] * k[j]);
                if k[i].abs() > cut || k[j].abs() > cut {
                    tail += m;
                }
            }
        }
        Observables {
            mass: self.mass(),
            grad_norm_sq: grad,
            l4_norm_4: self.values.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() * h * h,
            linf: self.values.iter().map(|v| v.norm()).fold(0.0, f64::max),
            tail_fraction: if total > 0.0 { tail / total } else { 0.0 },
        }
    }

    fn strang_step(&mut self, dt: f64, mu: f64) {
        self.linear(0.5 * dt);
        for v in self.values.iter_mut() {
            *v *= Complex64::from_polar(1.0, -mu * v.norm_sqr() * dt);
        }
        self.linear(0.5 * dt);
    }

    fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    fn free_evolve(&mut self, t: f64) {
        self.linear(t);
    }

    fn l2_distance(&self, other: &Self) -> Result<f64> {
        self.distance(other)
    }
}
