//! Bessel-zero radial grid and the unitary order-0 Hankel transform.
//!
//! Nodes sit at `r_k = j_k R / j_{n+1}` and the dual frequencies at
//! `xi_k = j_k / R`, where `j_k` is the k-th zero of `J0`. In the weighted
//! coordinates `a_k = sqrt(w_k) f(r_k)` the quasi-discrete transform is the
//! symmetric matrix `T_kl = 2 J0(j_k j_l / S) / (S |J1(j_k)| |J1(j_l)|)`,
//! `S = j_{n+1}`, which is orthogonal only up to a small defect. The plan
//! replaces it by its orthogonal polar factor (Newton-Schulz), so forward and
//! inverse are the same exactly-orthogonal involution.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use num_complex::Complex64;
use once_cell::sync::{Lazy, OnceCell};

use crate::bessel;
use crate::error::{invalid, Result};

/// Fraction of `kmax` above which spectral content counts as unresolved.
pub const RESOLVED_FRACTION: f64 = 0.8;

static GRID_CACHE: Lazy<Mutex<HashMap<(usize, u64), Arc<RadialGrid>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

pub struct RadialGrid {
    n: usize,
    radius: f64,
    kmax: f64,
    r: Vec<f64>,
    xi: Vec<f64>,
    weights: Vec<f64>,
    xi_weights: Vec<f64>,
    sqrt_w: Vec<f64>,
    sqrt_xw: Vec<f64>,
    transform: DMatrix<f64>,
    raw_defect: f64,
    derivative: OnceCell<DMatrix<f64>>,
}

impl std::fmt::Debug for RadialGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialGrid")
            .field("n", &self.n)
            .field("radius", &self.radius)
            .field("kmax", &self.kmax)
            .finish()
    }
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.radius == other.radius
    }
}

impl RadialGrid {
    /// Builds (or fetches from the process-wide cache) the grid with `n`
    /// nodes on the disc of radius `radius`.
    pub fn new(n: usize, radius: f64) -> Result<Arc<RadialGrid>> {
        if n < 8 {
            return Err(invalid!("grid needs at least 8 nodes, got {n}"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid!("grid radius must be positive, got {radius}"));
        }
        let key = (n, radius.to_bits());
        if let Some(g) = GRID_CACHE.lock().unwrap().get(&key) {
            return Ok(Arc::clone(g));
        }
        let grid = Arc::new(Self::build(n, radius));
        GRID_CACHE
            .lock()
            .unwrap()
            .entry(key)
            .or_insert_with(|| Arc::clone(&grid));
        Ok(grid)
    }

    fn build(n: usize, radius: f64) -> RadialGrid {
        let zeros = bessel::j0_zeros(n + 1);
        let s = zeros[n];
        let kmax = s / radius;
        let j1_abs: Vec<f64> = zeros[..n].iter().map(|&z| bessel::j1(z).abs()).collect();
        let r: Vec<f64> = zeros[..n].iter().map(|&z| z * radius / s).collect();
        let xi: Vec<f64> = zeros[..n].iter().map(|&z| z / radius).collect();
        let weights: Vec<f64> = j1_abs.iter().map(|&b| 4.0 * PI / (kmax * kmax * b * b)).collect();
        let xi_weights: Vec<f64> = j1_abs.iter().map(|&b| 4.0 * PI / (radius * radius * b * b)).collect();

        let mut t = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            for l in k..n {
                let v = 2.0 * bessel::j0(zeros[k] * zeros[l] / s) / (s * j1_abs[k] * j1_abs[l]);
                t[(k, l)] = v;
                t[(l, k)] = v;
            }
        }
        let raw_defect = involution_defect(&t);
        let transform = orthogonal_polar_factor(t);

        RadialGrid {
            n,
            radius,
            kmax,
            sqrt_w: weights.iter().map(|w| w.sqrt()).collect(),
            sqrt_xw: xi_weights.iter().map(|w| w.sqrt()).collect(),
            r,
            xi,
            weights,
            xi_weights,
            transform,
            raw_defect,
            derivative: OnceCell::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Largest representable radial frequency, `j_{n+1} / R`.
    pub fn kmax(&self) -> f64 {
        self.kmax
    }

    /// Frequencies above this are treated as unresolved.
    pub fn resolved_kmax(&self) -> f64 {
        RESOLVED_FRACTION * self.kmax
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// Quadrature weights with `sum w_k |f(r_k)|^2 ~ \int_{R^2} |f|^2 dx`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Dual weights with `sum w_l |F(xi_l)|^2 ~ \int_{R^2} |F|^2 d xi`.
    pub fn xi_weights(&self) -> &[f64] {
        &self.xi_weights
    }

    /// `max |T^2 - I|` of the quasi-discrete matrix before the polar correction.
    pub fn raw_orthogonality_defect(&self) -> f64 {
        self.raw_defect
    }

    /// `max |T^2 - I|` of the matrix actually used.
    pub fn orthogonality_defect(&self) -> f64 {
        involution_defect(&self.transform)
    }

    /// Physical samples to spectral coefficients.
    pub fn forward(&self, values: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.n);
        let scaled: Vec<Complex64> = values.iter().zip(&self.sqrt_w).map(|(v, s)| v * s).collect();
        let mut out = self.apply_transform(&scaled);
        for (c, s) in out.iter_mut().zip(&self.sqrt_xw) {
            *c /= s;
        }
        out
    }

    /// Spectral coefficients to physical samples.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(coeffs.len(), self.n);
        let scaled: Vec<Complex64> = coeffs.iter().zip(&self.sqrt_xw).map(|(v, s)| v * s).collect();
        let mut out = self.apply_transform(&scaled);
        for (c, s) in out.iter_mut().zip(&self.sqrt_w) {
            *c /= s;
        }
        out
    }

    /// Forward transform of many fields at once (one matrix product).
    pub fn forward_many(&self, fields: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        self.batch(fields, &self.sqrt_w, &self.sqrt_xw)
    }

    /// Inverse transform of many coefficient vectors at once.
    pub fn inverse_many(&self, coeffs: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        self.batch(coeffs, &self.sqrt_xw, &self.sqrt_w)
    }

    fn batch(&self, input: &[Vec<Complex64>], pre: &[f64], post: &[f64]) -> Vec<Vec<Complex64>> {
        if input.is_empty() {
            return Vec::new();
        }
        let n = self.n;
        let m = input.len();
        let mut block = DMatrix::<f64>::zeros(n, 2 * m);
        for (j, v) in input.iter().enumerate() {
            assert_eq!(v.len(), n);
            for k in 0..n {
                block[(k, 2 * j)] = v[k].re * pre[k];
                block[(k, 2 * j + 1)] = v[k].im * pre[k];
            }
        }
        let prod = &self.transform * block;
        (0..m)
            .map(|j| {
                (0..n)
                    .map(|k| Complex64::new(prod[(k, 2 * j)], prod[(k, 2 * j + 1)]) / post[k])
                    .collect()
            })
            .collect()
    }

    /// `T a` for a vector in weighted coordinates.
    pub(crate) fn apply_transform(&self, a: &[Complex64]) -> Vec<Complex64> {
        apply_real(&self.transform, a)
    }

    pub(crate) fn sqrt_weights(&self) -> &[f64] {
        &self.sqrt_w
    }

    /// Matrix evaluating the Fourier-Bessel series at arbitrary radii:
    /// `f(rho_p) = sum_l E_pl F_l`. Radii beyond `R` evaluate to zero.
    pub fn synthesis_matrix(&self, radii: &[f64]) -> DMatrix<f64> {
        let mut e = DMatrix::<f64>::zeros(radii.len(), self.n);
        for (p, &rho) in radii.iter().enumerate() {
            if rho > self.radius {
                continue;
            }
            for l in 0..self.n {
                e[(p, l)] = self.xi_weights[l] / (2.0 * PI) * bessel::j0(self.xi[l] * rho);
            }
        }
        e
    }

    /// Evaluates the field described by `coeffs` at arbitrary radii.
    pub fn evaluate(&self, coeffs: &[Complex64], radii: &[f64]) -> Vec<Complex64> {
        apply_real(&self.synthesis_matrix(radii), coeffs)
    }

    /// Value at the origin, read exactly off the spectral series.
    pub fn value_at_origin(&self, coeffs: &[Complex64]) -> Complex64 {
        coeffs
            .iter()
            .zip(&self.xi_weights)
            .map(|(c, w)| c * (w / (2.0 * PI)))
            .sum()
    }

    /// Radial derivative at the nodes from spectral coefficients.
    pub fn radial_derivative(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let d = self.derivative.get_or_init(|| {
            let mut d = DMatrix::<f64>::zeros(self.n, self.n);
            for k in 0..self.n {
                for l in 0..self.n {
                    d[(k, l)] = -self.xi_weights[l] / (2.0 * PI) * self.xi[l] * bessel::j1(self.xi[l] * self.r[k]);
                }
            }
            d
        });
        apply_real(d, coeffs)
    }
}

pub(crate) fn apply_real(m: &DMatrix<f64>, v: &[Complex64]) -> Vec<Complex64> {
    let cols = m.ncols();
    assert_eq!(cols, v.len());
    let mut block = DMatrix::<f64>::zeros(cols, 2);
    for (k, c) in v.iter().enumerate() {
        block[(k, 0)] = c.re;
        block[(k, 1)] = c.im;
    }
    let prod = m * block;
    (0..m.nrows())
        .map(|k| Complex64::new(prod[(k, 0)], prod[(k, 1)]))
        .collect()
}

fn involution_defect(t: &DMatrix<f64>) -> f64 {
    let mut sq = t * t;
    for k in 0..sq.nrows() {
        sq[(k, k)] -= 1.0;
    }
    sq.amax()
}

/// Orthogonal polar factor of a symmetric, nearly orthogonal matrix by the
/// Newton-Schulz iteration `X <- X (3I - X^2) / 2`. Every iterate is a
/// polynomial in the input, so symmetry is kept and the limit squares to I.
fn orthogonal_polar_factor(mut x: DMatrix<f64>) -> DMatrix<f64> {
    for _ in 0..12 {
        let sq = &x * &x;
        let mut defect = 0.0_f64;
        for k in 0..sq.nrows() {
            for l in 0..sq.ncols() {
                let target = if k == l { 1.0 } else { 0.0 };
                defect = defect.max((sq[(k, l)] - target).abs());
            }
        }
        if defect < 4.0 * f64::EPSILON {
            break;
        }
        let mut next = &x * &sq;
        next *= -0.5;
        next += &x * 1.5;
        // re-symmetrise to stop round-off drift
        x = (&next + next.transpose()) * 0.5;
    }
    x
}
