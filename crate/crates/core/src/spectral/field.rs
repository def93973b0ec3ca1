use std::sync::Arc;

use num_complex::Complex64;

use super::grid::RadialGrid;
use crate::error::{invalid, NlsError, Result};

/// Complex radial function sampled at the grid nodes.
#[derive(Clone, Debug)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<Complex64>,
}

/// Order-0 Hankel coefficients `F(xi_l)` of a radial field.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<RadialGrid>,
    coeffs: Vec<Complex64>,
}

fn check_len(grid: &RadialGrid, len: usize) -> Result<()> {
    if len != grid.n() {
        return Err(invalid!("expected {} samples, got {}", grid.n(), len));
    }
    Ok(())
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        Ok(RadialField { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.n()];
        RadialField { grid, values }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.r().iter().map(|&r| f(r)).collect();
        RadialField { grid, values }
    }

    pub fn from_real_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |r| Complex64::new(f(r), 0.0))
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn same_grid(&self, other: &RadialField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(NlsError::GridMismatch)
        }
    }

    pub fn forward(&self) -> SpectralField {
        SpectralField {
            grid: Arc::clone(&self.grid),
            coeffs: self.grid.forward(&self.values),
        }
    }

    /// `\int |f|^2 dx` over the plane.
    pub fn mass(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| w * v.norm_sqr())
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// `\int |f|^4 dx`.
    pub fn l4_norm_4(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| w * v.norm_sqr().powi(2))
            .sum()
    }

    /// `\int |f|^p dx` for finite `p`.
    pub fn lp_norm_p(&self, p: f64) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| w * v.norm().powf(p))
            .sum()
    }

    /// `\int |grad f|^2 dx`, evaluated on the spectral side.
    pub fn grad_norm_sq(&self) -> f64 {
        self.forward().grad_norm_sq()
    }

    /// Largest modulus over the nodes and the origin.
    pub fn linf(&self) -> f64 {
        let nodes = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        nodes.max(self.value_at_origin().norm())
    }

    pub fn value_at_origin(&self) -> Complex64 {
        let c = self.grid.forward(&self.values);
        self.grid.value_at_origin(&c)
    }

    /// Band-limited interpolation at arbitrary radii (zero beyond `R`).
    pub fn evaluate(&self, radii: &[f64]) -> Vec<Complex64> {
        let c = self.grid.forward(&self.values);
        self.grid.evaluate(&c, radii)
    }

    /// `d f / d r` at the nodes.
    pub fn radial_derivative(&self) -> Vec<Complex64> {
        let c = self.grid.forward(&self.values);
        self.grid.radial_derivative(&c)
    }

    /// Mass-preserving dilation `lambda^{-1} f(r / lambda)`, resampled from the
    /// spectral series (values that would come from beyond `R` are zero).
    pub fn dilate(&self, lambda: f64) -> RadialField {
        let radii: Vec<f64> = self.grid.r().iter().map(|r| r / lambda).collect();
        let mut values = self.evaluate(&radii);
        for v in &mut values {
            *v /= lambda;
        }
        RadialField {
            grid: Arc::clone(&self.grid),
            values,
        }
    }

    /// `Delta f` at the nodes.
    pub fn laplacian(&self) -> RadialField {
        self.forward()
            .apply_multiplier(|x| Complex64::new(-x * x, 0.0))
            .inverse()
    }

    pub fn scale(&self, c: Complex64) -> RadialField {
        self.map(|v| v * c)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> RadialField {
        RadialField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn conj(&self) -> RadialField {
        self.map(|v| v.conj())
    }

    pub fn add(&self, other: &RadialField) -> Result<RadialField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RadialField) -> Result<RadialField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with(&self, other: &RadialField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<RadialField> {
        self.same_grid(other)?;
        Ok(RadialField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// `||self - other||_2`.
    pub fn l2_distance(&self, other: &RadialField) -> Result<f64> {
        Ok(self.sub(other)?.l2_norm())
    }

    /// `\int_{|x| <= radius} |f|^2 dx` with the node quadrature.
    pub fn mass_within(&self, radius: f64) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .zip(self.grid.r())
            .filter(|(_, &r)| r <= radius)
            .map(|((v, w), _)| w * v.norm_sqr())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

impl SpectralField {
    pub fn new(grid: Arc<RadialGrid>, coeffs: Vec<Complex64>) -> Result<Self> {
        check_len(&grid, coeffs.len())?;
        Ok(SpectralField { grid, coeffs })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn inverse(&self) -> RadialField {
        RadialField {
            grid: Arc::clone(&self.grid),
            values: self.grid.inverse(&self.coeffs),
        }
    }

    /// `\int |F|^2 d xi`; equals the mass of the physical field.
    pub fn mass(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(self.grid.xi_weights())
            .map(|(c, w)| w * c.norm_sqr())
            .sum()
    }

    pub fn grad_norm_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(self.grid.xi_weights())
            .zip(self.grid.xi())
            .map(|((c, w), x)| w * x * x * c.norm_sqr())
            .sum()
    }

    /// Multiplies every coefficient by `symbol(xi)`.
    pub fn apply_multiplier(&self, symbol: impl Fn(f64) -> Complex64) -> SpectralField {
        SpectralField {
            grid: Arc::clone(&self.grid),
            coeffs: self
                .coeffs
                .iter()
                .zip(self.grid.xi())
                .map(|(&c, &x)| c * symbol(x))
                .collect(),
        }
    }

    /// Mass carried by frequencies `>= k`.
    pub fn mass_above(&self, k: f64) -> f64 {
        self.coeffs
            .iter()
            .zip(self.grid.xi_weights())
            .zip(self.grid.xi())
            .filter(|(_, &x)| x >= k)
            .map(|((c, w), _)| w * c.norm_sqr())
            .sum()
    }
}

/// Applies the free Schrodinger propagator `e^{i t Delta}`, symbol `e^{-i t xi^2}`.
pub fn free_propagator_multiplier(f: &SpectralField, t: f64) -> SpectralField {
    f.apply_multiplier(|x| Complex64::from_polar(1.0, -t * x * x))
}

/// `e^{i t Delta} f` on physical samples.
pub fn free_evolve(f: &RadialField, t: f64) -> RadialField {
    free_propagator_multiplier(&f.forward(), t).inverse()
}
