use num_complex::Complex64;

use super::{NlsField, Observables};
use crate::error::Result;
use crate::spectral::RadialField;

fn linear_half(u: &mut [Complex64], field: &RadialField, dt: f64) {
    let grid = field.grid();
    let sw = grid.sqrt_weights();
    let a: Vec<Complex64> = u.iter().zip(sw).map(|(v, s)| v * s).collect();
    let mut b = grid.apply_transform(&a);
    // weighted spectral coordinates share the frequency ordering
    for (c, x) in b.iter_mut().zip(grid.xi()) {
        *c *= Complex64::from_polar(1.0, -dt * x * x);
    }
    let back = grid.apply_transform(&b);
    for ((v, w), s) in u.iter_mut().zip(back).zip(sw) {
        *v = w / s;
    }
}

impl NlsField for RadialField {
    fn observe(&self) -> Observables {
        let grid = self.grid();
        let spec = self.forward();
        let xw = grid.xi_weights();
        let xi = grid.xi();
        let cut = grid.resolved_kmax();
        let mut mass_hat = 0.0;
        let mut grad = 0.0;
        let mut tail = 0.0;
        for ((c, w), x) in spec.coeffs().iter().zip(xw).zip(xi) {
            let m = w * c.norm_sqr();
            mass_hat += m;
            grad += m * x * x;
            if *x > cut {
                tail += m;
            }
        }
        let origin = grid.value_at_origin(spec.coeffs()).norm();
        let linf = self.values().iter().map(|v| v.norm()).fold(origin, f64::max);
        Observables {
            mass: self.mass(),
            grad_norm_sq: grad,
            l4_norm_4: self.l4_norm_4(),
            linf,
            tail_fraction: if mass_hat > 0.0 { tail / mass_hat } else { 0.0 },
        }
    }

    fn strang_step(&mut self, dt: f64, mu: f64) {
        let this = self.clone();
        let u = self.values_mut();
        linear_half(u, &this, 0.5 * dt);
        for v in u.iter_mut() {
            *v *= Complex64::from_polar(1.0, -mu * v.norm_sqr() * dt);
        }
        linear_half(u, &this, 0.5 * dt);
    }

    fn is_finite(&self) -> bool {
        RadialField::is_finite(self)
    }

    fn free_evolve(&mut self, t: f64) {
        let this = self.clone();
        linear_half(self.values_mut(), &this, t);
    }

    fn l2_distance(&self, other: &Self) -> Result<f64> {
        RadialField::l2_distance(self, other)
    }
}
