//! Projections onto outgoing (`+`) and incoming (`-`) spherical waves.
//!
//! For radial `f`, `P^{+-} f(r) = f(r)/2 +- (i / 2pi) I(r^2)` with
//! `I(sigma) = PV \int_0^inf g(s) / (sigma - s) ds` and `g(s) = f(sqrt s)`.
//! The singular part is removed by subtracting `g(sigma) L(s - sigma)`,
//! `L(t) = 1/(1+t^2)`, whose principal value is known in closed form. What is
//! left is smooth in `s` and is integrated with the node quadrature
//! (`ds = 2 rho d rho`). At the diagonal node the regularised integrand takes
//! its limit `-g'(sigma) = -f'(r) / (2r)`, read off the spectral derivative.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::field::RadialField;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaveDirection {
    Outgoing,
    Incoming,
}

/// `I(r_k^2)` at every node.
fn principal_value(f: &RadialField) -> Vec<Complex64> {
    let grid = f.grid();
    let r = grid.r();
    let vals = f.values();
    let n = r.len();
    let s_max = grid.radius() * grid.radius();
    // \int_0^R F rho d rho ~ sum q_k F(r_k)
    let q: Vec<f64> = grid.weights().iter().map(|w| w / (2.0 * PI)).collect();
    let df = f.radial_derivative();

    (0..n)
        .map(|k| {
            let sigma = r[k] * r[k];
            let gs = vals[k];
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let s = r[j] * r[j];
                let integrand = if j == k {
                    -df[k] / (2.0 * r[k])
                } else {
                    let d = s - sigma;
                    (vals[j] - gs / (1.0 + d * d)) / (sigma - s)
                };
                acc += 2.0 * q[j] * integrand;
            }
            let gap = s_max - sigma;
            let closed = sigma.ln() - 0.5 * (1.0 + sigma * sigma).ln() + 0.5 * (1.0 + 1.0 / (gap * gap)).ln();
            acc + gs * closed
        })
        .collect()
}

/// `P^+ f` or `P^- f` at the nodes.
///
/// `P^- f` is formed as `f - P^+ f`, so the two always add back to `f`.
pub fn in_out_project(f: &RadialField, dir: WaveDirection) -> RadialField {
    let (plus, minus) = in_out_pair(f);
    match dir {
        WaveDirection::Outgoing => plus,
        WaveDirection::Incoming => minus,
    }
}

/// `(P^+ f, P^- f)` with a single principal-value pass.
pub fn in_out_pair(f: &RadialField) -> (RadialField, RadialField) {
    let pv = principal_value(f);
    let i_over = Complex64::new(0.0, 1.0 / (2.0 * PI));
    let mut plus = f.clone();
    for (p, v) in plus.values_mut().iter_mut().zip(&pv) {
        *p = *p * 0.5 + i_over * v;
    }
    let minus = f.sub(&plus).expect("same grid");
    (plus, minus)
}
