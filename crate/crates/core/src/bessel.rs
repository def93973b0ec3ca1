//! Bessel functions needed by the radial transforms.
//!
//! `J0`/`J1` are evaluated by their power series for small arguments, by
//! Miller's backward recurrence (normalised with `J0 + 2 Σ J_2k = 1`) in the
//! middle range and by the Hankel asymptotic expansion for large arguments.
//! All three branches agree to ~1e-15 absolute at their seams.

use std::f64::consts::{FRAC_PI_4, PI};

const SERIES_LIMIT: f64 = 2.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;

/// Bessel function of the first kind, order zero.
pub fn j0(x: f64) -> f64 {
    bessel_j01(x).0
}

/// Bessel function of the first kind, order one.
pub fn j1(x: f64) -> f64 {
    bessel_j01(x).1
}

/// `(J0(x), J1(x))` evaluated together.
pub fn bessel_j01(x: f64) -> (f64, f64) {
    let ax = x.abs();
    let (a, b) = if ax < SERIES_LIMIT {
        series_j01(ax)
    } else if ax < ASYMPTOTIC_LIMIT {
        miller_j01(ax)
    } else {
        asymptotic_j01(ax)
    };
    // J0 is even, J1 is odd.
    (a, if x < 0.0 { -b } else { b })
}

fn series_j01(x: f64) -> (f64, f64) {
    let q = -0.25 * x * x;
    let mut t0 = 1.0;
    let mut s0 = 1.0;
    let mut t1 = 0.5 * x;
    let mut s1 = t1;
    for k in 1..40 {
        let kf = k as f64;
        t0 *= q / (kf * kf);
        t1 *= q / (kf * (kf + 1.0));
        s0 += t0;
        s1 += t1;
        if t0.abs() < 1e-18 && t1.abs() < 1e-18 {
            break;
        }
    }
    (s0, s1)
}

fn miller_j01(x: f64) -> (f64, f64) {
    // start index well beyond x so the seed error is damped out
    let mut m = (x + 30.0 + 6.0 * x.cbrt() * x.cbrt()) as usize;
    if m % 2 == 1 {
        m += 1;
    }
    let two_over_x = 2.0 / x;
    let mut jp1 = 0.0_f64;
    let mut j = 1e-300_f64;
    let mut norm = 0.0_f64;
    let mut j1_raw = 0.0;
    for k in (1..=m).rev() {
        let jm1 = (k as f64) * two_over_x * j - jp1;
        jp1 = j;
        j = jm1;
        // j now holds J_{k-1}
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j;
        }
        if k - 1 == 1 {
            j1_raw = j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            j1_raw *= 1e-250;
        }
    }
    norm += j;
    (j / norm, j1_raw / norm)
}

fn asymptotic_j01(x: f64) -> (f64, f64) {
    let (p0, q0) = hankel_pq(0.0, x);
    let (p1, q1) = hankel_pq(4.0, x);
    let scale = (2.0 / (PI * x)).sqrt();
    let c0 = x - FRAC_PI_4;
    let c1 = x - 3.0 * FRAC_PI_4;
    (
        scale * (p0 * c0.cos() - q0 * c0.sin()),
        scale * (p1 * c1.cos() - q1 * c1.sin()),
    )
}

/// Hankel's P and Q series for `mu = 4 nu^2`, truncated at the smallest term.
fn hankel_pq(mu: f64, x: f64) -> (f64, f64) {
    let z = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    let mut last = f64::INFINITY;
    for k in 1..80 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * z);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        // odd k feed Q, even k feed P, with alternating signs
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    (p, q)
}

/// The first `count` positive zeros of `J0`, in increasing order.
pub fn j0_zeros(count: usize) -> Vec<f64> {
    (1..=count).map(j0_zero).collect()
}

/// The `k`-th positive zero of `J0` (`k >= 1`).
pub fn j0_zero(k: usize) -> f64 {
    assert!(k >= 1, "zeros are indexed from 1");
    let beta = (k as f64 - 0.25) * PI;
    let b8 = 8.0 * beta;
    // McMahon's expansion as the Newton seed
    let mut z = beta + 1.0 / b8 - 124.0 / (3.0 * b8.powi(3)) + 120_928.0 / (15.0 * b8.powi(5));
    for _ in 0..8 {
        let (a, b) = bessel_j01(z);
        let step = a / b;
        z += step;
        if step.abs() < 1e-15 * z {
            break;
        }
    }
    z
}

/// Modified Bessel functions `(K0(x), K1(x))` for `x > 0`.
///
/// Uses `K_nu(x) = \int_0^inf exp(-x cosh t) cosh(nu t) dt`; the integrand
/// decays double-exponentially, so the trapezoid rule is accurate to round-off.
pub fn bessel_k01(x: f64) -> (f64, f64) {
    assert!(x > 0.0, "K0/K1 need a positive argument");
    let h = 0.02_f64;
    let mut s0 = 0.5 * (-x).exp();
    let mut s1 = s0;
    let mut t = h;
    loop {
        let e = (-x * t.cosh()).exp();
        s0 += e;
        s1 += e * t.cosh();
        if e < 1e-18 * s0 {
            break;
        }
        t += h;
    }
    (s0 * h, s1 * h)
}

pub fn k0(x: f64) -> f64 {
    bessel_k01(x).0
}

pub fn k1(x: f64) -> f64 {
    bessel_k01(x).1
}

#[cfg(test)]
mod tests {
    use super::*;

    /// J_n(x) = (1/pi) \int_0^pi cos(n t - x sin t) dt; the trapezoid rule on
    /// a periodic integrand converges geometrically, so this is an independent
    /// reference to ~1e-15.
    fn jn_integral(n: i32, x: f64) -> f64 {
        let m = 4096;
        let h = PI / m as f64;
        let mut s = 0.0;
        for i in 0..=m {
            let t = i as f64 * h;
            let w = if i == 0 || i == m { 0.5 } else { 1.0 };
            s += w * (n as f64 * t - x * t.sin()).cos();
        }
        s * h / PI
    }

    #[test]
    fn matches_integral_representation() {
        for &x in &[
            0.0, 1e-6, 0.3, 1.0, 1.99, 2.01, 5.5, 12.0, 24.9, 25.1, 40.0, 137.3, 800.0,
        ] {
            let (a, b) = bessel_j01(x);
            let ea = jn_integral(0, x);
            let eb = jn_integral(1, x);
            let tol = 1e-14 * (1.0 + x.sqrt());
            assert!((a - ea).abs() < tol, "J0({x}) = {a}, expected {ea}");
            assert!((b - eb).abs() < tol, "J1({x}) = {b}, expected {eb}");
        }
    }

    #[test]
    fn parity() {
        assert_eq!(j0(-3.2), j0(3.2));
        assert_eq!(j1(-3.2), -j1(3.2));
    }

    #[test]
    fn first_zeros() {
        let z = j0_zeros(3);
        assert!((z[0] - 2.404_825_557_695_773).abs() < 1e-14);
        assert!((z[1] - 5.520_078_110_286_311).abs() < 1e-14);
        assert!((z[2] - 8.653_727_912_911_013).abs() < 1e-14);
    }

    #[test]
    fn zeros_are_roots_of_integral_reference() {
        for k in [1, 7, 40, 257, 513] {
            let z = j0_zero(k);
            assert!(jn_integral(0, z).abs() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn modified_bessel_table_values() {
        // standard table values
        assert!((k0(1.0) / 0.421_024_438_240_708_3 - 1.0).abs() < 1e-13);
        assert!((k1(1.0) / 0.601_907_230_197_234_6 - 1.0).abs() < 1e-13);
        assert!((k0(10.0) / 1.778_006_231_616_917e-5 - 1.0).abs() < 1e-13);
        let h = 1e-5;
        let fd = (k0(6.0 + h) - k0(6.0 - h)) / (2.0 * h);
        assert!((fd / -k1(6.0) - 1.0).abs() < 1e-8);
    }
}
