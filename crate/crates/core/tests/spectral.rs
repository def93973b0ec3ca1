use std::sync::Arc;

use approx::assert_relative_eq;
use nlslab::bessel;
use nlslab::spectral::{
    free_evolve, free_propagator_multiplier, in_out_pair, lp_project, snapshot, FrequencyBand, RadialField, RadialGrid,
    SpectralField,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn gaussian(grid: &Arc<RadialGrid>, a: f64) -> RadialField {
    RadialField::from_real_fn(grid.clone(), |r| (-a * r * r).exp())
}

fn rel_l2(a: &RadialField, b: &RadialField) -> f64 {
    a.l2_distance(b).unwrap() / b.l2_norm()
}

/// Bisection on the trapezoid reference for J0, independent of the library.
fn j0_zero_reference(k: usize) -> f64 {
    let j0 = |x: f64| {
        let m = 2000;
        let h = std::f64::consts::PI / m as f64;
        (0..=m)
            .map(|i| {
                let t = i as f64 * h;
                let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                w * (x * t.sin()).cos()
            })
            .sum::<f64>()
            * h
            / std::f64::consts::PI
    };
    let guess = (k as f64 - 0.25) * std::f64::consts::PI;
    let (mut lo, mut hi) = (guess - 0.3, guess + 0.3);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if j0(lo) * j0(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn grid_nodes_match_bessel_zero_oracle() {
    let g = RadialGrid::new(256, 20.0).unwrap();
    let j1 = j0_zero_reference(1);
    let j257 = j0_zero_reference(257);
    assert_relative_eq!(g.r()[0], 20.0 * j1 / j257, max_relative = 1e-12);
    assert_relative_eq!(g.kmax(), j257 / 20.0, max_relative = 1e-12);
    assert!(g.r().windows(2).all(|w| w[0] < w[1]));
    assert!(*g.r().last().unwrap() < 20.0);
}

#[test]
fn gaussian_self_transform() {
    let g = RadialGrid::new(256, 20.0).unwrap();
    let f = gaussian(&g, 0.5);
    let spec = f.forward();
    let resolved = g.resolved_kmax();
    for (x, v) in g.xi().iter().zip(spec.coeffs()) {
        if *x < resolved {
            assert!((v - c((-0.5 * x * x).exp(), 0.0)).norm() < 1e-10, "xi={x}");
        }
    }
}

#[test]
fn zero_maps_to_zero() {
    let g = RadialGrid::new(64, 5.0).unwrap();
    let z = RadialField::zeros(g.clone());
    assert!(z.forward().coeffs().iter().all(|v| v.norm() == 0.0));
    let zs = SpectralField::new(g, vec![c(0.0, 0.0); 64]).unwrap();
    assert!(zs.inverse().values().iter().all(|v| v.norm() == 0.0));
}

#[test]
fn basis_vector_inverts_to_bessel_mode() {
    let g = RadialGrid::new(128, 10.0).unwrap();
    let j = 7;
    let mut coeffs = vec![c(0.0, 0.0); 128];
    coeffs[j] = c(1.0, 0.0);
    let f = SpectralField::new(g.clone(), coeffs).unwrap().inverse();
    let xi = g.xi()[j];
    let ratio = f.values()[0].re / bessel::j0(xi * g.r()[0]);
    for (k, &r) in g.r().iter().enumerate() {
        let expect = ratio * bessel::j0(xi * r);
        assert!((f.values()[k].re - expect).abs() < 1e-10 * ratio.abs(), "k={k}");
        assert!(f.values()[k].im.abs() < 1e-15);
    }
}

#[test]
fn gaussian_round_trip() {
    let g = RadialGrid::new(512, 20.0).unwrap();
    let f = gaussian(&g, 0.5);
    let back = f.forward().inverse();
    assert!(rel_l2(&back, &f) < 1e-12);
}

#[test]
fn free_gaussian_matches_closed_form() {
    let g = RadialGrid::new(512, 30.0).unwrap();
    let f = gaussian(&g, 0.5);
    for &t in &[0.3, 1.0, 1.5] {
        let u = free_evolve(&f, t);
        // e^{it Delta} e^{-r^2/2} = (1+2it)^{-1} exp(-r^2 / (2 (1+2it)))
        let exact = RadialField::from_fn(g.clone(), |r| {
            let z = c(1.0, 2.0 * t);
            (-(r * r) / (2.0 * z)).exp() / z
        });
        assert!(rel_l2(&u, &exact) < 1e-9, "t={t}: {}", rel_l2(&u, &exact));
    }
}

#[test]
fn propagator_identity_at_zero_and_group_law() {
    let g = RadialGrid::new(128, 10.0).unwrap();
    let f = gaussian(&g, 1.3).forward();
    let same = free_propagator_multiplier(&f, 0.0);
    assert_eq!(same.coeffs(), f.coeffs());
    let two = free_propagator_multiplier(&free_propagator_multiplier(&f, 0.2), 0.35);
    let one = free_propagator_multiplier(&f, 0.55);
    for (a, b) in two.coeffs().iter().zip(one.coeffs()) {
        assert!((a - b).norm() < 1e-14);
    }
}

#[test]
fn littlewood_paley_partition_of_unity() {
    let g = RadialGrid::new(512, 20.0).unwrap();
    let f = gaussian(&g, 0.7);
    let n_min = 0.125;
    let mut sum = lp_project(&f, FrequencyBand::AtMost { n: n_min }, false).unwrap();
    let mut n = 2.0 * n_min;
    while n <= 16.0 {
        let piece = lp_project(&f, FrequencyBand::Dyadic { n }, false).unwrap();
        sum = sum.add(&piece).unwrap();
        n *= 2.0;
    }
    assert!(rel_l2(&sum, &f) < 1e-10);
}

#[test]
fn fattened_projection_absorbs_dyadic_piece() {
    let g = RadialGrid::new(512, 20.0).unwrap();
    let f = RadialField::from_fn(g.clone(), |r| c(1.0, 0.3 * r) * (-0.2 * r * r).exp());
    for &n in &[0.5, 2.0, 8.0] {
        let p = lp_project(&f, FrequencyBand::Dyadic { n }, false).unwrap();
        let pp = lp_project(&p, FrequencyBand::Fattened { n }, false).unwrap();
        assert!(pp.l2_distance(&p).unwrap() <= 1e-12 * f.l2_norm());
    }
}

#[test]
fn low_pass_of_gaussian_is_identity() {
    // Gaussian e^{-r^2/2} has spectrum e^{-xi^2/2}; mass beyond xi=10 is e^{-100}.
    let g = RadialGrid::new(512, 20.0).unwrap();
    let f = gaussian(&g, 0.5);
    let p = lp_project(&f, FrequencyBand::AtMost { n: 10.0 }, false).unwrap();
    assert!(rel_l2(&p, &f) < 1e-8);
}

#[test]
fn band_beyond_kmax_is_out_of_range() {
    let g = RadialGrid::new(64, 10.0).unwrap();
    let f = gaussian(&g, 0.5);
    let err = lp_project(&f, FrequencyBand::Dyadic { n: 2.0 * g.kmax() }, false).unwrap_err();
    assert!(matches!(err, nlslab::NlsError::OutOfRange(_)));
}

/// `e^{-x} Ei(x)` by its power series (small x) or asymptotic series (large x).
fn scaled_ei(x: f64) -> f64 {
    if x < 40.0 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..400 {
            term *= x / k as f64;
            sum += term / k as f64;
            if term < 1e-18 * sum {
                break;
            }
        }
        (0.577_215_664_901_532_9 + x.ln() + sum) * (-x).exp()
    } else {
        let mut term = 1.0 / x;
        let mut sum = term;
        for k in 1..40 {
            let next = term * k as f64 / x;
            if next > term {
                break;
            }
            term = next;
            sum += term;
        }
        sum
    }
}

#[test]
fn outgoing_projection_of_gaussian() {
    // PV \int_0^inf e^{-s} / (sigma - s) ds = e^{-sigma} Ei(sigma)
    let g = RadialGrid::new(512, 20.0).unwrap();
    let f = gaussian(&g, 1.0);
    let (plus, minus) = in_out_pair(&f);
    let mut worst = 0.0_f64;
    for (k, &r) in g.r().iter().enumerate() {
        let expect = c(0.5 * (-r * r).exp(), scaled_ei(r * r) / (2.0 * std::f64::consts::PI));
        worst = worst.max((plus.values()[k] - expect).norm());
    }
    assert!(worst < 1e-8, "worst pointwise error {worst:e}");
    for (p, m) in plus.values().iter().zip(minus.values()) {
        assert_eq!(*p, m.conj());
    }
}

#[test]
fn snapshot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.nlsf");
    let g = RadialGrid::new(64, 7.5).unwrap();
    let f = RadialField::from_fn(g, |r| c(r.cos(), r.sin()) * (-r).exp());
    snapshot::write_snapshot(&path, &f, Some(0.25), serde_json::json!({"source": "test"})).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"NLSF");
    assert_eq!(bytes.len(), 20 + 16 * 64);
    let back = snapshot::read_snapshot(&path).unwrap();
    assert_eq!(back.values(), f.values());
    assert_eq!(back.grid().radius(), 7.5);
    let meta = snapshot::read_meta(&path).unwrap().unwrap();
    assert_eq!(meta.n, 64);
    assert_eq!(meta.time, Some(0.25));
}

#[test]
fn snapshot_rejects_garbage() {
    assert!(snapshot::decode(b"NLSX\x01\0\0\0").is_err());
    assert!(snapshot::decode(b"NLSF\x01\0\0\0\x08\0\0\0").is_err());
}

fn random_field(grid: &Arc<RadialGrid>, params: &[(f64, f64, f64, f64)]) -> RadialField {
    RadialField::from_fn(grid.clone(), |r| {
        params
            .iter()
            .map(|&(amp, width, chirp, phase)| {
                let x = r / width;
                Complex64::from_polar(amp, phase + chirp * x * x) * (-x * x).exp()
            })
            .sum()
    })
}

fn mixture() -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec((-2.0..2.0f64, 0.5..4.0f64, -1.0..1.0f64, 0.0..6.28f64), 1..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn plancherel_and_round_trip(params in mixture()) {
        let g = RadialGrid::new(256, 20.0).unwrap();
        let f = random_field(&g, &params);
        prop_assume!(f.l2_norm() > 1e-3);
        let spec = f.forward();
        prop_assert!((spec.mass().sqrt() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm());
        prop_assert!(rel_l2(&spec.inverse(), &f) <= 1e-12);
        let spec_back = spec.inverse().forward();
        let diff: f64 = spec_back.coeffs().iter().zip(spec.coeffs()).zip(g.xi_weights())
            .map(|((a, b), w)| w * (a - b).norm_sqr()).sum();
        prop_assert!(diff.sqrt() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn propagator_is_unitary(params in mixture(), t in -5.0..5.0f64) {
        let g = RadialGrid::new(256, 20.0).unwrap();
        let f = random_field(&g, &params);
        prop_assume!(f.l2_norm() > 1e-3);
        let u = free_evolve(&f, t);
        prop_assert!((u.mass() - f.mass()).abs() <= 1e-13 * f.mass());
    }

    #[test]
    fn in_out_adds_to_identity(params in mixture()) {
        let g = RadialGrid::new(256, 20.0).unwrap();
        let f = random_field(&g, &params);
        let (p, m) = in_out_pair(&f);
        for ((a, b), v) in p.values().iter().zip(m.values()).zip(f.values()) {
            prop_assert!((a + b - v).norm() <= 1e-14 * (1.0 + v.norm()));
        }
    }
}
