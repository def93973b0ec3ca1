use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use once_cell::sync::Lazy;
use proptest::prelude::*;

use nlslab::evolution::*;
use nlslab::groundstate::shoot_ground_state;
use nlslab::spectral::{RadialField, RadialGrid};
use nlslab::symmetry::*;
use nlslab::NlsError;

static GRID: Lazy<Arc<RadialGrid>> = Lazy::new(|| RadialGrid::new(640, 40.0).unwrap());
static GAUSS_RUN: Lazy<Trajectory> = Lazy::new(|| {
    let u0 = RadialField::from_real_fn(GRID.clone(), |r| 1.5 * (-0.5 * r * r).exp());
    radial_run(&u0, 0.0, 1.0)
});

const SIDE: f64 = 2.0 * PI * 6.0;

fn radial_run(u0: &RadialField, t0: f64, t1: f64) -> Trajectory {
    let cfg = EvolveConfig {
        mu: 1.0,
        dt0: 1e-3,
        t_start: t0,
        t_end: t1,
        snapshot_stride: 100,
        ..Default::default()
    };
    evolve(u0, &cfg).unwrap()
}

/// Re-solves from the first snapshot of `traj` to five of its snapshot times
/// and returns the largest `L^2` distance.
fn covariance_gap<F: NlsField>(traj: &Trajectory<F>, dt: f64) -> f64 {
    let last = traj.snapshots.len() - 1;
    let mut u = traj.snapshots[0].1.clone();
    let mut t = traj.snapshots[0].0;
    let mut worst: f64 = 0.0;
    for k in 0..5 {
        let (tk, target) = &traj.snapshots[k * last / 4];
        if *tk > t {
            let cfg = EvolveConfig {
                mu: traj.mu,
                dt0: dt,
                t_start: t,
                t_end: *tk,
                snapshot_stride: usize::MAX,
                ..Default::default()
            };
            u = evolve(&u, &cfg).unwrap().snapshots.pop().unwrap().1;
            t = *tk;
        }
        worst = worst.max(u.l2_distance(target).unwrap());
    }
    worst
}

fn cartesian_gauss() -> CartesianField {
    CartesianField::from_fn(128, SIDE, |x, y| {
        Complex64::new(1.5 * (-0.5 * ((x - 1.0).powi(2) + y * y)).exp(), 0.0)
    })
    .unwrap()
}

fn cartesian_run(u0: &CartesianField) -> Trajectory<CartesianField> {
    let cfg = EvolveConfig {
        mu: 1.0,
        dt0: 1e-3,
        t_end: 1.0,
        snapshot_stride: 100,
        backend: Backend::Cartesian,
        ..Default::default()
    };
    evolve(u0, &cfg).unwrap()
}

#[test]
fn identity_leaves_fields_unchanged() {
    let f = &GAUSS_RUN.snapshots[3].1;
    let g = apply_group_element(&GroupElement::identity(), f).unwrap();
    assert!(g.l2_distance(f).unwrap() <= 1e-14);
    let c = cartesian_gauss();
    let d = apply_group_element(&GroupElement::identity(), &c).unwrap();
    assert!(d.distance(&c).unwrap() <= 1e-14);
}

#[test]
fn element_validation() {
    let f = &GAUSS_RUN.snapshots[0].1;
    assert!(GroupElement::radial(0.0, 0.0).validate().is_err());
    assert!(GroupElement::radial(0.0, f64::NAN).validate().is_err());
    let shifted = GroupElement {
        x0: [1.0, 0.0],
        ..GroupElement::identity()
    };
    assert!(shifted.validate().is_err());
    let free = GroupElement {
        radial: false,
        ..shifted
    };
    assert!(free.validate().is_ok());
    assert!(matches!(f.apply_group(&free), Err(NlsError::InvalidArgument(_))));
    let off_lattice = GroupElement {
        xi0: [0.1, 0.0],
        radial: false,
        ..GroupElement::identity()
    };
    assert!(cartesian_gauss().apply_group(&off_lattice).is_err());
}

#[test]
fn unresolved_rescaling_is_out_of_range() {
    let f = &GAUSS_RUN.snapshots[0].1;
    assert!(matches!(
        f.apply_group(&GroupElement::radial(0.0, 30.0)),
        Err(NlsError::OutOfRange(_))
    ));
    assert!(matches!(
        f.apply_group(&GroupElement::radial(0.0, 0.005)),
        Err(NlsError::OutOfRange(_))
    ));
}

#[test]
fn radial_group_law() {
    let f = &GAUSS_RUN.snapshots[2].1;
    let g1 = GroupElement::radial(0.4, 1.3);
    let g2 = GroupElement::radial(5.9, 0.8);
    let a = f.apply_group(&g2).and_then(|h| h.apply_group(&g1)).unwrap();
    let b = f.apply_group(&g1.compose(&g2)).unwrap();
    assert!(a.l2_distance(&b).unwrap() <= 1e-9);
}

#[test]
fn cartesian_group_law() {
    let f = cartesian_gauss();
    let lattice = 2.0 * PI / SIDE;
    let g1 = GroupElement {
        theta: 0.7,
        xi0: [3.0 * lattice, -lattice],
        x0: [0.5, -1.25],
        lambda: 1.0,
        radial: false,
    };
    let g2 = GroupElement {
        theta: 1.9,
        xi0: [-2.0 * lattice, 4.0 * lattice],
        x0: [-0.3, 0.8],
        lambda: 1.0,
        radial: false,
    };
    let a = f.apply_group(&g2).and_then(|h| h.apply_group(&g1)).unwrap();
    let b = f.apply_group(&g1.compose(&g2)).unwrap();
    assert!(a.distance(&b).unwrap() <= 1e-9);
}

#[test]
fn scaling_covariance() {
    let sc = transform_trajectory(&GroupElement::radial(0.0, 2.0), &GAUSS_RUN).unwrap();
    assert_eq!(sc.snapshots.last().unwrap().0, 4.0);
    let gap = covariance_gap(&sc, 4e-3);
    assert!(gap <= 1e-5, "{gap:e}");
}

#[test]
fn phase_translation_and_reversal_covariance() {
    let ph = transform_trajectory(&GroupElement::radial(0.7, 1.0), &GAUSS_RUN).unwrap();
    assert!(covariance_gap(&ph, 1e-3) <= 1e-5);
    let tt = time_translate(&GAUSS_RUN, 0.5);
    assert_eq!(tt.snapshots[0].0, -0.5);
    assert!(covariance_gap(&tt, 1e-3) <= 1e-5);
    let rv = time_reverse(&GAUSS_RUN);
    assert_eq!(rv.snapshots[0].0, -1.0);
    assert!(covariance_gap(&rv, 1e-3) <= 1e-5);
}

#[test]
fn l4_norm_is_invariant() {
    let g = GroupElement::radial(1.1, 2.0);
    let moved = GAUSS_RUN.snapshots[0].1.apply_group(&g).unwrap();
    let cfg = EvolveConfig {
        mu: 1.0,
        dt0: 4e-3,
        t_end: 4.0,
        snapshot_stride: usize::MAX,
        ..Default::default()
    };
    let resolved = evolve(&moved, &cfg).unwrap();
    let a = GAUSS_RUN.series.last().unwrap().l4_cum;
    let b = resolved.series.last().unwrap().l4_cum;
    assert!((a - b).abs() <= 1e-6 * a, "{a} vs {b}");
    let tr = transform_trajectory(&g, &GAUSS_RUN).unwrap();
    assert!((tr.series.last().unwrap().l4_cum - a).abs() <= 1e-12 * a);
}

#[test]
fn double_reversal_is_exact() {
    let twice = time_reverse(&time_reverse(&GAUSS_RUN));
    assert_eq!(twice.times(), GAUSS_RUN.times());
    for ((_, a), (_, b)) in twice.snapshots.iter().zip(&GAUSS_RUN.snapshots) {
        assert_eq!(a.values(), b.values());
    }
    let once = time_reverse(&GAUSS_RUN);
    for ((_, a), (_, b)) in once.snapshots.iter().rev().zip(&GAUSS_RUN.snapshots) {
        assert_eq!(a.mass(), b.mass());
    }
}

#[test]
fn pseudoconformal_covariance_and_mass() {
    let u0 = RadialField::from_real_fn(GRID.clone(), |r| 1.5 * (-0.5 * r * r).exp());
    let base = radial_run(&u0, 1.0, 2.0);
    let pc = pseudoconformal(&base).unwrap();
    assert_eq!(pc.snapshots[0].0, -1.0);
    assert_eq!(pc.snapshots.last().unwrap().0, -0.5);
    for ((_, a), (_, b)) in pc.snapshots.iter().zip(&base.snapshots) {
        assert!((a.mass() - b.mass()).abs() <= 1e-8 * b.mass());
    }
    let gap = covariance_gap(&pc, 1e-3);
    assert!(gap <= 1e-4, "{gap:e}");
    let back = pseudoconformal(&pc).unwrap();
    for ((t, a), (s, b)) in back.snapshots.iter().zip(&base.snapshots) {
        assert!((t - s).abs() <= 1e-12);
        assert!(a.l2_distance(b).unwrap() <= 1e-6);
    }
}

#[test]
fn pseudoconformal_rejects_intervals_through_zero() {
    let u0 = RadialField::from_real_fn(GRID.clone(), |r| (-0.5 * r * r).exp());
    let run = radial_run(&u0, -0.1, 0.1);
    assert!(matches!(pseudoconformal(&run), Err(NlsError::InvalidArgument(_))));
    assert!(pseudoconformal_field(&u0, 0.0).is_err());
}

#[test]
fn pc_soliton_matches_the_generic_map() {
    let grid = RadialGrid::new(512, 20.0).unwrap();
    let q = shoot_ground_state(&grid, 1e-12).unwrap().profile;
    let closed = pc_soliton(&q, -1.0).unwrap();
    let soliton_at_one = q.scale(Complex64::from_polar(1.0, 1.0));
    let (t, generic) = pseudoconformal_field(&soliton_at_one, 1.0).unwrap();
    assert_eq!(t, -1.0);
    assert!(closed.l2_distance(&generic).unwrap() <= 1e-12);
    assert!(pc_soliton(&q, 0.0).is_err());
    assert!(matches!(pc_soliton(&q, -0.01), Err(NlsError::OutOfRange(_))));
}

#[test]
fn boost_and_translation_covariance() {
    let base = cartesian_run(&cartesian_gauss());
    let lattice = 2.0 * PI / SIDE;
    for g in [
        GroupElement {
            xi0: [6.0 * lattice, 0.0],
            radial: false,
            ..GroupElement::identity()
        },
        GroupElement {
            x0: [1.3, -2.2],
            radial: false,
            ..GroupElement::identity()
        },
    ] {
        let tr = transform_trajectory(&g, &base).unwrap();
        let gap = covariance_gap(&tr, 1e-3);
        assert!(gap <= 1e-5, "{g:?}: {gap:e}");
    }
}

#[test]
fn boosted_centroid_moves_at_twice_the_boost() {
    let lattice = 2.0 * PI / SIDE;
    let g = GroupElement {
        xi0: [6.0 * lattice, 0.0],
        radial: false,
        ..GroupElement::identity()
    };
    let boosted = cartesian_gauss().apply_group(&g).unwrap();
    let tr = cartesian_run(&boosted);
    let (t0, a) = &tr.snapshots[0];
    let (t1, b) = tr.snapshots.last().unwrap();
    let (x0, y0) = a.centroid();
    let (x1, y1) = b.centroid();
    let vx = (x1 - x0) / (t1 - t0);
    assert!((vx - 2.0 * g.xi0[0]).abs() <= 1e-6, "{vx}");
    assert!((y1 - y0).abs() <= 1e-9);
}

#[test]
fn radial_elements_keep_radial_data_radial() {
    let f = &GAUSS_RUN.snapshots[4].1;
    let c = CartesianField::from_radial(f, 128, SIDE).unwrap();
    let g = GroupElement::radial(0.3, 1.0);
    let via_radial = CartesianField::from_radial(&f.apply_group(&g).unwrap(), 128, SIDE).unwrap();
    let via_cart = c.apply_group(&g).unwrap();
    assert!(via_radial.distance(&via_cart).unwrap() <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn group_actions_preserve_mass(theta in 0.0..6.2f64, lambda in 0.6..1.6f64, k in -4i32..4, a in -2.0..2.0f64) {
        let f = &GAUSS_RUN.snapshots[1].1;
        let g = GroupElement::radial(theta, lambda);
        let m = f.mass();
        prop_assert!((f.apply_group(&g).unwrap().mass() - m).abs() <= 1e-10 * m);
        let c = cartesian_gauss();
        let h = GroupElement {
            theta,
            xi0: [k as f64 * 2.0 * PI / SIDE, 0.0],
            x0: [a, -a],
            lambda: 1.0,
            radial: false,
        };
        let mc = c.mass();
        prop_assert!((c.apply_group(&h).unwrap().mass() - mc).abs() <= 1e-10 * mc);
    }

    #[test]
    fn composition_is_associative(
        t1 in 0.0..6.2f64, t2 in 0.0..6.2f64, t3 in 0.0..6.2f64,
        l1 in 0.5..2.0f64, l2 in 0.5..2.0f64, l3 in 0.5..2.0f64,
        s in prop::array::uniform4(-3.0..3.0f64),
    ) {
        let a = GroupElement { theta: t1, xi0: [s[0], s[1]], x0: [s[2], s[3]], lambda: l1, radial: false };
        let b = GroupElement { theta: t2, xi0: [s[3], s[0]], x0: [s[1], s[2]], lambda: l2, radial: false };
        let c = GroupElement::radial(t3, l3);
        let x = a.compose(&b).compose(&c);
        let y = a.compose(&b.compose(&c));
        let dtheta = (x.theta - y.theta).rem_euclid(2.0 * PI);
        prop_assert!(dtheta.min(2.0 * PI - dtheta) <= 1e-9);
        prop_assert!((x.lambda - y.lambda).abs() <= 1e-12);
        for i in 0..2 {
            prop_assert!((x.xi0[i] - y.xi0[i]).abs() <= 1e-12);
            prop_assert!((x.x0[i] - y.x0[i]).abs() <= 1e-12);
        }
    }
}
