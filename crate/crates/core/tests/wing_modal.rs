mod common;

use std::f64::consts::PI;

use common::{phi, phi1, reference_config, rel, simpson, Bending, LAMBDA};
use flutterlab_core::wing::{build_mode_shapes, first_cantilever_root, modal_integrals, strong_form_stiffness, MIN_GRID};
use flutterlab_core::{Error, SpanProfile, WingParams64};

fn wing() -> WingParams64 {
    reference_config().wing
}

#[test]
fn cantilever_root_matches_independent_bisection() {
    let g = |x: f64| x.cosh() * x.cos() + 1.0;
    let (mut lo, mut hi) = (1.5, 2.5);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) * g(lo) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root: f64 = first_cantilever_root();
    assert!((root - 0.5 * (lo + hi)).abs() < 1e-14);
    assert!((root - LAMBDA).abs() < 1e-14);
}

#[test]
fn modes_satisfy_boundary_conditions_and_tip_normalisation() {
    let w = wing();
    let m = build_mode_shapes(&w, 1001).unwrap();
    for r in m.boundary_residuals() {
        assert!(r.abs() < 1e-8, "residual {r}");
    }
    assert!(m.phi(0.0).abs() < 1e-15);
    assert!(m.phi1(w.l).abs() < 1e-12);
    assert!((m.f(w.l) - 1.0).abs() < 1e-12);
    assert!((m.phi(w.l) - 1.0).abs() < 1e-15);
    assert_eq!(*m.f.last().unwrap(), m.f(w.l));
}

#[test]
fn sampled_modes_match_closed_forms() {
    let w = wing();
    let m = build_mode_shapes(&w, 201).unwrap();
    let b = Bending::new(w.l);
    for (k, &z) in m.grid.iter().enumerate() {
        assert!((m.f[k] - b.f(z)).abs() < 1e-12);
        assert!((m.f2[k] - b.f2(z)).abs() < 1e-12 * b.f2(0.0));
        assert!((m.phi[k] - phi(z, w.l)).abs() < 1e-14);
        assert!((m.phi1[k] - phi1(z, w.l)).abs() < 1e-14);
    }
}

#[test]
fn grid_size_is_validated() {
    let w = wing();
    for n in [1000, MIN_GRID - 2] {
        match build_mode_shapes(&w, n) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "modes.n_grid"),
            other => panic!("expected config error for n_grid {n}, got {other:?}"),
        }
    }
}

#[test]
fn coupling_vanishes_without_offset() {
    let mut w = wing();
    w.sigma_t = SpanProfile::Constant(0.0);
    let c = modal_integrals(&w, &build_mode_shapes(&w, 401).unwrap());
    assert_eq!(c.b11, 0.0);
    assert_eq!(c.a21, 0.0);
}

#[test]
fn inertial_coupling_pair_is_exactly_antisymmetric() {
    let w = wing();
    let c = modal_integrals(&w, &build_mode_shapes(&w, 1001).unwrap());
    assert_eq!(c.a21, -c.b11);
    assert!(c.a11 > 0.0 && c.a13 > 0.0 && c.b21 < 0.0 && c.b23_2 < 0.0);
}

#[test]
fn stiffness_identities_hold() {
    let w = wing();
    let modes = build_mode_shapes(&w, 1001).unwrap();
    let c = modal_integrals(&w, &modes);
    let (ej, gj) = (w.ej.constant().unwrap(), w.gj_k.constant().unwrap());
    let b = Bending::new(w.l);
    let weak = simpson(|z| ej * b.f2(z).powi(2), 0.0, w.l, 10_000);
    assert!(rel(c.a13, weak) < 1e-6);
    assert!(rel(c.b23_2, -gj * PI * PI / (8.0 * w.l)) < 1e-6);
    let (bend, tors) = strong_form_stiffness(&w, &modes).unwrap();
    assert!(rel(bend, c.a13) < 1e-6);
    assert!(rel(tors, c.b23_2) < 1e-6);
}

#[test]
fn strong_form_needs_constant_stiffness() {
    let mut w = wing();
    w.ej = SpanProfile::Table { z: vec![0.0, w.l], values: vec![1.2e7, 0.8e7] };
    let modes = build_mode_shapes(&w, 201).unwrap();
    assert!(strong_form_stiffness(&w, &modes).is_none());
}

#[test]
fn speed_power_laws() {
    let w = wing();
    let c = modal_integrals(&w, &build_mode_shapes(&w, 401).unwrap());
    let z = c.at_speed(0.0).unwrap();
    assert_eq!([z.a12, z.b12, z.b13, z.a22, z.b22], [0.0; 5]);
    assert_eq!(z.b23, z.b23_2);
    let one = c.at_speed(40.0).unwrap();
    let two = c.at_speed(80.0).unwrap();
    assert!(rel(two.a12, 2.0 * one.a12) < 1e-15);
    assert!(rel(two.b13, 4.0 * one.b13) < 1e-15);
    assert!(matches!(c.at_speed(-1.0), Err(Error::Domain(_))));
}

/// Integrands with the airspeed substituted before integration.
#[test]
fn evaluated_coefficients_match_direct_substitution() {
    let w = wing();
    let (l, b, x0) = (w.l, w.b.constant().unwrap(), w.x0.constant().unwrap());
    let (cy, rho) = (w.cy_alpha, w.rho);
    let v = 50.0;
    let c = modal_integrals(&w, &build_mode_shapes(&w, 1001).unwrap()).at_speed(v).unwrap();
    let bend = Bending::new(l);
    let q = |g: &dyn Fn(f64) -> f64| simpson(g, 0.0, l, 8000);
    let f = |z: f64| bend.f(z);
    let p = |z: f64| phi(z, l);

    let a12 = q(&|z| cy * rho * v * b * f(z) * f(z));
    let b12 = q(&|z| -cy * rho * v * (0.75 * b - x0) * b * f(z) * p(z));
    let b13 = q(&|z| -cy * rho * v * v * b * f(z) * p(z));
    let a22 = q(&|z| -cy * rho * v * (x0 - 0.25 * b) * b * f(z) * p(z));
    let b22 = q(&|z| {
        (-PI / 16.0 * rho * v * b.powi(3) + cy * rho * v * b * (x0 - 0.25 * b) * (0.75 * b - x0)) * p(z) * p(z)
    });
    let b23 = q(&|z| {
        cy * rho * v * v * b * (x0 - 0.25 * b) * p(z) * p(z) - w.gj_k.constant().unwrap() * phi1(z, l).powi(2)
    });
    for (got, want, name) in
        [(c.a12, a12, "a12"), (c.b12, b12, "b12"), (c.b13, b13, "b13"), (c.a22, a22, "a22"), (c.b22, b22, "b22"), (c.b23, b23, "b23")]
    {
        assert!(rel(got, want) < 1e-9, "{name}: {got} vs {want}");
    }
}

#[test]
fn simpson_converges_at_fourth_order() {
    let w = wing();
    let at = |n: usize| modal_integrals(&w, &build_mode_shapes(&w, n).unwrap());
    let fine = at(4 * 800 + 1);
    let coarse = at(201);
    let mid = at(401);
    for (name, get) in [
        ("a11", (|c: &flutterlab_core::ModalCoefficients64| c.a11) as fn(&_) -> f64),
        ("a13", |c| c.a13),
        ("a21", |c| c.a21),
        ("b12_hat", |c| c.b12_hat),
    ] {
        let e1 = (get(&coarse) - get(&fine)).abs();
        let e2 = (get(&mid) - get(&fine)).abs();
        assert!(e1 >= 8.0 * e2 || e1 < 1e-13 * get(&fine).abs(), "{name}: {e1:e} -> {e2:e}");
    }
}

#[test]
fn tabulated_constant_profile_matches_uniform() {
    let w = wing();
    let mut t = w.clone();
    t.m = SpanProfile::Table { z: vec![0.0, 0.5 * w.l, w.l], values: vec![35.71; 3] };
    assert!(!t.is_uniform());
    let modes = build_mode_shapes(&w, 401).unwrap();
    assert_eq!(modal_integrals(&w, &modes), modal_integrals(&t, &modes));
}

#[test]
fn validation_names_the_offending_field() {
    let field_of = |w: &WingParams64| match w.validate() {
        Err(Error::Config { field, .. }) => field,
        other => panic!("expected config error, got {other:?}"),
    };
    let mut w = wing();
    w.x0 = SpanProfile::Constant(2.0 * w.b.constant().unwrap());
    assert_eq!(field_of(&w), "wing.x0");

    let mut w = wing();
    w.j_m = SpanProfile::Constant(1e-3);
    assert_eq!(field_of(&w), "wing.j_m");

    let mut w = wing();
    w.rho = 0.0;
    assert_eq!(field_of(&w), "wing.rho");

    let mut w = wing();
    w.ej = SpanProfile::Table { z: vec![0.0, w.l], values: vec![1e7, -1.0] };
    assert_eq!(field_of(&w), "wing.ej");
}
