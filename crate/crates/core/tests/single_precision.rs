mod common;

use common::reference_config;
use flutterlab_core::sim::{integrate, metrics};
use flutterlab_core::{Model32, Model64, RunStatus, Scenario32};

#[test]
fn single_precision_model_tracks_double() {
    let cfg = reference_config();
    let m32: Model32 = cfg.build_model().unwrap();
    let m64: Model64 = cfg.build_model().unwrap();
    assert!(((m32.modal.a13 as f64) - m64.modal.a13).abs() < 1e-5 * m64.modal.a13);
    let v32 = cfg.flutter_speed(&m32).unwrap().v_flat as f64;
    let v64 = cfg.flutter_speed(&m64).unwrap().v_flat;
    assert!((v32 - v64).abs() < 1e-3 * v64, "{v32} vs {v64}");
}

#[test]
fn single_precision_run_holds_the_bound() {
    let cfg = reference_config();
    let model: Model32 = cfg.build_model().unwrap();
    let v_flat = cfg.flutter_speed(&model).unwrap().v_flat;
    let sc: Scenario32 = cfg.build_scenario(model, Some(v_flat)).unwrap();
    let rec = integrate(&sc).unwrap();
    assert_eq!(rec.status, RunStatus::Completed);
    assert!(rec.energy.iter().all(|e| e.is_finite()));
    assert!(metrics(&rec, &sc.model.goals, 0.0).hold);
}
