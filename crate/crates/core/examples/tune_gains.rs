//! Grid search over per-surface gains for each law at the configured speed.
//!
//! The one-sided feather intervals make the saturated loop nonlinear, so the
//! ranking is done on the simulated run itself: a gain point qualifies when
//! the energy bound is reached and held, and among those the preferred ones
//! have every grid neighbour qualifying too (robust to a quarter-decade
//! error in either gain); these are listed by linear closed-loop abscissa.
//! Gains whose spectral radius times `dt` leaves the RK4 stability interval
//! are skipped.
//!
//! Usage: cargo run --release --example tune_gains -- crates/core/config/reference.json

use rayon::prelude::*;

use flutterlab_core::control::{Controller, Law};
use flutterlab_core::eigen::{cabs, eigenvalues, pruned_abscissa};
use flutterlab_core::feather::Surface;
use flutterlab_core::sim::{integrate, metrics};
use flutterlab_core::{load_config, Result, RunStatus};

/// |lambda| dt must stay below this (RK4 real-axis limit is about 2.78).
const RK4_MARGIN: f64 = 2.5;
const STEPS: i32 = 41;

struct Point {
    ok: bool,
    e_end: f64,
    alpha: f64,
    radius: f64,
}

fn main() -> Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "crates/core/config/reference.json".into());
    let cfg = load_config(&path)?;
    let model = cfg.build_model::<f64>()?;
    let fl = cfg.flutter_speed(&model)?;
    let base = cfg.build_scenario(model, Some(fl.v_flat))?;
    let v = base.speed.at(0.0);
    let ss = base.model.state_space(v)?;
    println!("v_flat {:.6} m/s, evaluating at {v:.4} m/s, dt {}", fl.v_flat, base.dt);

    let log_gain = |k: i32| -4.0 + 0.25 * k as f64;
    for law in [Law::A, Law::B, Law::C] {
        let cells: Vec<(i32, i32)> = (0..STEPS).flat_map(|i| (0..STEPS).map(move |j| (i, j))).collect();
        let points: Vec<Point> = cells
            .par_iter()
            .map(|&(i, j)| {
                let mut sc = base.clone();
                sc.control = base.control.with_law(law);
                sc.control.gamma = sc
                    .model
                    .feathers
                    .iter()
                    .map(|f| 10f64.powf(log_gain(if f.side == Surface::Lower { i } else { j })))
                    .collect();
                let ctrl = Controller { config: &sc.control, topology: &sc.model.topology, goals: &sc.model.goals };
                let m = ctrl.closed_loop_matrix(&ss);
                let radius = eigenvalues(&m).unwrap().into_iter().map(cabs).fold(0.0, f64::max);
                let alpha = pruned_abscissa(&m).unwrap().0;
                if radius * sc.dt > RK4_MARGIN {
                    return Point { ok: false, e_end: f64::INFINITY, alpha, radius };
                }
                match integrate(&sc) {
                    Ok(rec) => {
                        let met = metrics(&rec, &sc.model.goals, 0.0);
                        let ok = met.status == RunStatus::Completed && met.hold;
                        Point { ok, e_end: *rec.energy.last().unwrap(), alpha, radius }
                    }
                    Err(_) => Point { ok: false, e_end: f64::INFINITY, alpha, radius },
                }
            })
            .collect();
        let at = |i: i32, j: i32| &points[(i * STEPS + j) as usize];
        let mut robust: Vec<(i32, i32)> = cells
            .iter()
            .copied()
            .filter(|&(i, j)| {
                (-1..=1).all(|di| {
                    (-1..=1).all(|dj| {
                        let (a, b) = (i + di, j + dj);
                        (0..STEPS).contains(&a) && (0..STEPS).contains(&b) && at(a, b).ok
                    })
                })
            })
            .collect();
        robust.sort_by(|a, b| at(a.0, a.1).alpha.partial_cmp(&at(b.0, b.1).alpha).unwrap());
        let passing = points.iter().filter(|p| p.ok).count();
        println!("{law:?}: {passing} of {} grid points hold the bound, {} robustly", points.len(), robust.len());
        if std::env::var_os("TUNE_MAP").is_some() {
            for i in 0..STEPS {
                let row: String = (0..STEPS)
                    .map(|j| match (at(i, j).ok, at(i, j).alpha < 0.0) {
                        (true, true) => '@',
                        (true, false) => '#',
                        (false, true) => 'o',
                        (false, false) => '.',
                    })
                    .collect();
                println!("  {:+.2} {row}", log_gain(i));
            }
        }
        for &(i, j) in robust.iter().take(5) {
            let p = at(i, j);
            println!(
                "  log10 gains lower {:+.2} upper {:+.2}: E(T) {:.3e}, linear abscissa {:+.4}, radius {:.0}",
                log_gain(i),
                log_gain(j),
                p.e_end,
                p.alpha,
                p.radius
            );
        }
    }
    Ok(())
}
