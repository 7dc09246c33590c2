//! Property suites run by `flutterlab check`: oracle equivalence of the
//! first-order plant, stiffness identities, speed-gradient descent, gradient
//! correctness, the consensus sub-flow and energy positivity/conservation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::control::{build_topology, law_c, sg_gradient, ControlConfig, Law, LawCInput, TopologyKind};
use crate::dynamics::{disagreement, goal_l_tilde_rate, rhs_oracle, GoalParams};
use crate::error::Result;
use crate::feather::{FeatherSpec, Surface};
use crate::model::Model;
use crate::sim::{integrate, Scenario, SpeedProfile};
use crate::wing::strong_form_stiffness;

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn report(name: &'static str, passed: bool, detail: String) -> CheckReport {
    CheckReport { name, passed, detail }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Norm-wise relative difference of two vectors.
pub fn rel_vec(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = max_abs(a).max(max_abs(b));
    if scale == 0.0 {
        0.0
    } else {
        max_abs(&diff) / scale
    }
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> ([f64; 4], Vec<f64>, Vec<f64>) {
    let x = [
        rng.gen_range(-0.1..0.1),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-0.05..0.05),
        rng.gen_range(-2.0..2.0),
    ];
    let beta = (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect();
    let u = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    (x, beta, u)
}

/// First-order right-hand side against the elimination solve.
pub fn check_oracle(model: &Model<f64>, v_max: f64, draws: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let v = rng.gen_range(0.0..v_max);
        let (x, beta, u) = random_state(&mut rng, model.n_feathers());
        let ss = model.state_space(v)?;
        let fast = ss.rhs(&x, &beta, &u);
        let slow = rhs_oracle(&model.modal.at_speed(v)?, &model.feather_coeffs, &x, &beta, &u)?;
        worst = worst.max(rel_vec(&fast.dx, &slow.dx)).max(rel_vec(&fast.dbeta, &slow.dbeta));
    }
    Ok(report("oracle_equivalence", worst < 1e-10, format!("max rel diff {worst:.3e} over {draws} draws")))
}

/// Weak-form stiffness integrals against the strong forms.
pub fn check_stiffness_identities(model: &Model<f64>) -> CheckReport {
    match strong_form_stiffness(&model.wing, &model.modes) {
        None => report("stiffness_identities", true, "skipped: tabulated stiffness".into()),
        Some((bend, tors)) => {
            let e1 = ((bend - model.modal.a13) / model.modal.a13).abs();
            let e2 = ((tors - model.modal.b23_2) / model.modal.b23_2).abs();
            report(
                "stiffness_identities",
                e1 < 1e-6 && e2 < 1e-6,
                format!("bending rel {e1:.3e}, torsion rel {e2:.3e} (n_grid {})", model.modes.len()),
            )
        }
    }
}

/// Law C lowers the functional's rate by exactly `sum gamma g^2`.
pub fn check_sg_descent(model: &Model<f64>, v: f64, draws: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ss = model.state_space(v)?;
    let n = model.n_feathers();
    let (topo, gp) = (&model.topology, &model.goals);
    let mut worst: f64 = 0.0;
    let mut strict = true;
    for _ in 0..draws {
        let (x, beta, _) = random_state(&mut rng, n);
        let gamma: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..10.0)).collect();
        let u = law_c(&x, &beta, topo, &ss, &gamma, gp, LawCInput::Rates)?;
        let g = sg_gradient(&x, &beta, topo, &ss, gp);
        let drop: f64 = gamma.iter().zip(&g).map(|(a, b)| a * b * b).sum();
        let r0 = goal_l_tilde_rate(&ss, topo, gp, &x, &beta, &vec![0.0; n]);
        let ru = goal_l_tilde_rate(&ss, topo, gp, &x, &beta, &u);
        let scale = r0.abs().max(ru.abs()).max(drop);
        worst = worst.max((ru - (r0 - drop)).abs() / scale);
        if g.iter().any(|&v| v != 0.0) && !(ru < r0) {
            strict = false;
        }
    }
    Ok(report(
        "sg_descent",
        worst < 1e-9 && strict,
        format!("max rel defect {worst:.3e}, strict decrease {strict}"),
    ))
}

/// Analytic gradient against central differences of the functional's rate.
pub fn check_gradient(model: &Model<f64>, v: f64, draws: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ss = model.state_space(v)?;
    let n = model.n_feathers();
    let (topo, gp) = (&model.topology, &model.goals);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let (x, beta, u) = random_state(&mut rng, n);
        let g = sg_gradient(&x, &beta, topo, &ss, gp);
        let fd: Vec<f64> = (0..n)
            .map(|p| {
                let mut up = u.clone();
                let mut dn = u.clone();
                up[p] += h;
                dn[p] -= h;
                (goal_l_tilde_rate(&ss, topo, gp, &x, &beta, &up) - goal_l_tilde_rate(&ss, topo, gp, &x, &beta, &dn))
                    / (2.0 * h)
            })
            .collect();
        worst = worst.max(rel_vec(&g, &fd));
    }
    Ok(report("sg_gradient", worst < 1e-6, format!("max rel diff {worst:.3e} over {draws} states")))
}

/// Feathers spaced evenly along a unit span, used for topology-only checks.
pub fn synthetic_layout(n: usize) -> Vec<FeatherSpec<f64>> {
    (0..n)
        .map(|i| {
            let z = i as f64 / n as f64;
            FeatherSpec {
                id: i + 1,
                side: Surface::Lower,
                z_lo: z,
                z_hi: z + 1.0 / n as f64,
                x_star: 0.0,
                x_k: 0.1,
                beta_min: 0.0,
                beta_max: 1.0,
            }
        })
        .collect()
}

/// Result of integrating the pure consensus flow.
#[derive(Debug, Clone, Copy)]
pub struct ConsensusRun {
    /// Largest `|sum beta(t) - sum beta(0)| / t`.
    pub sum_drift_rate: f64,
    /// Disagreement never increased between steps.
    pub monotone: bool,
    pub final_disagreement: f64,
}

/// Integrates `beta' = -2 gamma L_w beta` (law C with `chi = lambda = 0` and
/// the modal state pinned at zero) with RK4.
pub fn consensus_flow(kind: TopologyKind, n: usize, gamma: f64, dt: f64, steps: usize, seed: u64) -> Result<ConsensusRun> {
    let feathers = synthetic_layout(n);
    let k = if kind == TopologyKind::Complete { 0 } else { 2 };
    let topo = build_topology(&feathers, kind, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut beta: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let flow = |b: &[f64]| -> Vec<f64> { (0..n).map(|p| -2.0 * gamma * topo.consensus_term(p, b)).collect() };
    let sum0: f64 = beta.iter().sum();
    let mut prev = disagreement(&beta, &topo);
    let mut run = ConsensusRun { sum_drift_rate: 0.0, monotone: true, final_disagreement: prev };
    for step in 1..=steps {
        let k1 = flow(&beta);
        let s: Vec<f64> = beta.iter().zip(&k1).map(|(b, k)| b + 0.5 * dt * k).collect();
        let k2 = flow(&s);
        let s: Vec<f64> = beta.iter().zip(&k2).map(|(b, k)| b + 0.5 * dt * k).collect();
        let k3 = flow(&s);
        let s: Vec<f64> = beta.iter().zip(&k3).map(|(b, k)| b + dt * k).collect();
        let k4 = flow(&s);
        for p in 0..n {
            beta[p] += dt / 6.0 * (k1[p] + 2.0 * (k2[p] + k3[p]) + k4[p]);
        }
        let t = step as f64 * dt;
        let sum: f64 = beta.iter().sum();
        run.sum_drift_rate = run.sum_drift_rate.max((sum - sum0).abs() / t);
        let d = disagreement(&beta, &topo);
        if d > prev {
            run.monotone = false;
        }
        prev = d;
    }
    run.final_disagreement = prev;
    Ok(run)
}

pub fn check_consensus() -> Result<CheckReport> {
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    for kind in [TopologyKind::Ring, TopologyKind::Complete] {
        for n in [4, 8, 16] {
            let r = consensus_flow(kind, n, 1.0, 1e-3, 2000, 7 + n as u64)?;
            worst = worst.max(r.sum_drift_rate);
            monotone &= r.monotone;
        }
    }
    Ok(report(
        "consensus_subflow",
        worst < 1e-9 && monotone,
        format!("max sum drift {worst:.3e}/s, disagreement monotone {monotone}"),
    ))
}

/// Minimum energy over random unit states.
pub fn min_unit_energy(model: &Model<f64>, draws: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min = f64::INFINITY;
    for _ in 0..draws {
        let mut x = [0.0; 4];
        for v in &mut x {
            *v = rng.gen_range(-1.0..1.0);
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        x.iter_mut().for_each(|v| *v /= norm);
        min = min.min(model.energy(&x));
    }
    min
}

/// Relative energy drift of the unforced plant at `V = 0` over `steps` RK4 steps.
pub fn zero_speed_drift(model: &Model<f64>, x0: [f64; 4], dt: f64, steps: usize) -> Result<f64> {
    let n = model.n_feathers();
    let sc = Scenario {
        model: model.clone(),
        control: ControlConfig {
            law: Law::Off,
            gamma: vec![1.0; n],
            saturation: false,
            law_c_input: LawCInput::Rates,
            gamma_by_law: Default::default(),
        },
        speed: SpeedProfile::Constant { v: 0.0 },
        x0,
        beta0: vec![0.0; n],
        dt,
        t_end: dt * steps as f64,
        output_stride: 1,
        e_abort: f64::MAX,
    };
    let rec = integrate(&sc)?;
    let e0 = rec.energy[0];
    Ok(rec.energy.iter().map(|e| ((e - e0) / e0).abs()).fold(0.0, f64::max))
}

pub fn check_energy(model: &Model<f64>, seed: u64) -> Result<CheckReport> {
    let min = min_unit_energy(model, 100_000, seed);
    let drift = zero_speed_drift(model, [0.05, 0.0, 0.01, 0.0], 1e-4, 10_000)?;
    Ok(report(
        "energy",
        min > 0.0 && drift < 1e-6,
        format!("min unit-state energy {min:.3e} J, V = 0 drift {drift:.3e}"),
    ))
}

/// Runs every property suite on `model`. `v_max` bounds the random speeds;
/// `v_eval` is the speed used for the control-law checks.
pub fn run_checks(model: &Model<f64>, v_max: f64, v_eval: f64, seed: u64) -> Result<Vec<CheckReport>> {
    Ok(vec![
        check_oracle(model, v_max, 1000, seed)?,
        check_stiffness_identities(model),
        check_sg_descent(model, v_eval, 1000, seed + 1)?,
        check_gradient(model, v_eval, 200, seed + 2)?,
        check_consensus()?,
        check_energy(model, seed + 3)?,
    ])
}

/// Goal constants with the network terms switched off.
pub fn decoupled_goals(gp: &GoalParams<f64>) -> GoalParams<f64> {
    GoalParams { chi: 0.0, lambda: 0.0, ..*gp }
}
