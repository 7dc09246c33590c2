//! Acceptance suite on the shipped reference configuration. Every criterion
//! prints one PASS/FAIL line; the test fails if any criterion fails.
//!
//! Run with `cargo test -p flutterlab-core --test acceptance -- --nocapture`.

use std::path::PathBuf;

use nalgebra::{Complex, Matrix2, Matrix4, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flutterlab_core::checks::{consensus_flow, min_unit_energy, zero_speed_drift};
use flutterlab_core::control::{build_topology, law_c, sg_gradient, Law, LawCInput, Topology, TopologyKind};
use flutterlab_core::dynamics::{assemble, rhs, rhs_oracle, GoalParams, StateSpace};
use flutterlab_core::feather::FeatherCoeffs;
use flutterlab_core::output::timeseries_csv;
use flutterlab_core::sim::{find_flutter_speed, frequency_scan, integrate, metrics, sweep, SweepSpec};
use flutterlab_core::wing::{ModalAtSpeed, ModalCoefficients};
use flutterlab_core::{load_config, Model64, RunConfig, RunStatus, Scenario64, SpeedProfile};

const SEED: u64 = 0xF1A7;

fn reference_config() -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("config/reference.json");
    load_config(path).expect("reference config loads")
}

struct Setup {
    cfg: RunConfig,
    model: Model64,
    v_flat: f64,
}

impl Setup {
    fn new() -> Self {
        let cfg = reference_config();
        let model = cfg.build_model::<f64>().unwrap();
        let v_flat = cfg.flutter_speed(&model).unwrap().v_flat;
        Self { cfg, model, v_flat }
    }

    fn scenario(&self) -> Scenario64 {
        self.cfg.build_scenario(self.model.clone(), Some(self.v_flat)).unwrap()
    }

    /// Uncontrolled run at a constant multiple of the flutter speed.
    fn uncontrolled(&self, factor: f64) -> Scenario64 {
        let mut sc = self.scenario();
        sc.control = sc.control.with_law(Law::Off);
        sc.speed = SpeedProfile::Constant { v: factor * self.v_flat };
        sc
    }
}

type Outcome = Result<(bool, String), String>;

fn random_point(rng: &mut ChaCha8Rng, model: &Model64) -> ([f64; 4], Vec<f64>, Vec<f64>) {
    let mut x = [0.0; 4];
    x.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    let beta = model.feathers.iter().map(|f| rng.gen_range(f.beta_min..=f.beta_max)).collect();
    let u = model.feathers.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
    (x, beta, u)
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let scale = b.iter().map(|q| q * q).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    diff / scale
}

/// Second-order modal matrices `M q'' + C q' + K q = F` with `q = (bending, torsion)`.
fn second_order(m: &ModalAtSpeed<f64>) -> (Matrix2<f64>, Matrix2<f64>, Matrix2<f64>) {
    (
        Matrix2::new(m.a11, m.b11, m.a21, m.b21),
        Matrix2::new(m.a12, m.b12, m.a22, m.b22),
        Matrix2::new(m.a13, m.b13, 0.0, m.b23),
    )
}

/// State derivative from an LU solve of the second-order system.
fn lu_derivative(m: &ModalAtSpeed<f64>, fc: &[FeatherCoeffs<f64>], x: &[f64; 4], beta: &[f64], u: &[f64]) -> [f64; 4] {
    let (mass, damp, stiff) = second_order(m);
    let v = m.v;
    let mut force = Vector2::zeros();
    for (k, c) in fc.iter().enumerate() {
        force[0] += c.a_bar * v * v * beta[k] + c.b_bar * v * u[k];
        force[1] += c.c_bar * v * v * beta[k] + c.d_bar * v * u[k];
    }
    let q = Vector2::new(x[0], x[2]);
    let qd = Vector2::new(x[1], x[3]);
    let acc = mass.lu().solve(&(force - damp * qd - stiff * q)).expect("inertia invertible");
    [x[1], acc[0], x[3], acc[1]]
}

fn c1_oracle_equivalence(s: &Setup) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let v_max = s.cfg.flutter.v_hi;
    let mut worst_oracle: f64 = 0.0;
    let mut worst_lu: f64 = 0.0;
    for _ in 0..1000 {
        let v = rng.gen_range(0.0..v_max);
        let (x, beta, u) = random_point(&mut rng, &s.model);
        let m = s.model.modal.at_speed(v).map_err(|e| e.to_string())?;
        let ss = assemble(&m, &s.model.feather_coeffs).map_err(|e| e.to_string())?;
        let fast = rhs(&ss, &x, &beta, &u).map_err(|e| e.to_string())?;
        let slow = rhs_oracle(&m, &s.model.feather_coeffs, &x, &beta, &u).map_err(|e| e.to_string())?;
        let lu = lu_derivative(&m, &s.model.feather_coeffs, &x, &beta, &u);
        worst_oracle = worst_oracle.max(rel(&fast.dx, &slow.dx));
        worst_lu = worst_lu.max(rel(&fast.dx, &lu));
        if fast.dbeta != u {
            return Ok((false, "feather rates differ from the input u".into()));
        }
    }
    Ok((
        worst_oracle < 1e-10 && worst_lu < 1e-10,
        format!("max rel diff vs elimination {worst_oracle:.2e}, vs LU {worst_lu:.2e} (1000 draws)"),
    ))
}

const LAMBDA: f64 = 1.875_104_068_711_961;

/// Second derivative of the tip-normalised cantilever bending mode.
fn bending_curvature(z: f64, l: f64) -> f64 {
    let sigma = (LAMBDA.cosh() + LAMBDA.cos()) / (LAMBDA.sinh() + LAMBDA.sin());
    let tip = LAMBDA.cosh() - LAMBDA.cos() - sigma * (LAMBDA.sinh() - LAMBDA.sin());
    let t = LAMBDA * z / l;
    (LAMBDA / l).powi(2) * (t.cosh() + t.cos() - sigma * (t.sinh() + t.sin())) / tip
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + inner + f(b)) * h / 3.0
}

fn c2_stiffness_identities(s: &Setup) -> Outcome {
    let w = &s.model.wing;
    let c: &ModalCoefficients<f64> = &s.model.modal;
    let (l, ej, gj) = (w.l, w.ej.constant().unwrap(), w.gj_k.constant().unwrap());
    // Strong forms: (EJ f'')'' = EJ (lambda/l)^4 f with int_0^l f^2 = l/4 for a
    // tip-normalised cantilever mode; -(GJ phi')' = GJ (pi/2l)^2 phi.
    let bend_strong = ej * (LAMBDA / l).powi(4) * l / 4.0;
    let tors_strong = gj * (std::f64::consts::PI / (2.0 * l)).powi(2) * l / 2.0;
    let bend_weak = simpson(|z| ej * bending_curvature(z, l).powi(2), 0.0, l, 20_000);
    let e_bend = ((c.a13 - bend_strong) / bend_strong).abs().max(((c.a13 - bend_weak) / bend_weak).abs());
    let e_tors = ((-c.b23_2 - tors_strong) / tors_strong).abs();
    Ok((
        e_bend < 1e-6 && e_tors < 1e-6 && s.model.modes.len() == 1001,
        format!("bending rel {e_bend:.2e}, torsion rel {e_tors:.2e} at n_grid {}", s.model.modes.len()),
    ))
}

/// `dL_tilde/dt` computed directly from the elimination right-hand side and
/// the raw topology weights.
fn l_tilde_rate(
    m: &ModalAtSpeed<f64>,
    fc: &[FeatherCoeffs<f64>],
    topo: &Topology<f64>,
    gp: &GoalParams<f64>,
    x: &[f64; 4],
    beta: &[f64],
    u: &[f64],
) -> f64 {
    let dx = lu_derivative(m, fc, x, beta, u);
    let mut rate = gp.chi * (x[0] * dx[0] + x[1] * dx[1]) + gp.lambda * (x[2] * dx[2] + x[3] * dx[3]);
    let w = topo.weights();
    for i in 0..beta.len() {
        for j in 0..beta.len() {
            rate += w[(i, j)] * (beta[i] - beta[j]) * (u[i] - u[j]);
        }
    }
    rate
}

fn eval_point(s: &Setup, v: f64) -> Result<(ModalAtSpeed<f64>, StateSpace<f64>), String> {
    let m = s.model.modal.at_speed(v).map_err(|e| e.to_string())?;
    let ss = assemble(&m, &s.model.feather_coeffs).map_err(|e| e.to_string())?;
    Ok((m, ss))
}

fn c3_sg_descent(s: &Setup) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let (m, ss) = eval_point(s, 1.1 * s.v_flat)?;
    let (topo, gp, fc) = (&s.model.topology, &s.model.goals, &s.model.feather_coeffs);
    let n = s.model.n_feathers();
    let mut worst: f64 = 0.0;
    let mut strict = true;
    for _ in 0..1000 {
        let (x, beta, _) = random_point(&mut rng, &s.model);
        let gamma: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..10.0)).collect();
        let u = law_c(&x, &beta, topo, &ss, &gamma, gp, LawCInput::Rates).map_err(|e| e.to_string())?;
        let g = sg_gradient(&x, &beta, topo, &ss, gp);
        let drop: f64 = gamma.iter().zip(&g).map(|(a, b)| a * b * b).sum();
        let r0 = l_tilde_rate(&m, fc, topo, gp, &x, &beta, &vec![0.0; n]);
        let ru = l_tilde_rate(&m, fc, topo, gp, &x, &beta, &u);
        let scale = r0.abs().max(ru.abs()).max(drop);
        worst = worst.max((ru - (r0 - drop)).abs() / scale);
        strict &= g.iter().all(|&v| v == 0.0) || ru < r0;
    }
    Ok((worst < 1e-9 && strict, format!("max rel defect {worst:.2e}, strict decrease {strict} (1000 states)")))
}

fn c4_gradient(s: &Setup) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let (m, ss) = eval_point(s, 1.1 * s.v_flat)?;
    let (topo, gp, fc) = (&s.model.topology, &s.model.goals, &s.model.feather_coeffs);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (x, beta, u) = random_point(&mut rng, &s.model);
        let g = sg_gradient(&x, &beta, topo, &ss, gp);
        let fd: Vec<f64> = (0..u.len())
            .map(|p| {
                let (mut up, mut dn) = (u.clone(), u.clone());
                up[p] += h;
                dn[p] -= h;
                (l_tilde_rate(&m, fc, topo, gp, &x, &beta, &up) - l_tilde_rate(&m, fc, topo, gp, &x, &beta, &dn)) / (2.0 * h)
            })
            .collect();
        worst = worst.max(rel(&g, &fd));
    }
    Ok((worst < 1e-6, format!("max rel diff to central differences {worst:.2e} (200 states)")))
}

/// Eigenvalues of the uncontrolled first-order companion form.
fn companion_eigs(s: &Setup, v: f64) -> Result<Vec<Complex<f64>>, String> {
    let m = s.model.modal.at_speed(v).map_err(|e| e.to_string())?;
    let (mass, damp, stiff) = second_order(&m);
    let inv = mass.try_inverse().ok_or("singular inertia")?;
    let (mk, mc) = (-inv * stiff, -inv * damp);
    let a = Matrix4::new(
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        mk[(0, 0)], mk[(0, 1)], mc[(0, 0)], mc[(0, 1)], //
        mk[(1, 0)], mk[(1, 1)], mc[(1, 0)], mc[(1, 1)],
    );
    Ok(a.complex_eigenvalues().iter().copied().collect())
}

fn abscissa(ev: &[Complex<f64>]) -> f64 {
    ev.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max)
}

fn c5_flutter_boundary(s: &Setup) -> Outcome {
    let fl = find_flutter_speed(&s.model.modal, s.cfg.flutter.v_lo, s.cfg.flutter.v_hi).map_err(|e| e.to_string())?;
    let converged = fl.converged && fl.alpha.abs() < 1e-8;
    let below = abscissa(&companion_eigs(s, 0.95 * fl.v_flat)?) < 0.0;
    let above = abscissa(&companion_eigs(s, 1.05 * fl.v_flat)?) > 0.0;

    let run = |factor: f64| -> Result<(f64, f64, RunStatus), String> {
        let sc = s.uncontrolled(factor);
        assert_eq!((sc.dt, sc.t_end), (1e-3, 20.0));
        let rec = integrate(&sc).map_err(|e| e.to_string())?;
        Ok((rec.energy[0], *rec.energy.last().unwrap(), rec.status))
    };
    let (e0_lo, et_lo, st_lo) = run(0.95)?;
    let (e0_hi, et_hi, st_hi) = run(1.05)?;
    let decays = st_lo == RunStatus::Completed && et_lo < e0_lo;
    // An energy abort before T is growth past e_abort, itself far above 10 E(0).
    let grows = et_hi > 10.0 * e0_hi && (st_hi == RunStatus::AbortedDivergent || st_hi == RunStatus::Completed);
    Ok((
        converged && below && above && decays && grows,
        format!(
            "V_flat {:.4} m/s (|alpha| {:.1e}); 0.95 V_flat E(T)/E0 {:.2e}, 1.05 V_flat E(T)/E0 {:.2e} ({:?}); eigen verdicts {below}/{above}",
            fl.v_flat,
            fl.alpha.abs(),
            et_lo / e0_lo,
            et_hi / e0_hi,
            st_hi
        ),
    ))
}

fn freq_gap(ev: &[Complex<f64>]) -> f64 {
    let mut w: Vec<f64> = ev.iter().filter(|e| e.im > 0.0).map(|e| e.im).collect();
    w.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(w.len(), 2, "two oscillatory modes expected");
    w[1] - w[0]
}

fn c6_coalescence(s: &Setup) -> Outcome {
    let g_lo = freq_gap(&companion_eigs(s, 0.5 * s.v_flat)?);
    let g_hi = freq_gap(&companion_eigs(s, 0.95 * s.v_flat)?);
    let scan = frequency_scan(&s.model.modal, &[0.5 * s.v_flat, 0.95 * s.v_flat]).map_err(|e| e.to_string())?;
    let scan_gap = |k: usize| (scan[k].branches[0].im.abs() - scan[k].branches[1].im.abs()).abs();
    let agree = (scan_gap(0) - g_lo).abs() < 1e-8 * g_lo && (scan_gap(1) - g_hi).abs() < 1e-8 * g_lo;
    Ok((
        g_hi < g_lo && agree,
        format!("|Im| gap {g_lo:.4} rad/s at 0.5 V_flat, {g_hi:.4} rad/s at 0.95 V_flat; scan agrees {agree}"),
    ))
}

fn c7_suppression(s: &Setup) -> Outcome {
    let base = s.scenario();
    if (base.speed.at(0.0) - 1.1 * s.v_flat).abs() > 1e-9 * s.v_flat {
        return Err("reference scenario is not at 1.1 V_flat".into());
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for law in [Law::A, Law::B, Law::C] {
        let mut sc = base.clone();
        sc.control = base.control.with_law(law);
        let rec = integrate(&sc).map_err(|e| e.to_string())?;
        let m = metrics(&rec, &sc.model.goals, 0.0);
        let held = m.status == RunStatus::Completed && m.hold && m.t_damp.is_some() && rec.horizon >= sc.t_end - 1e-9;
        let t_damp = m.t_damp.unwrap_or(f64::NAN);
        let after: f64 = rec
            .t
            .iter()
            .zip(&rec.energy)
            .filter(|(t, _)| **t >= t_damp)
            .map(|(_, e)| *e)
            .fold(0.0, f64::max);
        ok &= held && after <= sc.model.goals.e_star;
        parts.push(format!("{law:?} t_damp {t_damp} s, max E after {after:.2e} J"));
    }
    let rec = integrate(&s.uncontrolled(1.1)).map_err(|e| e.to_string())?;
    ok &= rec.status == RunStatus::AbortedDivergent;
    parts.push(format!("uncontrolled {:?} at t = {:.2} s", rec.status, rec.t.last().unwrap()));
    Ok((ok, parts.join("; ")))
}

/// Explicit-Euler Laplacian flow on the raw weights.
fn laplacian_flow(topo: &Topology<f64>, beta0: &[f64], gamma: f64, dt: f64, steps: usize) -> (f64, bool) {
    let n = beta0.len();
    let w = topo.weights();
    let dis = |b: &[f64]| {
        let mut d = 0.0;
        for i in 0..n {
            for j in 0..n {
                d += 0.5 * w[(i, j)] * (b[i] - b[j]).powi(2);
            }
        }
        d
    };
    let mut beta = beta0.to_vec();
    let sum0: f64 = beta.iter().sum();
    let (mut prev, mut monotone, mut drift) = (dis(&beta), true, 0.0f64);
    for step in 1..=steps {
        let rate: Vec<f64> = (0..n).map(|i| -2.0 * gamma * (0..n).map(|j| w[(i, j)] * (beta[i] - beta[j])).sum::<f64>()).collect();
        beta.iter_mut().zip(&rate).for_each(|(b, r)| *b += dt * r);
        drift = drift.max((beta.iter().sum::<f64>() - sum0).abs() / (step as f64 * dt));
        let d = dis(&beta);
        monotone &= d <= prev;
        prev = d;
    }
    (drift, monotone)
}

fn c8_consensus(_: &Setup) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let (mut drift, mut monotone) = (0.0f64, true);
    for kind in [TopologyKind::Ring, TopologyKind::Complete] {
        for n in [4usize, 8, 16] {
            let r = consensus_flow(kind, n, 1.0, 1e-3, 2000, SEED + n as u64).map_err(|e| e.to_string())?;
            drift = drift.max(r.sum_drift_rate);
            monotone &= r.monotone;

            let layout = flutterlab_core::checks::synthetic_layout(n);
            let k = if kind == TopologyKind::Complete { 0 } else { 2 };
            let topo = build_topology(&layout, kind, k).map_err(|e| e.to_string())?;
            let beta0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (d, m) = laplacian_flow(&topo, &beta0, 1.0, 1e-3, 2000);
            drift = drift.max(d);
            monotone &= m;
        }
    }
    Ok((drift < 1e-9 && monotone, format!("max sum drift {drift:.2e}/s, disagreement monotone {monotone}")))
}

fn c9_energy(s: &Setup) -> Outcome {
    let c = &s.model.modal;
    // E = 1/2 x^T Q x.
    let q = Matrix4::new(
        c.a13, 0.0, 0.0, 0.0, //
        0.0, c.a11, 0.0, -c.a21, //
        0.0, 0.0, -c.b23_2, 0.0, //
        0.0, -c.a21, 0.0, -c.b21,
    );
    let definite = q.cholesky().is_some();
    let min = min_unit_energy(&s.model, 100_000, SEED + 9);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 90);
    let mut form_err: f64 = 0.0;
    for _ in 0..100 {
        let x: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let xv = nalgebra::Vector4::from(x);
        let e_ref = 0.5 * xv.dot(&(q * xv));
        form_err = form_err.max((s.model.energy(&x) - e_ref).abs() / e_ref.abs());
    }
    let drift = zero_speed_drift(&s.model, [0.05, 0.0, 0.01, 0.0], 1e-4, 10_000).map_err(|e| e.to_string())?;
    Ok((
        definite && min > 0.0 && form_err < 1e-12 && drift < 1e-6,
        format!("quadratic form definite {definite}, min unit energy {min:.3e} J, V = 0 drift {drift:.2e} over 1e4 steps"),
    ))
}

fn c10_determinism(s: &Setup) -> Outcome {
    let sc = s.scenario();
    let a = timeseries_csv(&integrate(&sc).map_err(|e| e.to_string())?);
    let b = timeseries_csv(&integrate(&sc).map_err(|e| e.to_string())?);
    let spec = SweepSpec::Law(vec![Law::A, Law::B, Law::C, Law::Off]);
    let scale = s.cfg.speed_scale(Some(s.v_flat)).map_err(|e| e.to_string())?;
    let in_pool = |threads: usize| -> Vec<String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| sweep(&sc, &spec, scale, s.v_flat))
            .into_iter()
            .map(|e| timeseries_csv(&e.result.expect("sweep entry runs").0))
            .collect()
    };
    let one = in_pool(1);
    let four = in_pool(4);
    let serial: Vec<String> = (0..spec.len())
        .map(|i| timeseries_csv(&integrate(&spec.apply(&sc, i, scale).unwrap()).unwrap()))
        .collect();
    let ok = a == b && one == four && one == serial;
    Ok((ok, format!("repeat identical {}, sweep 1 vs 4 threads identical {}, sweep vs serial identical {}", a == b, one == four, one == serial)))
}

type Criterion = (&'static str, fn(&Setup) -> Outcome);

#[test]
fn acceptance_criteria() {
    let setup = Setup::new();
    let criteria: [Criterion; 10] = [
        ("oracle equivalence", c1_oracle_equivalence),
        ("stiffness identities", c2_stiffness_identities),
        ("speed-gradient descent", c3_sg_descent),
        ("gradient correctness", c4_gradient),
        ("flutter boundary", c5_flutter_boundary),
        ("frequency coalescence", c6_coalescence),
        ("suppression above flutter", c7_suppression),
        ("consensus sub-flow", c8_consensus),
        ("energy definiteness and conservation", c9_energy),
        ("determinism", c10_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (passed, detail) = check(&setup).unwrap_or_else(|e| (false, format!("error: {e}")));
        println!("[{}] {:>2} {name}: {detail}", if passed { "PASS" } else { "FAIL" }, i + 1);
        if !passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
