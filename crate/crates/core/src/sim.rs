//! Time integration, flutter boundary search, frequency scans, suppression
//! metrics and parameter sweeps.

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{saturate, ControlConfig, Controller, Law};
use crate::dynamics::{assemble, disagreement, goal_l, GoalParams, StateSpace};
use crate::eigen::{cabs, eigenvalues, eigenvector_residual, spectral_abscissa};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::scalar::Real;
use crate::wing::ModalCoefficients;

/// Airspeed as a function of time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpeedProfile<T> {
    Constant { v: T },
    /// Linear from `v0` at `t = 0` to `v1` at `t_ramp`, constant afterwards.
    Ramp { v0: T, v1: T, t_ramp: T },
}

impl<T: Real> SpeedProfile<T> {
    pub fn at(&self, t: T) -> T {
        match *self {
            SpeedProfile::Constant { v } => v,
            SpeedProfile::Ramp { v0, v1, t_ramp } => {
                if t >= t_ramp {
                    v1
                } else {
                    v0 + (v1 - v0) * t / t_ramp
                }
            }
        }
    }

    /// Multiplies every speed by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        match *self {
            SpeedProfile::Constant { v } => SpeedProfile::Constant { v: v * factor },
            SpeedProfile::Ramp { v0, v1, t_ramp } => SpeedProfile::Ramp { v0: v0 * factor, v1: v1 * factor, t_ramp },
        }
    }

    /// First time the profile reaches `v_flat`, or `None` if it never does.
    pub fn crossing_time(&self, v_flat: T) -> Option<T> {
        match *self {
            SpeedProfile::Constant { v } => (v >= v_flat).then(T::zero),
            SpeedProfile::Ramp { v0, v1, t_ramp } => {
                if v0 >= v_flat {
                    Some(T::zero())
                } else if v1 >= v_flat && v1 > v0 {
                    Some(t_ramp * (v_flat - v0) / (v1 - v0))
                } else {
                    None
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            SpeedProfile::Constant { v } => v >= T::zero(),
            SpeedProfile::Ramp { v0, v1, t_ramp } => v0 >= T::zero() && v1 >= T::zero() && t_ramp > T::zero(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config("scenario.speed", "speeds must be >= 0 and t_ramp > 0"))
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario<T> {
    pub model: Model<T>,
    pub control: ControlConfig<T>,
    pub speed: SpeedProfile<T>,
    pub x0: [T; 4],
    pub beta0: Vec<T>,
    pub dt: T,
    pub t_end: T,
    pub output_stride: usize,
    pub e_abort: T,
}

impl<T: Real> Scenario<T> {
    pub fn validate(&self) -> Result<()> {
        self.speed.validate()?;
        if !(self.dt > T::zero()) {
            return Err(Error::config("scenario.dt", "must be > 0"));
        }
        if !(self.t_end > self.dt) {
            return Err(Error::config("scenario.t_end", "must exceed dt"));
        }
        if self.output_stride == 0 {
            return Err(Error::config("scenario.output_stride", "must be >= 1"));
        }
        if !(self.e_abort > self.model.goals.e_star) {
            return Err(Error::config("scenario.e_abort", "must exceed goals.e_star"));
        }
        let n = self.model.n_feathers();
        if self.beta0.len() != n {
            return Err(Error::config("scenario.beta0", format!("expected {n} angles, got {}", self.beta0.len())));
        }
        for (i, (b, f)) in self.beta0.iter().zip(&self.model.feathers).enumerate() {
            if *b < f.beta_min || *b > f.beta_max {
                return Err(Error::config(format!("scenario.beta0[{i}]"), "outside the feather's interval"));
            }
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("scenario.x0", "must be finite"));
        }
        self.control.validate(n)
    }

    /// Number of integrator steps, `round(t_end / dt)`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).to_f64_lossy().round() as usize
    }

    pub fn controller(&self) -> Controller<'_, T> {
        Controller { config: &self.control, topology: &self.model.topology, goals: &self.model.goals }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    AbortedDivergent,
}

/// Sampled trajectory of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRecord<T> {
    pub t: Vec<T>,
    pub x: Vec<[T; 4]>,
    pub beta: Vec<Vec<T>>,
    pub u: Vec<Vec<T>>,
    pub energy: Vec<T>,
    pub l: Vec<T>,
    pub l_tilde: Vec<T>,
    pub status: RunStatus,
    /// Integrator steps actually taken.
    pub steps: usize,
    /// Requested end time; an aborted run stops before it.
    pub horizon: T,
}

impl<T: Real> SimRecord<T> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, t: T, x: [T; 4], beta: &[T], u: Vec<T>, e: T, goals: &GoalParams<T>, topo_term: T) {
        let l = goal_l(&x, goals);
        self.t.push(t);
        self.x.push(x);
        self.beta.push(beta.to_vec());
        self.u.push(u);
        self.energy.push(e);
        self.l.push(l);
        self.l_tilde.push(l + topo_term);
    }
}

/// Classical fixed-step RK4 on `(x, beta)`. The law is evaluated at every
/// stage; with saturation on, outward rates at a bound are zeroed per stage
/// and the angles are clamped after each full step. The run stops early with
/// status `AbortedDivergent` once the energy exceeds `e_abort`.
pub fn integrate<T: Real>(sc: &Scenario<T>) -> Result<SimRecord<T>> {
    sc.validate()?;
    let model = &sc.model;
    let n = model.n_feathers();
    let dim = 4 + n;
    let ctrl = sc.controller();
    let saturation = sc.control.saturation;
    let feathers = &model.feathers;
    let constant_ss = match sc.speed {
        SpeedProfile::Constant { v } => Some(model.state_space(v)?),
        SpeedProfile::Ramp { .. } => None,
    };
    let plant_at = |t: T| -> Result<std::borrow::Cow<'_, StateSpace<T>>> {
        match &constant_ss {
            Some(ss) => Ok(std::borrow::Cow::Borrowed(ss)),
            None => Ok(std::borrow::Cow::Owned(model.state_space(sc.speed.at(t))?)),
        }
    };
    let control_at = |ss: &StateSpace<T>, y: &[T]| -> Vec<T> {
        let x = [y[0], y[1], y[2], y[3]];
        let u = ctrl.control(ss, &x, &y[4..]);
        if saturation {
            saturate(&y[4..], &u, feathers)
        } else {
            u
        }
    };
    let deriv = |ss: &StateSpace<T>, y: &[T], out: &mut [T]| {
        let u = control_at(ss, y);
        ss.rhs_into(&y[..4], &y[4..], &u, out);
    };

    let n_steps = sc.n_steps();
    let mut rec = SimRecord {
        t: Vec::with_capacity(n_steps / sc.output_stride + 2),
        x: Vec::new(),
        beta: Vec::new(),
        u: Vec::new(),
        energy: Vec::new(),
        l: Vec::new(),
        l_tilde: Vec::new(),
        status: RunStatus::Completed,
        steps: 0,
        horizon: sc.t_end,
    };
    let mut y: Vec<T> = sc.x0.iter().chain(sc.beta0.iter()).copied().collect();
    let record = |rec: &mut SimRecord<T>, t: T, y: &[T]| -> Result<T> {
        let ss = plant_at(t)?;
        let x = [y[0], y[1], y[2], y[3]];
        let e = model.energy(&x);
        rec.push(t, x, &y[4..], control_at(&ss, y), e, &model.goals, disagreement(&y[4..], &model.topology));
        Ok(e)
    };
    record(&mut rec, T::zero(), &y)?;

    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let dt = sc.dt;
    let (mut k1, mut k2, mut k3, mut k4) = (vec![T::zero(); dim], vec![T::zero(); dim], vec![T::zero(); dim], vec![T::zero(); dim]);
    let mut tmp = vec![T::zero(); dim];
    for step in 1..=n_steps {
        let t0 = T::from_usize(step - 1).unwrap() * dt;
        let ss0 = plant_at(t0)?;
        let ss_mid = plant_at(t0 + half * dt)?;
        let ss1 = plant_at(t0 + dt)?;
        deriv(&ss0, &y, &mut k1);
        for i in 0..dim {
            tmp[i] = y[i] + half * dt * k1[i];
        }
        deriv(&ss_mid, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + half * dt * k2[i];
        }
        deriv(&ss_mid, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + dt * k3[i];
        }
        deriv(&ss1, &tmp, &mut k4);
        for i in 0..dim {
            y[i] += dt * sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
        }
        if saturation {
            for (b, f) in y[4..].iter_mut().zip(feathers) {
                *b = f.clamp_beta(*b);
            }
        }
        let t = T::from_usize(step).unwrap() * dt;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step, t: t.to_f64_lossy() });
        }
        rec.steps = step;
        let x = [y[0], y[1], y[2], y[3]];
        if model.energy(&x) > sc.e_abort {
            record(&mut rec, t, &y)?;
            rec.status = RunStatus::AbortedDivergent;
            log::info!("energy above e_abort at t = {t} s, run aborted");
            return Ok(rec);
        }
        if step % sc.output_stride == 0 {
            record(&mut rec, t, &y)?;
        }
    }
    Ok(rec)
}

/// Summary of how well a run kept the energy bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuppressionMetrics<T> {
    /// First sample time from which `E <= E_star` holds to the end.
    pub t_damp: Option<T>,
    #[serde(rename = "E_max")]
    pub e_max: T,
    /// Bound reached and kept through the whole horizon.
    pub hold: bool,
    /// `L <= eps_star` for every sample after `t_damp`.
    #[serde(rename = "L_ok")]
    pub l_ok: bool,
    /// `L_tilde <= eps_dstar` for every sample after `t_damp`.
    #[serde(rename = "Ltilde_ok")]
    pub ltilde_ok: bool,
    pub status: RunStatus,
    #[serde(rename = "T")]
    pub horizon: T,
    pub t1: T,
}

/// Evaluates the energy bound on a record; `t1` is when the speed first
/// reached the flutter speed (damping is only credited from then on).
pub fn metrics<T: Real>(rec: &SimRecord<T>, gp: &GoalParams<T>, t1: T) -> SuppressionMetrics<T> {
    let e_max = rec.energy.iter().copied().fold(T::zero(), |a, b| a.max(b));
    let mut out = SuppressionMetrics {
        t_damp: None,
        e_max,
        hold: false,
        l_ok: false,
        ltilde_ok: false,
        status: rec.status,
        horizon: rec.horizon,
        t1,
    };
    if rec.status != RunStatus::Completed || rec.is_empty() {
        return out;
    }
    // Walk backwards to find the start of the final run of samples within bound.
    let mut start = rec.len();
    while start > 0 && rec.energy[start - 1] <= gp.e_star && rec.t[start - 1] >= t1 {
        start -= 1;
    }
    if start < rec.len() {
        out.t_damp = Some(rec.t[start]);
        out.hold = true;
        out.l_ok = rec.l[start..].iter().all(|&l| l <= gp.eps_star);
        out.ltilde_ok = rec.l_tilde[start..].iter().all(|&l| l <= gp.eps_dstar);
    }
    out
}

/// Uncontrolled 4x4 plant matrix at speed `v`.
pub fn plant_matrix<T: Real>(modal: &ModalCoefficients<T>, v: T) -> Result<DMatrix<T>> {
    let a = assemble(&modal.at_speed(v)?, &[])?.plant_matrix();
    Ok(DMatrix::from_iterator(4, 4, a.iter().copied()))
}

/// Spectral abscissa of the uncontrolled plant.
pub fn uncontrolled_abscissa<T: Real>(modal: &ModalCoefficients<T>, v: T) -> Result<T> {
    spectral_abscissa(&plant_matrix(modal, v)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlutterSpeed<T> {
    pub v_flat: T,
    /// Spectral abscissa at `v_flat`.
    pub alpha: T,
    /// Imaginary part of the critical eigenvalue (rad/s).
    pub omega: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Tolerance on the spectral abscissa at the returned flutter speed.
pub const FLUTTER_ALPHA_TOL: f64 = 1e-8;

/// Bisects the uncontrolled spectral abscissa on `[v_lo, v_hi]` until
/// `|alpha| < 1e-8`.
pub fn find_flutter_speed<T: Real>(modal: &ModalCoefficients<T>, v_lo: T, v_hi: T) -> Result<FlutterSpeed<T>> {
    let bracket_err = |reason: &str| Error::Bracket {
        v_lo: v_lo.to_f64_lossy(),
        v_hi: v_hi.to_f64_lossy(),
        reason: reason.into(),
    };
    if !(v_lo >= T::zero() && v_hi > v_lo) {
        return Err(bracket_err("need 0 <= v_lo < v_hi"));
    }
    if !(uncontrolled_abscissa(modal, v_lo)? < T::zero()) {
        return Err(bracket_err("plant not stable at v_lo"));
    }
    if !(uncontrolled_abscissa(modal, v_hi)? > T::zero()) {
        return Err(bracket_err("plant not unstable at v_hi"));
    }
    let tol = T::lit(FLUTTER_ALPHA_TOL);
    let (mut lo, mut hi) = (v_lo, v_hi);
    let mut mid = (lo + hi) * T::lit(0.5);
    let mut alpha = uncontrolled_abscissa(modal, mid)?;
    let mut iterations = 1;
    while alpha.abs() >= tol && iterations < 200 {
        if alpha < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        let next = (lo + hi) * T::lit(0.5);
        if next == lo || next == hi {
            break;
        }
        mid = next;
        alpha = uncontrolled_abscissa(modal, mid)?;
        iterations += 1;
    }
    let ev = eigenvalues(&plant_matrix(modal, mid)?)?;
    let critical = ev
        .iter()
        .copied()
        .max_by(|a, b| a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal).then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal)))
        .unwrap();
    Ok(FlutterSpeed {
        v_flat: mid,
        alpha,
        omega: critical.im.abs(),
        iterations,
        converged: alpha.abs() < tol,
    })
}

/// One speed of a frequency scan: the two upper-half-plane eigenvalues,
/// ordered as the bending-origin and torsion-origin branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow<T> {
    pub v: T,
    pub branches: [Complex<T>; 2],
    /// Largest eigenvector residual at this speed.
    pub residual: T,
    /// Branch assignment ambiguous (near-coincident eigenvalues).
    pub flagged: bool,
}

/// Eigenvalues of the uncontrolled plant along `v_grid`, with the two
/// oscillatory branches followed by nearest-neighbour continuation.
pub fn frequency_scan<T: Real>(modal: &ModalCoefficients<T>, v_grid: &[T]) -> Result<Vec<ScanRow<T>>> {
    if v_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("speed grid must be strictly ascending".into()));
    }
    let mut rows: Vec<ScanRow<T>> = Vec::with_capacity(v_grid.len());
    for &v in v_grid {
        let m = plant_matrix(modal, v)?;
        let mut ev = eigenvalues(&m)?;
        let mut residual = T::zero();
        for e in &ev {
            residual = residual.max(eigenvector_residual(&m, *e)?);
        }
        ev.sort_by(|a, b| b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal));
        let (p, q) = (ev[0], ev[1]);
        let gap = cabs(p - q);
        let (branches, flagged) = match rows.last() {
            None => {
                let mut pair = [p, q];
                pair.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal));
                (pair, gap < T::lit(1e-3) * cabs(p).max(T::one()))
            }
            Some(prev) => {
                let [b0, b1] = prev.branches;
                let keep = cabs(p - b0) + cabs(q - b1);
                let swap = cabs(q - b0) + cabs(p - b1);
                let pair = if keep <= swap { [p, q] } else { [q, p] };
                let ambiguous = (keep - swap).abs() <= T::lit(1e-2) * (keep + swap) || gap < T::lit(1e-3) * cabs(p).max(T::one());
                (pair, ambiguous)
            }
        };
        rows.push(ScanRow { v, branches, residual, flagged });
    }
    Ok(rows)
}

/// Parameter a sweep varies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "snake_case")]
pub enum SweepSpec<T> {
    /// Constant airspeed (same units as the scenario speed).
    V(Vec<T>),
    /// Multiplier applied to every gain.
    Gain(Vec<T>),
    Law(Vec<Law>),
    TopologyK(Vec<usize>),
    /// Uses the first N feathers of the layout.
    N(Vec<usize>),
}

impl<T: Real> SweepSpec<T> {
    pub fn len(&self) -> usize {
        match self {
            SweepSpec::V(v) | SweepSpec::Gain(v) => v.len(),
            SweepSpec::Law(v) => v.len(),
            SweepSpec::TopologyK(v) | SweepSpec::N(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(&self, i: usize) -> String {
        match self {
            SweepSpec::V(v) => format!("v={}", v[i]),
            SweepSpec::Gain(v) => format!("gain={}", v[i]),
            SweepSpec::Law(v) => format!("law={:?}", v[i]),
            SweepSpec::TopologyK(v) => format!("k={}", v[i]),
            SweepSpec::N(v) => format!("n={}", v[i]),
        }
    }

    /// Scenario for entry `i`. `v_scale` converts sweep speeds to m/s.
    pub fn apply(&self, base: &Scenario<T>, i: usize, v_scale: T) -> Result<Scenario<T>> {
        let mut sc = base.clone();
        match self {
            SweepSpec::V(v) => sc.speed = SpeedProfile::Constant { v: v[i] * v_scale },
            SweepSpec::Gain(g) => sc.control.gamma.iter_mut().for_each(|x| *x *= g[i]),
            SweepSpec::Law(l) => sc.control = base.control.with_law(l[i]),
            SweepSpec::TopologyK(k) => sc.model = base.model.with_topology(base.model.topology_kind, k[i])?,
            SweepSpec::N(n) => {
                let n = n[i];
                sc.model = base.model.with_first_feathers(n)?;
                sc.beta0.truncate(n);
                sc.control.gamma.truncate(n);
                for g in sc.control.gamma_by_law.values_mut() {
                    g.truncate(n);
                }
            }
        }
        Ok(sc)
    }
}

/// Outcome of one sweep entry.
#[derive(Debug, Clone)]
pub struct SweepEntry<T> {
    pub label: String,
    pub result: std::result::Result<(SimRecord<T>, SuppressionMetrics<T>), String>,
}

/// Runs every sweep entry (concurrently) and returns them in input order.
/// `v_flat` sets `t1` for the metrics; failures are recorded, not raised.
pub fn sweep<T: Real>(base: &Scenario<T>, spec: &SweepSpec<T>, v_scale: T, v_flat: T) -> Vec<SweepEntry<T>> {
    (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let result = spec.apply(base, i, v_scale).and_then(|sc| {
                let rec = integrate(&sc)?;
                let t1 = sc.speed.crossing_time(v_flat).unwrap_or(T::zero());
                let m = metrics(&rec, &sc.model.goals, t1);
                Ok((rec, m))
            });
            SweepEntry { label: spec.label(i), result: result.map_err(|e| e.to_string()) }
        })
        .collect()
}
