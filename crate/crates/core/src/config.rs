//! JSON run configuration: strict schema, validation with field paths, and
//! conversion into the generic model types.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::{build_topology, ControlConfig, TopologyKind};
use crate::error::{Error, Result};
use crate::feather::FeatherSpec;
use crate::model::{GoalSettings, Model};
use crate::quadrature::check_grid;
use crate::scalar::Real;
use crate::sim::{find_flutter_speed, FlutterSpeed, Scenario, SpeedProfile, SweepSpec};
use crate::wing::{SpanProfile, WingParams, MIN_GRID};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub wing: WingParams<f64>,
    pub modes: ModesConfig,
    pub feathers: Vec<FeatherSpec<f64>>,
    pub topology: TopologyConfig,
    pub control: ControlConfig<f64>,
    pub scenario: ScenarioConfig,
    pub goals: GoalsConfig,
    pub flutter: FlutterConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec<f64>>,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesConfig {
    pub n_grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub kind: TopologyKind,
    #[serde(default = "default_k")]
    pub k: usize,
}

fn default_k() -> usize {
    2
}

/// Unit of the scenario and sweep speeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedUnit {
    /// Metres per second.
    #[default]
    Mps,
    /// Multiples of the computed flutter speed.
    VFlat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub speed: SpeedProfile<f64>,
    #[serde(default)]
    pub speed_unit: SpeedUnit,
    pub x0: [f64; 4],
    /// Initial feather angles; zeros when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta0: Option<Vec<f64>>,
    pub dt: f64,
    pub t_end: f64,
    pub output_stride: usize,
    pub e_abort: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalsConfig {
    /// Overrides the topology-derived value when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub e_star: f64,
    pub eps_star: f64,
    pub eps_beta: f64,
    pub eps_dstar: f64,
}

/// Bracket for the flutter-speed bisection (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlutterConfig {
    pub v_lo: f64,
    pub v_hi: f64,
}

/// Speed grid of the frequency scan (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub v_min: f64,
    pub v_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Pretty-print JSON outputs.
    #[serde(default = "default_true")]
    pub pretty_json: bool,
}

fn default_true() -> bool {
    true
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn cast_profile<T: Real>(p: &SpanProfile<f64>) -> SpanProfile<T> {
    match p {
        SpanProfile::Constant(v) => SpanProfile::Constant(T::lit(*v)),
        SpanProfile::Table { z, values } => SpanProfile::Table {
            z: z.iter().map(|&v| T::lit(v)).collect(),
            values: values.iter().map(|&v| T::lit(v)).collect(),
        },
    }
}

pub fn cast_wing<T: Real>(w: &WingParams<f64>) -> WingParams<T> {
    WingParams {
        l: T::lit(w.l),
        b: cast_profile(&w.b),
        x0: cast_profile(&w.x0),
        sigma_t: cast_profile(&w.sigma_t),
        m: cast_profile(&w.m),
        j_m: cast_profile(&w.j_m),
        ej: cast_profile(&w.ej),
        gj_k: cast_profile(&w.gj_k),
        cy_alpha: T::lit(w.cy_alpha),
        rho: T::lit(w.rho),
    }
}

pub fn cast_feather<T: Real>(f: &FeatherSpec<f64>) -> FeatherSpec<T> {
    FeatherSpec {
        id: f.id,
        side: f.side,
        z_lo: T::lit(f.z_lo),
        z_hi: T::lit(f.z_hi),
        x_star: T::lit(f.x_star),
        x_k: T::lit(f.x_k),
        beta_min: T::lit(f.beta_min),
        beta_max: T::lit(f.beta_max),
    }
}

fn cast_vec<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

fn cast_speed<T: Real>(s: &SpeedProfile<f64>) -> SpeedProfile<T> {
    match *s {
        SpeedProfile::Constant { v } => SpeedProfile::Constant { v: T::lit(v) },
        SpeedProfile::Ramp { v0, v1, t_ramp } => SpeedProfile::Ramp {
            v0: T::lit(v0),
            v1: T::lit(v1),
            t_ramp: T::lit(t_ramp),
        },
    }
}

impl RunConfig {
    /// Checks every invariant that can be checked without running the model.
    pub fn validate(&self) -> Result<()> {
        self.wing.validate()?;
        check_grid(self.modes.n_grid, MIN_GRID)?;
        for (i, f) in self.feathers.iter().enumerate() {
            f.validate(&self.wing, i)?;
        }
        build_topology(&self.feathers, self.topology.kind, self.topology.k)?;
        let n = self.feathers.len();
        self.control.validate(n)?;
        let g = &self.goals;
        for (name, v) in [("goals.chi", g.chi), ("goals.lambda", g.lambda)] {
            if v.is_some_and(|v| !(v >= 0.0)) {
                return Err(Error::config(name, "must be >= 0"));
            }
        }
        for (name, v) in [
            ("goals.e_star", g.e_star),
            ("goals.eps_star", g.eps_star),
            ("goals.eps_beta", g.eps_beta),
            ("goals.eps_dstar", g.eps_dstar),
        ] {
            if !(v > 0.0) {
                return Err(Error::config(name, "must be > 0"));
            }
        }
        if g.eps_dstar < g.eps_star {
            return Err(Error::config("goals.eps_dstar", "must be >= eps_star"));
        }
        let s = &self.scenario;
        if !(s.dt > 0.0) {
            return Err(Error::config("scenario.dt", "must be > 0"));
        }
        if !(s.t_end > s.dt) {
            return Err(Error::config("scenario.t_end", "must exceed dt"));
        }
        if s.output_stride == 0 {
            return Err(Error::config("scenario.output_stride", "must be >= 1"));
        }
        if !(s.e_abort > g.e_star) {
            return Err(Error::config("scenario.e_abort", "must exceed goals.e_star"));
        }
        if let Some(b) = &s.beta0 {
            if b.len() != n {
                return Err(Error::config("scenario.beta0", format!("expected {n} angles, got {}", b.len())));
            }
            for (i, (v, f)) in b.iter().zip(&self.feathers).enumerate() {
                if *v < f.beta_min || *v > f.beta_max {
                    return Err(Error::config(format!("scenario.beta0[{i}]"), "outside the feather's interval"));
                }
            }
        }
        let fl = &self.flutter;
        if !(fl.v_lo >= 0.0 && fl.v_hi > fl.v_lo) {
            return Err(Error::config("flutter.v_hi", "need 0 <= v_lo < v_hi"));
        }
        if let Some(sc) = &self.scan {
            if !(sc.v_min >= 0.0 && sc.v_max > sc.v_min && sc.points >= 2) {
                return Err(Error::config("scan", "need 0 <= v_min < v_max and points >= 2"));
            }
        }
        Ok(())
    }

    pub fn goal_settings<T: Real>(&self) -> GoalSettings<T> {
        let g = &self.goals;
        GoalSettings {
            chi: g.chi.map(T::lit),
            lambda: g.lambda.map(T::lit),
            e_star: T::lit(g.e_star),
            eps_star: T::lit(g.eps_star),
            eps_beta: T::lit(g.eps_beta),
            eps_dstar: T::lit(g.eps_dstar),
        }
    }

    pub fn build_model<T: Real>(&self) -> Result<Model<T>> {
        Model::new(
            cast_wing(&self.wing),
            self.modes.n_grid,
            self.feathers.iter().map(cast_feather).collect(),
            self.topology.kind,
            self.topology.k,
            self.goal_settings(),
        )
    }

    pub fn flutter_speed<T: Real>(&self, model: &Model<T>) -> Result<FlutterSpeed<T>> {
        find_flutter_speed(&model.modal, T::lit(self.flutter.v_lo), T::lit(self.flutter.v_hi))
    }

    /// Factor converting configured speeds to m/s.
    pub fn speed_scale<T: Real>(&self, v_flat: Option<T>) -> Result<T> {
        match self.scenario.speed_unit {
            SpeedUnit::Mps => Ok(T::one()),
            SpeedUnit::VFlat => v_flat.ok_or_else(|| {
                Error::config("scenario.speed_unit", "speeds relative to v_flat need the flutter speed")
            }),
        }
    }

    /// Builds the scenario with speeds converted to m/s.
    pub fn build_scenario<T: Real>(&self, model: Model<T>, v_flat: Option<T>) -> Result<Scenario<T>> {
        let s = &self.scenario;
        let n = model.n_feathers();
        let c = &self.control;
        let control = ControlConfig {
            law: c.law,
            gamma: cast_vec(&c.gamma),
            saturation: c.saturation,
            law_c_input: c.law_c_input,
            gamma_by_law: c.gamma_by_law.iter().map(|(k, v)| (*k, cast_vec(v))).collect(),
        };
        let sc = Scenario {
            model,
            control,
            speed: cast_speed::<T>(&s.speed).scaled(self.speed_scale(v_flat)?),
            x0: [T::lit(s.x0[0]), T::lit(s.x0[1]), T::lit(s.x0[2]), T::lit(s.x0[3])],
            beta0: s.beta0.as_deref().map(cast_vec).unwrap_or_else(|| vec![T::zero(); n]),
            dt: T::lit(s.dt),
            t_end: T::lit(s.t_end),
            output_stride: s.output_stride,
            e_abort: T::lit(s.e_abort),
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn sweep_spec<T: Real>(&self) -> Option<SweepSpec<T>> {
        self.sweep.as_ref().map(|s| match s {
            SweepSpec::V(v) => SweepSpec::V(cast_vec(v)),
            SweepSpec::Gain(v) => SweepSpec::Gain(cast_vec(v)),
            SweepSpec::Law(v) => SweepSpec::Law(v.clone()),
            SweepSpec::TopologyK(v) => SweepSpec::TopologyK(v.clone()),
            SweepSpec::N(v) => SweepSpec::N(v.clone()),
        })
    }
}
