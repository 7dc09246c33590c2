//! A fully built wing + feather network, shared read-only by scenarios.

use crate::control::{agent_views, build_topology, AgentView, Topology, TopologyKind};
use crate::dynamics::{assemble, chi_lambda, total_energy, GoalParams, StateSpace};
use crate::error::{Error, Result};
use crate::feather::{layout_coeffs, overlapping_pairs, FeatherCoeffs, FeatherSpec};
use crate::scalar::Real;
use crate::wing::{build_mode_shapes, modal_integrals, ModalCoefficients, ModeShapes, WingParams};

/// Goal constants as configured; `chi`/`lambda` default to the topology values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalSettings<T> {
    pub chi: Option<T>,
    pub lambda: Option<T>,
    pub e_star: T,
    pub eps_star: T,
    pub eps_beta: T,
    pub eps_dstar: T,
}

#[derive(Debug, Clone)]
pub struct Model<T> {
    pub wing: WingParams<T>,
    pub modes: ModeShapes<T>,
    pub modal: ModalCoefficients<T>,
    pub feathers: Vec<FeatherSpec<T>>,
    pub feather_coeffs: Vec<FeatherCoeffs<T>>,
    pub topology: Topology<T>,
    pub topology_kind: TopologyKind,
    pub topology_k: usize,
    pub goals: GoalParams<T>,
    pub goal_settings: GoalSettings<T>,
    pub agents: Vec<AgentView<T>>,
}

impl<T: Real> Model<T> {
    pub fn new(
        wing: WingParams<T>,
        n_grid: usize,
        feathers: Vec<FeatherSpec<T>>,
        topology_kind: TopologyKind,
        topology_k: usize,
        goal_settings: GoalSettings<T>,
    ) -> Result<Self> {
        wing.validate()?;
        for (i, f) in feathers.iter().enumerate() {
            f.validate(&wing, i)?;
        }
        for (i, j) in overlapping_pairs(&feathers) {
            log::warn!("feathers {i} and {j} overlap; loads are superposed");
        }
        let modes = build_mode_shapes(&wing, n_grid)?;
        let modal = modal_integrals(&wing, &modes);
        if !(modal.inertia_margin() > T::zero()) {
            return Err(Error::SingularInertia { det: modal.inertia_margin().to_f64_lossy() });
        }
        let feather_coeffs = layout_coeffs(&wing, &feathers, &modes)?;
        let topology = build_topology(&feathers, topology_kind, topology_k)?;
        let (chi, lambda) = chi_lambda(&topology, &modes, &feathers);
        let goals = GoalParams {
            chi: goal_settings.chi.unwrap_or(chi),
            lambda: goal_settings.lambda.unwrap_or(lambda),
            e_star: goal_settings.e_star,
            eps_star: goal_settings.eps_star,
            eps_beta: goal_settings.eps_beta,
            eps_dstar: goal_settings.eps_dstar,
        };
        goals.validate()?;
        let agents = agent_views(&feathers, &modes);
        Ok(Self {
            wing,
            modes,
            modal,
            feathers,
            feather_coeffs,
            topology,
            topology_kind,
            topology_k,
            goals,
            goal_settings,
            agents,
        })
    }

    pub fn n_feathers(&self) -> usize {
        self.feathers.len()
    }

    /// Plant with every feather at airspeed `v`.
    pub fn state_space(&self, v: T) -> Result<StateSpace<T>> {
        assemble(&self.modal.at_speed(v)?, &self.feather_coeffs)
    }

    pub fn energy(&self, x: &[T; 4]) -> T {
        total_energy(&self.modal, x)
    }

    /// Rebuilds the network with a different topology; goals follow unless
    /// explicitly overridden.
    pub fn with_topology(&self, kind: TopologyKind, k: usize) -> Result<Self> {
        Self::new(self.wing.clone(), self.modes.len(), self.feathers.clone(), kind, k, self.goal_settings)
    }

    /// Keeps only the first `n` feathers.
    pub fn with_first_feathers(&self, n: usize) -> Result<Self> {
        if n > self.feathers.len() {
            return Err(Error::config("sweep.values", format!("N = {n} exceeds the {} configured feathers", self.feathers.len())));
        }
        Self::new(
            self.wing.clone(),
            self.modes.len(),
            self.feathers[..n].to_vec(),
            self.topology_kind,
            self.topology_k.min(n.saturating_sub(1) & !1).max(2),
            self.goal_settings,
        )
    }
}
