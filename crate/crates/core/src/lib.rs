//! Flexural-torsional wing flutter laboratory with distributed feather
//! actuators.
//!
//! The wing is reduced to one bending and one torsion mode; feathers are
//! spanwise strips with thin-airfoil flap coefficients. Three feedback laws
//! (constant-coefficient, network speed-gradient and multi-agent
//! speed-gradient with consensus) act on the feather angles. Everything
//! numerical is generic over [`Real`] (`f32` or `f64`).

// `!(x > 0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod control;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod feather;
pub mod model;
pub mod output;
pub mod quadrature;
pub mod scalar;
pub mod sim;
pub mod wing;

pub use error::{Error, Result};
pub use scalar::Real;

pub use config::{load_config, RunConfig};
pub use control::{Law, LawCInput, Topology, TopologyKind};
pub use feather::{FeatherSpec, Surface};
pub use sim::{RunStatus, SpeedProfile};
pub use wing::{SpanProfile, WingParams};

pub type Model64 = model::Model<f64>;
pub type Model32 = model::Model<f32>;
pub type Scenario64 = sim::Scenario<f64>;
pub type Scenario32 = sim::Scenario<f32>;
pub type SimRecord64 = sim::SimRecord<f64>;
pub type StateSpace64 = dynamics::StateSpace<f64>;
pub type ModalCoefficients64 = wing::ModalCoefficients<f64>;
pub type WingParams64 = wing::WingParams<f64>;
pub type GoalParams64 = dynamics::GoalParams<f64>;
