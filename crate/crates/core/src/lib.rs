//! One-dimensional nutrient–phytoplankton–zooplankton–detritus (NPZD)
//! water-column model.
//!
//! The column `x ∈ [0, L]` is measured downward from the surface. Each of the
//! four concentrations obeys a reaction–diffusion equation with a turbulent
//! mixing coefficient `d(t, x)` and zero-flux (Neumann) boundaries; detritus
//! additionally sinks at speed `v_d`. Reaction terms switch between a
//! light-driven euphotic branch above depth `l` and a remineralization
//! branch below it.
//!
//! Besides the simulator, [`analysis`] turns the well-posedness estimates of
//! the model (positivity, `L²` growth bounds, local Lipschitz constants,
//! coercivity of the shifted operator) into executable checks on computed
//! trajectories.

pub mod analysis;
pub mod config;
pub mod error;
pub mod forcing;
pub mod model;
pub mod optics;
pub mod output;
pub mod reactions;
pub mod scenarios;
pub mod solver;

pub use error::{ModelError, Result};
pub use forcing::{Forcing, IrradianceSeries, MixingField};
pub use model::{
    default_params, total_nitrogen, Diagnostics, GrazingVariant, Grid, LightVariant, ModelParams,
    Species, StateVector, Trajectory, ZooMortalityVariant,
};
pub use optics::{AttenuationMode, LightResponse, OpticalModel, OpticalParams};
pub use solver::{Model, SolverConfig, SolverMode};
