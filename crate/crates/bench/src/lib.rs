//! Shared fixtures for the kernel benchmarks.

use npzd_core::scenarios::seasonal_reference;
use npzd_core::{Model, StateVector};

/// The seasonal reference model and its seeded initial column.
pub fn seasonal() -> (Model, StateVector) {
    let scenario = seasonal_reference(1).resolve().expect("preset resolves");
    let model = scenario.model(scenario.n_cells).expect("preset model");
    let state = scenario.initial_state(&model.grid).expect("preset initial state");
    (model, state)
}
