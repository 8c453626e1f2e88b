//! Resolved simulation setups and the reference presets.

use crate::config::{
    ForcingSpec, GridSpec, InitialCondition, InitialSpec, IrradianceSpec, MixingSpec, RunConfig,
};
use crate::error::Result;
use crate::forcing::Forcing;
use crate::model::{default_params, Grid, ModelParams, StateVector, Trajectory};
use crate::optics::OpticalParams;
use crate::solver::{run, Model, SolverConfig};

/// Everything needed to run a simulation at any resolution.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub params: ModelParams,
    pub optics: OpticalParams,
    pub forcing: Forcing,
    pub depth: f64,
    pub n_cells: usize,
    pub initial: InitialCondition,
    pub solver: SolverConfig,
    pub seed: u64,
}

impl Scenario {
    pub fn model(&self, n_cells: usize) -> Result<Model> {
        let grid = Grid::new(self.depth, n_cells, self.params.l_euphotic)?;
        Model::new(self.params.clone(), self.optics.clone(), grid, self.forcing.clone())
    }

    pub fn initial_state(&self, grid: &Grid) -> Result<StateVector> {
        self.initial.build(grid, self.seed)
    }

    pub fn run_with(&self, n_cells: usize, solver: &SolverConfig) -> Result<(Model, Trajectory)> {
        let model = self.model(n_cells)?;
        let initial = self.initial_state(&model.grid)?;
        let traj = run(&model, &initial, solver)?;
        Ok((model, traj))
    }

    pub fn run(&self) -> Result<(Model, Trajectory)> {
        self.run_with(self.n_cells, &self.solver)
    }
}

/// One year of a 1000 m column with 100 cells, seasonal mixing between 1 and
/// 100 m² day⁻¹, diurnal light, and random nonnegative initial profiles.
pub fn seasonal_reference(seed: u64) -> RunConfig {
    let mut model = default_params();
    model.l_euphotic = 200.0;
    RunConfig {
        name: Some("seasonal_reference".into()),
        seed,
        output_dir: None,
        model,
        grid: GridSpec {
            depth: 1000.0,
            n_cells: 100,
            l_euphotic: Some(200.0),
        },
        solver: SolverConfig {
            dt: 0.01,
            t_end: 360.0,
            snapshot_every: 100,
            ..SolverConfig::default()
        },
        forcing: ForcingSpec::default(),
        optics: OpticalParams::default(),
        initial: InitialCondition {
            n: InitialSpec::Random { min: 0.0, max: 5.0 },
            p: InitialSpec::Random { min: 0.0, max: 0.5 },
            z: InitialSpec::Random { min: 0.0, max: 0.5 },
            d: InitialSpec::Random { min: 0.0, max: 0.5 },
        },
        converge: None,
        sweep: None,
    }
}

/// Smooth 20-cell column over one day with constant mixing and light.
pub fn smooth_npzd() -> RunConfig {
    let mut model = default_params();
    model.l_euphotic = 50.0;
    RunConfig {
        name: Some("smooth_npzd".into()),
        seed: 0,
        output_dir: None,
        model,
        grid: GridSpec {
            depth: 100.0,
            n_cells: 20,
            l_euphotic: Some(50.0),
        },
        solver: SolverConfig {
            dt: 0.02,
            t_end: 1.0,
            snapshot_every: 5,
            ..SolverConfig::default()
        },
        forcing: ForcingSpec {
            mixing: MixingSpec::Constant { d: 10.0 },
            irradiance: IrradianceSpec::Constant { q: 1.0 },
        },
        optics: OpticalParams::default(),
        initial: InitialCondition {
            n: InitialSpec::Cosine {
                mean: 3.0,
                amplitude: 1.0,
                modes: 1,
            },
            p: InitialSpec::Cosine {
                mean: 0.4,
                amplitude: 0.2,
                modes: 1,
            },
            z: InitialSpec::Cosine {
                mean: 0.2,
                amplitude: 0.1,
                modes: 2,
            },
            d: InitialSpec::Cosine {
                mean: 0.3,
                amplitude: 0.1,
                modes: 1,
            },
        },
        converge: Some(crate::config::ConvergeSpec {
            dts: vec![0.02, 0.01, 0.005],
            cells: vec![20, 40, 80],
        }),
        sweep: None,
    }
}

/// Nutrient only, constant mixing: the column evolves by pure diffusion.
pub fn pure_diffusion() -> RunConfig {
    let mut cfg = smooth_npzd();
    cfg.name = Some("pure_diffusion".into());
    cfg.initial = InitialCondition {
        n: InitialSpec::Cosine {
            mean: 2.0,
            amplitude: 1.0,
            modes: 2,
        },
        ..InitialCondition::default()
    };
    cfg.solver.t_end = 10.0;
    cfg.solver.dt = 0.1;
    cfg.converge = Some(crate::config::ConvergeSpec {
        dts: vec![0.1, 0.05, 0.025],
        cells: vec![10, 20, 40],
    });
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for cfg in [seasonal_reference(1), smooth_npzd(), pure_diffusion()] {
            cfg.resolve().unwrap();
        }
    }

    #[test]
    fn pure_diffusion_keeps_other_tracers_zero() {
        let mut cfg = pure_diffusion();
        cfg.solver.t_end = 1.0;
        let (_, traj) = cfg.resolve().unwrap().run().unwrap();
        let last = traj.last().unwrap();
        assert!(last.conc[1..].iter().flatten().all(|v| *v == 0.0));
    }
}
