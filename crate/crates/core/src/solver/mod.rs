//! Time integration of the column model.
//!
//! Two drivers share the same discretization: a finite-volume grid with
//! Neumann diffusion, upwind sinking of detritus with bottom export, and the
//! cellwise reaction vector.
//!
//! * [`run_splitting`]: Lie splitting reaction → advection → diffusion.
//! * [`run_picard`]: one implicit linear step per slab with the (optionally
//!   truncated) shifted source frozen at the previous iterate, repeated until
//!   the iterates settle.

mod transport;
mod tridiag;

use serde::{Deserialize, Serialize};

pub use transport::{step_advection, step_diffusion, DiffusionOperator};
pub use tridiag::solve_tridiagonal;

use crate::analysis::{coercivity_lambda, discrete_norms};
use crate::error::{ModelError, Result};
use crate::forcing::Forcing;
use crate::model::{total_nitrogen, Diagnostics, Grid, ModelParams, SlabStats, Species, StateVector, Trajectory};
use crate::optics::{light_limit, par_profile, LightResponse, OpticalParams, DEFAULT_K_PAR_FRACTION};
use crate::reactions::{bound_constants, shifted_source, truncate, BoundConstants, LipschitzContext};
use transport::Workspace;

/// Growth factor over the initial maximum at which a run is declared blown up.
pub const BLOW_UP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    #[default]
    Splitting,
    Picard,
}

impl std::str::FromStr for SolverMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "splitting" => Ok(SolverMode::Splitting),
            "picard" => Ok(SolverMode::Picard),
            other => Err(format!("unknown solver mode `{other}` (expected splitting or picard)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Time step (day).
    pub dt: f64,
    /// Final time (day); rounded to a whole number of steps.
    pub t_end: f64,
    pub mode: SolverMode,
    /// Truncation level `n` of the reaction vector; `None` leaves it untruncated.
    pub truncation_n: Option<u64>,
    /// Relative L² tolerance between successive Picard iterates.
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    /// Shift `λ` (day⁻¹). `None` resolves to `v_d² / (2 d₀)`.
    pub lambda: Option<f64>,
    /// Store a snapshot every this many steps (the final state is always kept).
    pub snapshot_every: usize,
    /// Clamp negative concentrations to zero after every step.
    pub floor_at_zero: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 0.01,
            t_end: 1.0,
            mode: SolverMode::Splitting,
            truncation_n: None,
            picard_tol: 1e-10,
            picard_max_iters: 50,
            lambda: None,
            snapshot_every: 100,
            floor_at_zero: false,
        }
    }
}

impl SolverConfig {
    pub fn lambda_for(&self, model: &Model) -> f64 {
        self.lambda.unwrap_or_else(|| model.lambda_min())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Checks the config against `model`, including the reaction-step
    /// stability bound `dt·M_g < 1`.
    pub fn validate(&self, model: &Model) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(ModelError::param("solver.dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(ModelError::param("solver.t_end", format!("must be positive, got {}", self.t_end)));
        }
        if self.n_steps() == 0 {
            return Err(ModelError::param("solver.t_end", "shorter than half a time step"));
        }
        if !(self.picard_tol > 0.0) {
            return Err(ModelError::param(
                "solver.picard_tol",
                format!("must be positive, got {}", self.picard_tol),
            ));
        }
        if self.picard_max_iters == 0 {
            return Err(ModelError::param("solver.picard_max_iters", "must be at least 1"));
        }
        if self.snapshot_every == 0 {
            return Err(ModelError::param("solver.snapshot_every", "must be at least 1"));
        }
        if self.truncation_n == Some(0) {
            return Err(ModelError::param("solver.truncation_n", "must be a positive integer"));
        }
        let lambda = self.lambda_for(model);
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(ModelError::param("solver.lambda", format!("must be nonnegative, got {lambda}")));
        }
        let m_g = model.bounds(lambda).m_g;
        if self.dt * m_g >= 1.0 {
            return Err(ModelError::param(
                "solver.dt",
                format!("dt·M_g = {:.4} must be below 1 (M_g = {m_g:.4} day⁻¹)", self.dt * m_g),
            ));
        }
        Ok(())
    }
}

/// Parameters, optics, grid and forcing of one simulation.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: ModelParams,
    /// Optical settings with `k_par` resolved.
    pub optics: OpticalParams,
    pub grid: Grid,
    pub forcing: Forcing,
    response: LightResponse,
}

impl Model {
    /// Validates all parts. An unset `k_par` becomes `0.3 · Q_ref`.
    pub fn new(params: ModelParams, mut optics: OpticalParams, grid: Grid, forcing: Forcing) -> Result<Self> {
        params.validate()?;
        forcing.validate()?;
        if optics.k_par.is_none() {
            let q_ref = forcing.irradiance.q_ref();
            if q_ref > 0.0 {
                optics.k_par = Some(DEFAULT_K_PAR_FRACTION * q_ref);
            }
        }
        optics.validate()?;
        let response = LightResponse::from_params(&params, &optics)?;
        Ok(Model {
            params,
            optics,
            grid,
            forcing,
            response,
        })
    }

    pub fn response(&self) -> LightResponse {
        self.response
    }

    /// `v_d² / (2 d₀)` with `d₀` the lower bound of the mixing field.
    pub fn lambda_min(&self) -> f64 {
        coercivity_lambda(self.forcing.mixing.d_min(), self.params.v_d).unwrap_or(f64::INFINITY)
    }

    pub fn bounds(&self, lambda: f64) -> BoundConstants {
        bound_constants(&self.params, lambda)
    }

    pub fn lipschitz_context(&self, lambda: f64) -> LipschitzContext<'_> {
        LipschitzContext {
            params: &self.params,
            optics: &self.optics,
            response: self.response,
            q_sup: self.forcing.irradiance.q_sup(),
            column_depth: self.grid.euphotic_depth(),
            lambda,
        }
    }

    /// `L_I` in the euphotic cells at time `t` for phytoplankton profile `p`.
    fn light_limits(&self, t: f64, p: &[f64], out: &mut Vec<f64>) -> Result<()> {
        let ne = self.grid.euphotic_cells();
        let q = self.forcing.irradiance.irradiance_at(t)?;
        out.clear();
        if q == 0.0 {
            out.resize(ne, 0.0);
            return Ok(());
        }
        let centers = &self.grid.centers()[..ne];
        let par = par_profile(centers, self.grid.cell_width(), &p[..ne], q, &self.optics);
        out.extend(par.into_iter().map(|v| light_limit(v, &self.response)));
        Ok(())
    }

    /// Cellwise `g_n(C) - λC` (or `g(C) - λC` without truncation), which is
    /// `f(C)` when untruncated. Returns `max |g_n|`.
    fn reaction_rates(
        &self,
        conc: &[Vec<f64>; 4],
        limits: &[f64],
        lambda: f64,
        truncation_n: Option<u64>,
        rates: &mut [Vec<f64>; 4],
    ) -> f64 {
        let mut max_g = 0.0_f64;
        for i in 0..self.grid.n_cells() {
            let c = [conc[0][i], conc[1][i], conc[2][i], conc[3][i]];
            let eu = self.grid.is_euphotic(i);
            let li = if eu { limits[i] } else { 0.0 };
            let mut g = shifted_source(c, eu, li, lambda, &self.params);
            if let Some(n) = truncation_n {
                g = truncate(g, n);
            }
            for k in 0..4 {
                max_g = max_g.max(g[k].abs());
                rates[k][i] = g[k] - lambda * c[k];
            }
        }
        max_g
    }

    fn diagnostics(&self, state: &StateVector, export: f64, max_abs_source: f64) -> Result<Diagnostics> {
        let (l2, h1) = discrete_norms(state, &self.grid)?;
        Ok(Diagnostics {
            t: state.t,
            total_n: total_nitrogen(state, &self.grid)?,
            l2,
            h1,
            min_conc: state.min_value(),
            bottom_export: export,
            sup: state.sup_norms(),
            max_abs_source,
        })
    }
}

/// One explicit Euler step of the reaction terms from `state.t`.
///
/// The shifted source is used on both sides, `C + dt (g_n(C) - λC)`, so
/// without truncation the update equals `C + dt f(C)`. `L_I` is frozen at
/// the incoming `P`. Returns the new state and `max |g_n|`.
pub fn step_reaction(
    model: &Model,
    state: &StateVector,
    dt: f64,
    truncation_n: Option<u64>,
    lambda: f64,
) -> Result<(StateVector, f64)> {
    state.check(model.grid.n_cells())?;
    if !(dt > 0.0) {
        return Err(ModelError::param("dt", format!("must be positive, got {dt}")));
    }
    if truncation_n == Some(0) {
        return Err(ModelError::param("truncation_n", "must be a positive integer"));
    }
    let mut out = state.clone();
    let mut scratch = Scratch::new(model.grid.n_cells());
    let max_g = reaction_substep(model, &mut out, dt, truncation_n, lambda, &mut scratch)?;
    Ok((out, max_g))
}

struct Scratch {
    limits: Vec<f64>,
    rates: [Vec<f64>; 4],
    work: Workspace,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            limits: Vec::with_capacity(n),
            rates: std::array::from_fn(|_| vec![0.0; n]),
            work: Workspace::default(),
        }
    }
}

fn reaction_substep(
    model: &Model,
    state: &mut StateVector,
    dt: f64,
    truncation_n: Option<u64>,
    lambda: f64,
    scratch: &mut Scratch,
) -> Result<f64> {
    model.light_limits(state.t, &state.conc[1], &mut scratch.limits)?;
    let max_g = model.reaction_rates(&state.conc, &scratch.limits, lambda, truncation_n, &mut scratch.rates);
    for (arr, rate) in state.conc.iter_mut().zip(&scratch.rates) {
        for (c, r) in arr.iter_mut().zip(rate) {
            *c += dt * r;
        }
    }
    state.t += dt;
    Ok(max_g)
}

/// Runs `config.mode`.
pub fn run(model: &Model, initial: &StateVector, config: &SolverConfig) -> Result<Trajectory> {
    match config.mode {
        SolverMode::Splitting => run_splitting(model, initial, config),
        SolverMode::Picard => run_picard(model, initial, config),
    }
}

struct Recorder<'a> {
    model: &'a Model,
    config: &'a SolverConfig,
    traj: Trajectory,
    limit: f64,
    n_steps: usize,
}

impl<'a> Recorder<'a> {
    fn start(model: &'a Model, initial: &StateVector, config: &'a SolverConfig) -> Result<Self> {
        initial.check(model.grid.n_cells())?;
        config.validate(model)?;
        let mut traj = Trajectory::default();
        traj.diagnostics.push(model.diagnostics(initial, 0.0, 0.0)?);
        traj.push_snapshot(initial.clone());
        Ok(Recorder {
            model,
            config,
            traj,
            limit: BLOW_UP_FACTOR * initial.max_abs(),
            n_steps: config.n_steps(),
        })
    }

    fn record(&mut self, state: &StateVector, step: usize, export: f64, max_g: f64) -> Result<()> {
        let finite = state.conc.iter().flatten().all(|v| v.is_finite());
        let magnitude = if finite { state.max_abs() } else { f64::INFINITY };
        if magnitude > self.limit {
            return Err(ModelError::BlowUp {
                t: state.t,
                magnitude,
                limit: self.limit,
                partial: Box::new(std::mem::take(&mut self.traj)),
            });
        }
        self.traj.diagnostics.push(self.model.diagnostics(state, export, max_g)?);
        if step.is_multiple_of(self.config.snapshot_every) || step == self.n_steps {
            self.traj.push_snapshot(state.clone());
        }
        Ok(())
    }

    fn time(&self, step: usize) -> f64 {
        step as f64 * self.config.dt
    }
}

fn floor_at_zero(state: &mut StateVector) {
    for v in state.conc.iter_mut().flatten() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Lie splitting: reaction, then sinking of `D`, then diffusion of all
/// four tracers with `d` evaluated at the end of the step.
pub fn run_splitting(model: &Model, initial: &StateVector, config: &SolverConfig) -> Result<Trajectory> {
    let mut rec = Recorder::start(model, initial, config)?;
    let lambda = config.lambda_for(model);
    let dt = config.dt;
    let mut scratch = Scratch::new(model.grid.n_cells());
    let mut state = initial.clone();
    for step in 1..=rec.n_steps {
        state.t = rec.time(step - 1);
        let max_g = reaction_substep(model, &mut state, dt, config.truncation_n, lambda, &mut scratch)?;
        let export = step_advection(&mut state.conc[Species::Detritus.index()], &model.grid, model.params.v_d, dt);
        let t_new = rec.time(step);
        let op = DiffusionOperator::assemble(&model.grid, &model.forcing.mixing, t_new)?;
        for arr in state.conc.iter_mut() {
            scratch.work.diffuse(&op, dt, arr);
        }
        state.t = t_new;
        if config.floor_at_zero {
            floor_at_zero(&mut state);
        }
        rec.record(&state, step, export, max_g)?;
    }
    Ok(rec.traj)
}

/// Fixed-point iteration per time slab of length `dt`:
///
/// `((1/dt + λ) I - A) C^{k+1} = C_old / dt + g_n(C^k)`
///
/// where `A` is implicit diffusion plus upwind sinking of `D` and `g_n` is
/// evaluated at the end of the slab.
pub fn run_picard(model: &Model, initial: &StateVector, config: &SolverConfig) -> Result<Trajectory> {
    let mut rec = Recorder::start(model, initial, config)?;
    let lambda = config.lambda_for(model);
    let dt = config.dt;
    let n = model.grid.n_cells();
    let dx = model.grid.cell_width();
    let v_d = model.params.v_d;
    let ctx = model.lipschitz_context(lambda);
    let mut scratch = Scratch::new(n);
    let mut old = initial.clone();
    let mut iterate = initial.clone();
    let mut next = initial.clone();
    for step in 1..=rec.n_steps {
        let t_new = rec.time(step);
        let op = DiffusionOperator::assemble(&model.grid, &model.forcing.mixing, t_new)?;
        iterate.clone_from(&old);
        iterate.t = t_new;
        let mut residuals = Vec::new();
        let mut max_g;
        let mut converged = false;
        loop {
            model.light_limits(t_new, &iterate.conc[1], &mut scratch.limits)?;
            // Rates hold g_n(C^k) - λC^k; add λC^k back for the right-hand side.
            max_g = model.reaction_rates(&iterate.conc, &scratch.limits, lambda, config.truncation_n, &mut scratch.rates);
            for k in 0..4 {
                let rhs = &mut next.conc[k];
                for i in 0..n {
                    rhs[i] = old.conc[k][i] + dt * (scratch.rates[k][i] + lambda * iterate.conc[k][i]);
                }
                let sinking = (k == Species::Detritus.index() && v_d > 0.0).then_some((v_d, dx));
                scratch.work.implicit_solve(&op, dt, lambda, sinking, rhs);
            }
            next.t = t_new;
            let (mut diff2, mut norm2) = (0.0, 0.0);
            for (a, b) in next.conc.iter().flatten().zip(iterate.conc.iter().flatten()) {
                diff2 += (a - b) * (a - b);
                norm2 += a * a;
            }
            let residual = if diff2 == 0.0 {
                0.0
            } else if norm2 == 0.0 || !norm2.is_finite() {
                f64::INFINITY
            } else {
                (diff2 / norm2).sqrt()
            };
            residuals.push(residual);
            std::mem::swap(&mut iterate, &mut next);
            if residual <= config.picard_tol {
                converged = true;
                break;
            }
            if residuals.len() >= config.picard_max_iters || !residual.is_finite() {
                break;
            }
        }
        let sup_old = old.sup_norms();
        let sup_new = iterate.sup_norms();
        let sup: [f64; 4] = std::array::from_fn(|k| sup_old[k].max(sup_new[k]));
        let contraction_bound = ctx
            .l_infinity(sup)
            .map(|l| dt * l / (1.0 + lambda * dt))
            .unwrap_or(f64::INFINITY);
        let stats = SlabStats {
            t: t_new,
            iterations: residuals.len(),
            residuals,
            contraction_bound,
        };
        if !converged {
            return Err(ModelError::PicardNonConvergence {
                slab: step - 1,
                t: t_new,
                iterations: stats.iterations,
                residuals: stats.residuals,
                contraction_bound,
                partial: Box::new(std::mem::take(&mut rec.traj)),
            });
        }
        rec.traj.slabs.push(stats);
        if config.floor_at_zero {
            floor_at_zero(&mut iterate);
        }
        let export = dt * v_d * iterate.conc[Species::Detritus.index()][n - 1];
        rec.record(&iterate, step, export, max_g)?;
        old.clone_from(&iterate);
    }
    Ok(rec.traj)
}
