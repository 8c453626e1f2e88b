//! Discrete norms, the estimate constants, and run verification.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::error::{ModelError, Result};
use crate::model::{Grid, StateVector, Trajectory};
use crate::optics::{light_limit, par_unchecked};
use crate::reactions::{lipschitz_bound, shifted_source};
use crate::scenarios::Scenario;
use crate::solver::{Model, SolverConfig, SolverMode};

/// Smallest shift that makes the bilinear form coercive: `v_d² / (2 d₀)`.
pub fn coercivity_lambda(d0: f64, v_d: f64) -> Result<f64> {
    if !(d0 > 0.0) {
        return Err(ModelError::param("d0", format!("must be positive, got {d0}")));
    }
    Ok(v_d * v_d / (2.0 * d0))
}

/// Coercivity constant `c₀` of the shifted form for sinking speed `v_d`.
///
/// Young's inequality with weight `θ` gives
/// `a(C, C) ≥ d₀(1-θ)‖∂C‖² + (λ - v_d²/(4 d₀ θ))‖C‖²`; the returned value is
/// the best `min` of the two coefficients over `θ ∈ (0, 1)`, or 0 when no `θ`
/// makes both positive.
pub fn coercivity_constant(d0: f64, v_d: f64, lambda: f64) -> Result<f64> {
    coercivity_lambda(d0, v_d)?;
    let a = v_d * v_d / (4.0 * d0);
    // Positive root of d₀θ² + (λ - d₀)θ - a = 0 balances the two terms.
    let b = lambda - d0;
    let theta = (-b + (b * b + 4.0 * d0 * a).sqrt()) / (2.0 * d0);
    Ok((d0 * (1.0 - theta)).max(0.0))
}

/// `(‖C‖, ‖C‖₁)`: the discrete L² norm over all four tracers and the H¹ norm
/// `√(‖C‖² + ‖∂C‖²)` with forward difference quotients.
pub fn discrete_norms(state: &StateVector, grid: &Grid) -> Result<(f64, f64)> {
    let dx = grid.cell_width();
    let mut sq = 0.0;
    let mut grad = 0.0;
    for arr in &state.conc {
        if arr.len() != grid.n_cells() {
            return Err(ModelError::LengthMismatch {
                expected: grid.n_cells(),
                got: arr.len(),
            });
        }
        sq += arr.iter().map(|v| v * v).sum::<f64>();
        grad += arr.windows(2).map(|w| ((w[1] - w[0]) / dx).powi(2)).sum::<f64>();
    }
    let l2 = (dx * sq).sqrt();
    let g = (dx * grad).sqrt();
    Ok((l2, l2.hypot(g)))
}

/// Discrete L² distance between two states on the same grid.
pub fn l2_distance(a: &StateVector, b: &StateVector, grid: &Grid) -> f64 {
    let s: f64 = a
        .conc
        .iter()
        .flatten()
        .zip(b.conc.iter().flatten())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    (grid.cell_width() * s).sqrt()
}

/// Largest L² distance over snapshots present in both trajectories at the
/// same time (within `1e-9` day). Returns `None` if no times match.
pub fn max_l2_distance(a: &Trajectory, b: &Trajectory, grid: &Grid) -> Option<f64> {
    let mut best: Option<f64> = None;
    let mut j = 0;
    for sa in &a.snapshots {
        while j < b.snapshots.len() && b.snapshots[j].t < sa.t - 1e-9 {
            j += 1;
        }
        if j < b.snapshots.len() && (b.snapshots[j].t - sa.t).abs() <= 1e-9 {
            let d = l2_distance(sa, &b.snapshots[j], grid);
            best = Some(best.map_or(d, |m: f64| m.max(d)));
        }
    }
    best
}

/// Bilinear form of the shifted linear operator on the grid:
/// `Σ d_face ∂C·∂C' Δx + v_d Σ (∂_up D) D' Δx + λ (C, C')`, with `d` at time `t`.
pub fn bilinear_form(model: &Model, lambda: f64, t: f64, c: &StateVector, c2: &StateVector) -> Result<f64> {
    let grid = &model.grid;
    let dx = grid.cell_width();
    let d: Vec<f64> = grid
        .centers()
        .iter()
        .map(|&x| model.forcing.mixing.mixing_at(t, x))
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for (u, w) in c.conc.iter().zip(&c2.conc) {
        for i in 0..grid.n_cells() - 1 {
            let face = 2.0 * d[i] * d[i + 1] / (d[i] + d[i + 1]);
            total += face * (u[i + 1] - u[i]) / dx * (w[i + 1] - w[i]) / dx * dx;
        }
        total += lambda * dx * u.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
    }
    let (u, w) = (&c.conc[3], &c2.conc[3]);
    for i in 0..grid.n_cells() {
        let upstream = if i == 0 { 0.0 } else { u[i - 1] };
        total += model.params.v_d * (u[i] - upstream) * w[i];
    }
    Ok(total)
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    /// `None` when the check does not apply to this run.
    pub passed: Option<bool>,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    /// False if the trajectory ended before `t_end`; the remaining fields
    /// then cover the computed part only.
    pub complete: bool,
    pub t_final: f64,
    pub lambda: f64,
    pub lambda_min: f64,
    pub c0: f64,
    pub m_g: f64,
    /// Minimum over recorded times of `‖C⁰‖ e^{M_g t} / ‖C(t)‖`.
    pub gronwall_margin: f64,
    pub positivity_min: f64,
    pub positivity_threshold: f64,
    /// `|ΔN_total + Σ export| / N_total(0)`.
    pub budget_residual: f64,
    pub budget_applicable: bool,
    pub lipschitz_samples: usize,
    pub lipschitz_violations: usize,
    /// Worst ratio `|g_i(C) - g_i(Ĉ)| / (K_i Σ|ΔC|)` over the samples.
    pub lipschitz_worst_ratio: f64,
    /// Largest Picard contraction bound over slabs, if Picard was used.
    pub contraction_factor: Option<f64>,
    pub max_picard_iterations: Option<usize>,
    /// Largest observed `|a(C, C')| / (‖C‖₁ ‖C'‖₁)` over snapshot pairs.
    pub empirical_m_a: f64,
    pub max_abs_source: f64,
}

pub const POSITIVITY_TOLERANCE: f64 = 1e-10;
pub const BUDGET_TOLERANCE: f64 = 1e-8;
const GRONWALL_SLACK: f64 = 1e-12;

impl EstimateReport {
    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check {
                name: "positivity",
                passed: Some(self.positivity_min >= self.positivity_threshold),
                value: self.positivity_min,
                threshold: self.positivity_threshold,
            },
            Check {
                name: "budget",
                passed: self.budget_applicable.then_some(self.budget_residual <= BUDGET_TOLERANCE),
                value: self.budget_residual,
                threshold: BUDGET_TOLERANCE,
            },
            Check {
                name: "gronwall",
                passed: Some(self.gronwall_margin >= 1.0 - GRONWALL_SLACK),
                value: self.gronwall_margin,
                threshold: 1.0,
            },
            Check {
                name: "lipschitz",
                passed: Some(self.lipschitz_violations == 0),
                value: self.lipschitz_violations as f64,
                threshold: 0.0,
            },
        ]
    }

    pub fn passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed != Some(false))
    }

    /// Flat `key = value` text, one entry per line.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k} = {v}");
        }
        for c in self.checks() {
            let status = match c.passed {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "skipped",
            };
            let _ = writeln!(out, "check.{} = {status}", c.name);
        }
        let _ = writeln!(out, "passed = {}", self.passed());
        out
    }

    /// Delimited rows `key,value` with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k},{v}");
        }
        for c in self.checks() {
            let v = match c.passed {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "skipped",
            };
            let _ = writeln!(out, "check_{},{v}", c.name);
        }
        out
    }

    fn fields(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        vec![
            ("complete", self.complete.to_string()),
            ("t_final", fmt(self.t_final)),
            ("lambda", fmt(self.lambda)),
            ("lambda_min", fmt(self.lambda_min)),
            ("c0", fmt(self.c0)),
            ("M_g", fmt(self.m_g)),
            ("gronwall_margin", fmt(self.gronwall_margin)),
            ("positivity_min", fmt(self.positivity_min)),
            ("positivity_threshold", fmt(self.positivity_threshold)),
            ("budget_residual", fmt(self.budget_residual)),
            ("budget_applicable", self.budget_applicable.to_string()),
            ("lipschitz_samples", self.lipschitz_samples.to_string()),
            ("lipschitz_violations", self.lipschitz_violations.to_string()),
            ("lipschitz_worst_ratio", fmt(self.lipschitz_worst_ratio)),
            ("contraction_factor", opt(self.contraction_factor.map(fmt))),
            ("max_picard_iterations", opt(self.max_picard_iterations.map(|v| v.to_string()))),
            ("empirical_M_a", fmt(self.empirical_m_a)),
            ("max_abs_source", fmt(self.max_abs_source)),
        ]
    }
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

/// Evaluates the a-priori estimates on a (possibly partial) trajectory.
///
/// Lipschitz samples pair the same cell in consecutive snapshots, so the
/// report is a pure function of its inputs.
pub fn verify_run(traj: &Trajectory, model: &Model, config: &SolverConfig) -> EstimateReport {
    let lambda = config.lambda_for(model);
    let d0 = model.forcing.mixing.d_min();
    let v_d = model.params.v_d;
    let m_g = model.bounds(lambda).m_g;
    let c0 = coercivity_constant(d0, v_d, lambda).unwrap_or(0.0);
    let lambda_min = coercivity_lambda(d0, v_d).unwrap_or(f64::INFINITY);

    let first = traj.diagnostics.first();
    let l2_0 = first.map_or(0.0, |d| d.l2);
    let mut gronwall_margin = f64::INFINITY;
    for d in &traj.diagnostics {
        if d.l2 > 0.0 {
            let bound = l2_0 * (m_g * (d.t - first.unwrap().t)).exp();
            gronwall_margin = gronwall_margin.min(bound / d.l2);
        }
    }

    let initial_max = traj.initial().map_or(0.0, |s| s.max_abs());
    let positivity_min = traj.diagnostics.iter().map(|d| d.min_conc).fold(f64::INFINITY, f64::min);

    let export: f64 = traj.total_export();
    let (n0, n_end) = match (traj.diagnostics.first(), traj.diagnostics.last()) {
        (Some(a), Some(b)) => (a.total_n, b.total_n),
        _ => (0.0, 0.0),
    };
    let raw = (n_end - n0 + export).abs();
    let budget_residual = if n0 != 0.0 { raw / n0.abs() } else { raw };

    let (lipschitz_samples, lipschitz_violations, lipschitz_worst_ratio) = lipschitz_sampling(traj, model, lambda);

    let contraction_factor = (!traj.slabs.is_empty())
        .then(|| traj.slabs.iter().map(|s| s.contraction_bound).fold(0.0, f64::max));
    let max_picard_iterations = traj.slabs.iter().map(|s| s.iterations).max();

    let mut empirical_m_a = 0.0_f64;
    for w in traj.snapshots.windows(2) {
        let (Ok((_, h_a)), Ok((_, h_b))) = (discrete_norms(&w[0], &model.grid), discrete_norms(&w[1], &model.grid))
        else {
            continue;
        };
        if h_a > 0.0 && h_b > 0.0 {
            if let Ok(a) = bilinear_form(model, lambda, w[0].t, &w[0], &w[1]) {
                empirical_m_a = empirical_m_a.max(a.abs() / (h_a * h_b));
            }
        }
    }

    let t_final = traj.diagnostics.last().map_or(0.0, |d| d.t);
    let t_target = config.n_steps() as f64 * config.dt;
    EstimateReport {
        complete: (t_final - t_target).abs() <= 1e-9 * t_target.max(1.0),
        t_final,
        lambda,
        lambda_min,
        c0,
        m_g,
        gronwall_margin,
        positivity_min,
        positivity_threshold: -POSITIVITY_TOLERANCE * initial_max,
        budget_residual,
        budget_applicable: config.truncation_n.is_none() && !config.floor_at_zero,
        lipschitz_samples,
        lipschitz_violations,
        lipschitz_worst_ratio,
        contraction_factor,
        max_picard_iterations,
        empirical_m_a,
        max_abs_source: traj.max_abs_source(),
    }
}

fn lipschitz_sampling(traj: &Trajectory, model: &Model, lambda: f64) -> (usize, usize, f64) {
    let ctx = model.lipschitz_context(lambda);
    let response = model.response();
    let grid = &model.grid;
    let (mut samples, mut violations, mut worst) = (0, 0, 0.0_f64);
    for w in traj.snapshots.windows(2) {
        let t = w[0].t;
        let Ok(q) = model.forcing.irradiance.irradiance_at(t) else {
            continue;
        };
        for i in 0..grid.n_cells() {
            let (a, b) = (w[0].cell(i), w[1].cell(i));
            if a.iter().chain(&b).any(|v| *v < 0.0) {
                continue;
            }
            let Ok(k) = lipschitz_bound(a, b, &ctx) else {
                continue;
            };
            let eu = grid.is_euphotic(i);
            let x = grid.centers()[i];
            let li = |p: f64| light_limit(par_unchecked(x, p, q, &model.optics), &response);
            let ga = shifted_source(a, eu, li(a[1]), lambda, &model.params);
            let gb = shifted_source(b, eu, li(b[1]), lambda, &model.params);
            let dist: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
            samples += 1;
            for j in 0..4 {
                let lhs = (ga[j] - gb[j]).abs();
                let rhs = k[j] * dist;
                if lhs > rhs * (1.0 + 1e-12) + 1e-14 {
                    violations += 1;
                }
                if rhs > 0.0 {
                    worst = worst.max(lhs / rhs);
                }
            }
        }
    }
    (samples, violations, worst)
}

/// Self-refinement order estimates for one refinement direction.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderEstimate {
    /// Step sizes (dt or Δx), coarsest first.
    pub levels: Vec<f64>,
    /// L² differences between consecutive levels at the final time.
    pub differences: Vec<f64>,
    /// Richardson orders from consecutive difference pairs.
    pub orders: Vec<f64>,
    /// False if the differences do not decrease monotonically.
    pub reliable: bool,
}

impl OrderEstimate {
    /// Finest-level order estimate.
    pub fn order(&self) -> f64 {
        *self.orders.last().unwrap_or(&f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub temporal: OrderEstimate,
    pub spatial: OrderEstimate,
    pub elapsed: Duration,
}

fn refinement_ratio(levels: &[f64], what: &str) -> Result<f64> {
    if levels.len() < 3 {
        return Err(ModelError::Degenerate(format!(
            "{what} study needs at least 3 levels, got {}",
            levels.len()
        )));
    }
    let r = levels[0] / levels[1];
    if !(r > 1.0) || !r.is_finite() {
        return Err(ModelError::Degenerate(format!("{what} levels are not refined: {levels:?}")));
    }
    for w in levels.windows(2) {
        if ((w[0] / w[1]) / r - 1.0).abs() > 1e-9 {
            return Err(ModelError::Degenerate(format!(
                "{what} levels must refine by a constant ratio: {levels:?}"
            )));
        }
    }
    Ok(r)
}

fn orders_from(levels: Vec<f64>, differences: Vec<f64>, ratio: f64) -> Result<OrderEstimate> {
    if differences.iter().all(|d| *d == 0.0) {
        return Err(ModelError::Degenerate("all level differences are zero".into()));
    }
    let orders = differences.windows(2).map(|w| (w[0] / w[1]).ln() / ratio.ln()).collect();
    let reliable = differences.windows(2).all(|w| w[1] < w[0]) && differences.iter().all(|d| d.is_finite());
    Ok(OrderEstimate {
        levels,
        differences,
        orders,
        reliable,
    })
}

/// Averages a fine-grid field onto a grid `ratio` times coarser.
fn restrict(fine: &StateVector, ratio: usize) -> StateVector {
    let conc = std::array::from_fn(|k| {
        fine.conc[k]
            .chunks(ratio)
            .map(|c| c.iter().sum::<f64>() / ratio as f64)
            .collect()
    });
    StateVector { t: fine.t, conc }
}

fn final_state(scenario: &Scenario, n_cells: usize, solver: &SolverConfig) -> Result<(Grid, StateVector)> {
    let (model, traj) = scenario.run_with(n_cells, solver)?;
    let last = traj.last().cloned().expect("trajectory has a final snapshot");
    Ok((model.grid, last))
}

/// Runs all jobs on scoped threads and collects results in input order.
fn parallel<T: Send, F: Fn(usize) -> Result<T> + Sync>(count: usize, job: F) -> Result<Vec<T>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..count).map(|i| s.spawn({ let job = &job; move || job(i) })).collect();
        handles.into_iter().map(|h| h.join().expect("refinement worker panicked")).collect()
    })
}

/// Temporal and spatial self-refinement study.
///
/// Temporal levels run on the scenario's grid; spatial levels (cell counts,
/// coarsest first, each an integer multiple of the previous) run with the
/// smallest `dt`. Differences are discrete L² norms at the final time, fine
/// solutions being cell-averaged onto the coarser grid.
pub fn convergence_study(scenario: &Scenario, dts: &[f64], cells: &[usize]) -> Result<ConvergenceReport> {
    let start = Instant::now();
    let r_t = refinement_ratio(dts, "time")?;
    let dx_levels: Vec<f64> = cells.iter().map(|&n| scenario.depth / n as f64).collect();
    let r_x = refinement_ratio(&dx_levels, "space")?;
    let r_cells = cells[1] / cells[0];
    if cells.windows(2).any(|w| w[1] % w[0] != 0 || w[1] / w[0] != r_cells) {
        return Err(ModelError::Degenerate(format!(
            "cell counts must refine by a constant integer factor: {cells:?}"
        )));
    }
    let solver_for = |dt: f64| SolverConfig {
        dt,
        snapshot_every: usize::MAX,
        ..scenario.solver.clone()
    };

    let temporal = parallel(dts.len(), |i| final_state(scenario, scenario.n_cells, &solver_for(dts[i])))?;
    let t_diff: Vec<f64> = temporal
        .windows(2)
        .map(|w| l2_distance(&w[0].1, &w[1].1, &w[0].0))
        .collect();

    let dt_fine = *dts.last().unwrap();
    let spatial = parallel(cells.len(), |i| final_state(scenario, cells[i], &solver_for(dt_fine)))?;
    let x_diff: Vec<f64> = spatial
        .windows(2)
        .map(|w| l2_distance(&w[0].1, &restrict(&w[1].1, r_cells), &w[0].0))
        .collect();

    Ok(ConvergenceReport {
        temporal: orders_from(dts.to_vec(), t_diff, r_t)?,
        spatial: orders_from(dx_levels, x_diff, r_x)?,
        elapsed: start.elapsed(),
    })
}

/// Picard-versus-splitting comparison across time steps.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSolverStudy {
    pub dts: Vec<f64>,
    /// Max-over-time L² distance between the two modes at each `dt`.
    pub differences: Vec<f64>,
    /// `differences[k] / differences[k + 1]`.
    pub ratios: Vec<f64>,
    /// Most Picard iterations used on any slab at any level.
    pub max_picard_iterations: usize,
}

pub fn cross_solver_study(scenario: &Scenario, dts: &[f64], output_interval: f64) -> Result<CrossSolverStudy> {
    refinement_ratio(dts, "time")?;
    let results = parallel(dts.len() * 2, |i| {
        let dt = dts[i / 2];
        let mode = if i % 2 == 0 { SolverMode::Splitting } else { SolverMode::Picard };
        let solver = SolverConfig {
            dt,
            mode,
            snapshot_every: ((output_interval / dt).round() as usize).max(1),
            ..scenario.solver.clone()
        };
        scenario.run_with(scenario.n_cells, &solver)
    })?;
    let mut differences = Vec::new();
    let mut max_iters = 0;
    for pair in results.chunks(2) {
        let (model, split) = &pair[0];
        let (_, picard) = &pair[1];
        max_iters = max_iters.max(picard.slabs.iter().map(|s| s.iterations).max().unwrap_or(0));
        differences.push(max_l2_distance(split, picard, &model.grid).unwrap_or(f64::NAN));
    }
    let ratios = differences.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(CrossSolverStudy {
        dts: dts.to_vec(),
        differences,
        ratios,
        max_picard_iterations: max_iters,
    })
}

/// Continuous-dependence bound `ε exp(∫ K ds)` with `K = L_∞² / (2 c₀)`,
/// where `L_∞` comes from the running sup-norms of both trajectories.
/// Returns `(observed max distance / bound)` over matched diagnostics times.
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceCheck {
    pub epsilon: f64,
    pub c0: f64,
    /// Largest `K(t)` encountered.
    pub k_max: f64,
    /// Largest ratio of observed distance to the bound over the snapshots.
    pub worst_ratio: f64,
    pub bound_at_end: f64,
    pub distance_at_end: f64,
}

pub fn continuous_dependence(
    a: &Trajectory,
    b: &Trajectory,
    model: &Model,
    config: &SolverConfig,
) -> Result<DependenceCheck> {
    let lambda = config.lambda_for(model);
    let c0 = coercivity_constant(model.forcing.mixing.d_min(), model.params.v_d, lambda)?;
    if !(c0 > 0.0) {
        return Err(ModelError::param(
            "solver.lambda",
            format!("shift {lambda} gives no coercivity; need λ > v_d²/(4 d₀)"),
        ));
    }
    let ctx = model.lipschitz_context(lambda);
    let (Some(sa), Some(sb)) = (a.initial(), b.initial()) else {
        return Err(ModelError::Config("empty trajectory".into()));
    };
    let epsilon = l2_distance(sa, sb, &model.grid);
    let n = a.diagnostics.len().min(b.diagnostics.len());
    let mut integral = 0.0;
    let mut k_max = 0.0_f64;
    let mut exponent_at = Vec::with_capacity(n);
    exponent_at.push((a.diagnostics[0].t, 0.0));
    for i in 1..n {
        let (da, db) = (&a.diagnostics[i], &b.diagnostics[i]);
        let (pa, pb) = (&a.diagnostics[i - 1], &b.diagnostics[i - 1]);
        // Running sup over the step of both runs.
        let sup: [f64; 4] = std::array::from_fn(|k| da.sup[k].max(db.sup[k]).max(pa.sup[k]).max(pb.sup[k]));
        let l = ctx.l_infinity(sup)?;
        let k = l * l / (2.0 * c0);
        k_max = k_max.max(k);
        integral += k * (da.t - pa.t);
        exponent_at.push((da.t, integral));
    }
    let mut worst_ratio = 0.0_f64;
    let (mut bound_at_end, mut distance_at_end) = (epsilon, epsilon);
    let mut j = 0;
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        while j + 1 < exponent_at.len() && exponent_at[j].0 < x.t - 1e-9 {
            j += 1;
        }
        let bound = epsilon * exponent_at[j].1.exp();
        let dist = l2_distance(x, y, &model.grid);
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(dist / bound);
        } else if dist > 0.0 {
            worst_ratio = f64::INFINITY;
        }
        bound_at_end = bound;
        distance_at_end = dist;
    }
    Ok(DependenceCheck {
        epsilon,
        c0,
        k_max,
        worst_ratio,
        bound_at_end,
        distance_at_end,
    })
}

/// Result of one sampled property.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub samples: usize,
    pub violations: usize,
    /// Largest observed value of the checked quantity relative to its bound.
    pub worst: f64,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Sampled checks of the pointwise properties of the reaction vector for the
/// model's parameters: cancellation, growth bounds, quasi-positivity, local
/// Lipschitz bounds, truncation, and the shift identity of the reaction step.
pub fn property_suite(model: &Model, config: &SolverConfig, seed: u64, samples: usize) -> Vec<PropertyResult> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let params = &model.params;
    let lambda = config.lambda_for(model);
    let bounds = model.bounds(0.0);
    let ctx = model.lipschitz_context(lambda);
    let response = model.response();
    let q_sup = model.forcing.irradiance.q_sup();
    let l = model.grid.euphotic_depth();
    let f = |c: [f64; 4], eu: bool, li: f64| shifted_source(c, eu, li, 0.0, params);

    let mut cancel = PropertyResult { name: "reaction_cancellation", samples, violations: 0, worst: 0.0 };
    let mut growth = PropertyResult { name: "growth_bounds", samples, violations: 0, worst: 0.0 };
    let mut quasi = PropertyResult { name: "quasi_positivity", samples, violations: 0, worst: 0.0 };
    let mut lip = PropertyResult { name: "lipschitz", samples, violations: 0, worst: 0.0 };
    let mut trunc = PropertyResult { name: "truncation", samples, violations: 0, worst: 0.0 };
    for _ in 0..samples {
        let eu = rng.gen_bool(0.5);
        let li: f64 = rng.gen_range(0.0..=1.0);
        let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-10.0..=10.0));
        let v = f(c, eu, li);
        let sum = v.iter().sum::<f64>().abs();
        cancel.worst = cancel.worst.max(sum);
        cancel.violations += usize::from(sum > 1e-12);

        let rhs = bounds.bound(c);
        for i in 0..4 {
            if rhs[i] > 0.0 {
                growth.worst = growth.worst.max(v[i].abs() / rhs[i]);
            }
            growth.violations += usize::from(v[i].abs() > rhs[i] * (1.0 + 1e-14));
        }

        let mut p = c.map(f64::abs);
        let zero = rng.gen_range(0..4);
        p[zero] = 0.0;
        let q = f(p, eu, li)[zero];
        quasi.worst = quasi.worst.min(q);
        quasi.violations += usize::from(q < 0.0);

        let a = c.map(f64::abs);
        let b: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..=10.0));
        let x = rng.gen_range(0.0..=l);
        let qv = rng.gen_range(0.0..=q_sup);
        let lim = |pv: f64| light_limit(par_unchecked(x, pv, qv, &model.optics), &response);
        if let Ok(k) = lipschitz_bound(a, b, &ctx) {
            let ga = shifted_source(a, eu, lim(a[1]), lambda, params);
            let gb = shifted_source(b, eu, lim(b[1]), lambda, params);
            let dist: f64 = a.iter().zip(&b).map(|(u, w)| (u - w).abs()).sum();
            for j in 0..4 {
                let (lhs, rhs) = ((ga[j] - gb[j]).abs(), k[j] * dist);
                if rhs > 0.0 {
                    lip.worst = lip.worst.max(lhs / rhs);
                }
                lip.violations += usize::from(lhs > rhs * (1.0 + 1e-12) + 1e-15);
            }
        } else {
            lip.violations += 1;
        }

        let n = rng.gen_range(1..=1_000_000u64);
        let g: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1e3..=1e3));
        let t = crate::reactions::truncate(g, n);
        let neg = crate::reactions::truncate(g.map(|v| -v), n);
        for i in 0..4 {
            let ok = neg[i] == -t[i]
                && t[i].abs() < n as f64
                && t[i].abs() <= g[i].abs()
                && (g[i] - t[i]).abs() <= g[i] * g[i] / n as f64 * (1.0 + 1e-12);
            trunc.violations += usize::from(!ok);
        }
    }

    // Shift identity of the explicit reaction step on a random column.
    let mut shift = PropertyResult { name: "shift_equivalence", samples: 0, violations: 0, worst: 0.0 };
    let n = model.grid.n_cells();
    let mut state = StateVector::zeros(n, 0.0);
    for i in 0..n {
        state.set_cell(i, std::array::from_fn(|_| rng.gen_range(0.0..=5.0)));
    }
    let dt = config.dt;
    let unshifted = crate::solver::step_reaction(model, &state, dt, None, 0.0);
    let shifted = crate::solver::step_reaction(model, &state, dt, None, lambda);
    match (unshifted, shifted) {
        (Ok((a, _)), Ok((b, _))) => {
            for (x, y) in a.conc.iter().flatten().zip(b.conc.iter().flatten()) {
                shift.samples += 1;
                let rel = (x - y).abs() / x.abs().max(f64::MIN_POSITIVE);
                shift.worst = shift.worst.max(rel);
                shift.violations += usize::from((x - y).abs() > 1e-12 * x.abs().max(1e-300));
            }
        }
        _ => shift.violations += 1,
    }
    vec![cancel, growth, quasi, lip, trunc, shift]
}
