//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use npzd_core::analysis::{
    coercivity_lambda, continuous_dependence, convergence_study, cross_solver_study, max_l2_distance,
    verify_run, EstimateReport,
};
use npzd_core::config::RunConfig;
use npzd_core::optics::{light_limit, par, LightResponse};
use npzd_core::reactions::{bound_constants, eval_reaction, lipschitz_bound, LipschitzContext, ReactionInput};
use npzd_core::scenarios::{pure_diffusion, seasonal_reference, smooth_npzd};
use npzd_core::solver::run;
use npzd_core::{
    default_params, GrazingVariant, LightVariant, Model, ModelParams, OpticalParams, StateVector, Trajectory,
    ZooMortalityVariant,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POSITIVITY_REL: f64 = 1e-10;
const BUDGET_REL: f64 = 1e-8;
const CANCELLATION_ABS: f64 = 1e-12;
const TRUNCATION_REL: f64 = 1e-6;
const PICARD_MAX_ITERS: usize = 50;
const PICARD_TOL: f64 = 1e-10;
const HALVING_RATIO: (f64, f64) = (1.5, 3.0);
const PERTURBATION: f64 = 1e-6;
const SHIFT_REL: f64 = 1e-9;
const ORDER_TOL: f64 = 0.3;
const STUDY_BUDGET_SECS: f64 = 120.0;
const SEED: u64 = 20_240_601;

struct Outcome {
    id: u8,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: u8, name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, name, pass, detail }
}

fn all_variants() -> Vec<(String, ModelParams)> {
    let mut out = Vec::new();
    for g in [
        GrazingVariant::SquaredMm,
        GrazingVariant::LosaShared,
        GrazingVariant::FashamSwitching,
    ] {
        for l in [LightVariant::ExpSaturation, LightVariant::SpitzTanhLike] {
            for m in [
                ZooMortalityVariant::Linear,
                ZooMortalityVariant::Saturating,
                ZooMortalityVariant::SaturatingFlux,
            ] {
                let mut p = default_params();
                p.grazing_variant = g;
                p.light_variant = l;
                p.zmort_variant = m;
                out.push((format!("{g:?}/{l:?}/{m:?}"), p));
            }
        }
    }
    out
}

/// The reference configuration plus one run per non-default variant.
fn positivity_configs() -> Vec<(String, RunConfig)> {
    let base = seasonal_reference(SEED);
    let mut out = vec![("default".to_string(), base.clone())];
    let tweaks: [(&str, fn(&mut ModelParams)); 5] = [
        ("losa_shared", |p| p.grazing_variant = GrazingVariant::LosaShared),
        ("fasham_switching", |p| p.grazing_variant = GrazingVariant::FashamSwitching),
        ("spitz_tanh_like", |p| p.light_variant = LightVariant::SpitzTanhLike),
        ("saturating_mortality", |p| p.zmort_variant = ZooMortalityVariant::Saturating),
        ("saturating_flux_mortality", |p| p.zmort_variant = ZooMortalityVariant::SaturatingFlux),
    ];
    for (name, f) in tweaks {
        let mut cfg = base.clone();
        f(&mut cfg.model);
        out.push((name.to_string(), cfg));
    }
    out
}

fn run_config(cfg: &RunConfig) -> (Model, Trajectory) {
    let scenario = cfg.resolve().expect("config resolves");
    scenario.run().expect("run completes")
}

fn parallel_runs(cfgs: &[RunConfig]) -> Vec<(Model, Trajectory)> {
    std::thread::scope(|s| {
        let handles: Vec<_> = cfgs.iter().map(|c| s.spawn(move || run_config(c))).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

struct SeasonalRuns {
    names: Vec<String>,
    reports: Vec<EstimateReport>,
    base: (Model, Trajectory),
    repeat: Trajectory,
    truncated: Vec<(u64, Trajectory)>,
    lambda: f64,
}

const TRUNCATION_LEVELS: [u64; 4] = [10, 100, 1_000, 10_000];

fn seasonal_runs() -> SeasonalRuns {
    let variants = positivity_configs();
    let mut cfgs: Vec<RunConfig> = variants.iter().map(|(_, c)| c.clone()).collect();
    // Determinism repeat of the default run.
    cfgs.push(variants[0].1.clone());
    for n in TRUNCATION_LEVELS {
        let mut c = variants[0].1.clone();
        c.solver.truncation_n = Some(n);
        cfgs.push(c);
    }
    let mut results = parallel_runs(&cfgs);
    let truncated: Vec<(u64, Trajectory)> = TRUNCATION_LEVELS
        .iter()
        .zip(results.drain(variants.len() + 1..))
        .map(|(n, (_, t))| (*n, t))
        .collect();
    let repeat = results.pop().unwrap().1;
    let reports = results
        .iter()
        .zip(&variants)
        .map(|((m, t), (_, c))| verify_run(t, m, &c.solver))
        .collect();
    let base = results.swap_remove(0);
    let lambda = variants[0].1.solver.lambda_for(&base.0);
    SeasonalRuns {
        names: variants.into_iter().map(|(n, _)| n).collect(),
        reports,
        base,
        repeat,
        truncated,
        lambda,
    }
}

fn criterion_positivity(runs: &SeasonalRuns) -> Outcome {
    let mut pass = true;
    let mut worst = f64::INFINITY;
    let mut worst_name = "";
    for (name, r) in runs.names.iter().zip(&runs.reports) {
        let initial_max = -r.positivity_threshold / POSITIVITY_REL;
        pass &= r.complete && r.positivity_min >= -POSITIVITY_REL * initial_max;
        let rel = r.positivity_min / initial_max;
        if rel < worst {
            worst = rel;
            worst_name = name;
        }
    }
    outcome(
        1,
        "positivity",
        pass,
        format!(
            "{} runs, worst min/max|C0| = {worst:.3e} ({worst_name}), threshold -{POSITIVITY_REL:e}",
            runs.reports.len()
        ),
    )
}

fn criterion_budget(runs: &SeasonalRuns) -> Outcome {
    let traj = &runs.base.1;
    let n0 = traj.diagnostics[0].total_n;
    let n_end = traj.diagnostics.last().unwrap().total_n;
    let residual = ((n_end - n0) + traj.total_export()).abs() / n0;
    outcome(
        2,
        "nitrogen budget",
        residual <= BUDGET_REL,
        format!("|dN + export| / N0 = {residual:.3e} (limit {BUDGET_REL:e}), export = {:.4}", traj.total_export()),
    )
}

fn criterion_cancellation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut worst = 0.0_f64;
    let mut samples = 0;
    for (_, params) in all_variants() {
        for euphotic in [true, false] {
            for _ in 0..100_000 / 18 + 1 {
                let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-10.0..10.0));
                let input = ReactionInput {
                    c,
                    in_euphotic: euphotic,
                    light_limit: rng.gen_range(0.0..=1.0),
                    lambda: 0.0,
                };
                let f = eval_reaction(&input, &params).unwrap();
                worst = worst.max(f.iter().sum::<f64>().abs());
                samples += 1;
            }
        }
    }
    let per_branch = samples / 2;
    outcome(
        3,
        "reaction cancellation",
        worst <= CANCELLATION_ABS && per_branch >= 100_000,
        format!("{per_branch} samples per branch over 18 variants, max |sum f_i| = {worst:.3e}"),
    )
}

fn criterion_growth_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut violations = 0;
    let mut worst = 0.0_f64;
    let mut checked = 0;
    for (_, params) in all_variants() {
        let b = bound_constants(&params, 0.0);
        for _ in 0..100_000 {
            let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-10.0..=10.0));
            let input = ReactionInput {
                c,
                in_euphotic: rng.gen_bool(0.5),
                light_limit: rng.gen_range(0.0..=1.0),
                lambda: 0.0,
            };
            let f = eval_reaction(&input, &params).unwrap();
            let rhs = b.bound(c);
            for i in 0..4 {
                checked += 1;
                if f[i].abs() > rhs[i] * (1.0 + 1e-14) {
                    violations += 1;
                }
                if rhs[i] > 0.0 {
                    worst = worst.max(f[i].abs() / rhs[i]);
                }
            }
        }
    }
    outcome(
        4,
        "(P1) growth bounds",
        violations == 0,
        format!("{checked} inequalities over 18 variants, {violations} violations, max |f_i|/bound = {worst:.4}"),
    )
}

fn criterion_gronwall(runs: &SeasonalRuns) -> Outcome {
    let worst = runs.reports.iter().map(|r| r.gronwall_margin).fold(f64::INFINITY, f64::min);
    outcome(
        5,
        "Gronwall bound",
        worst >= 1.0,
        format!("min bound/actual over all runs and steps = {worst:.4e} (M_g = {:.4})", runs.reports[0].m_g),
    )
}

fn criterion_truncation(runs: &SeasonalRuns) -> Outcome {
    let (model, base) = &runs.base;
    let scale = base.diagnostics.iter().map(|d| d.l2).fold(0.0, f64::max);
    let sup_g = base.max_abs_source();
    let dists: Vec<f64> = runs
        .truncated
        .iter()
        .map(|(_, t)| max_l2_distance(t, base, &model.grid).unwrap() / scale)
        .collect();
    let monotone = dists.windows(2).all(|w| w[1] <= w[0]);
    let largest = runs
        .truncated
        .iter()
        .zip(&dists)
        .rfind(|((n, _), _)| *n as f64 > sup_g);
    let tail_ok = largest.is_some_and(|(_, d)| *d <= TRUNCATION_REL);
    let list: Vec<String> = runs
        .truncated
        .iter()
        .zip(&dists)
        .map(|((n, _), d)| format!("n={n}: {d:.3e}"))
        .collect();
    outcome(
        6,
        "truncation limit",
        monotone && tail_ok,
        format!(
            "relative max-over-time L2 distance {}; nonincreasing = {monotone}; sup|g| = {sup_g:.2} (lambda = {})",
            list.join(", "),
            runs.lambda
        ),
    )
}

fn criterion_picard() -> Outcome {
    let mut cfg = smooth_npzd();
    cfg.solver.picard_max_iters = PICARD_MAX_ITERS;
    cfg.solver.picard_tol = PICARD_TOL;
    let scenario = cfg.resolve().unwrap();
    match cross_solver_study(&scenario, &[0.02, 0.01, 0.005], 0.1) {
        Ok(study) => {
            let ratios_ok = study
                .ratios
                .iter()
                .all(|r| (HALVING_RATIO.0..=HALVING_RATIO.1).contains(r));
            outcome(
                7,
                "Picard/splitting consistency",
                ratios_ok && study.max_picard_iterations <= PICARD_MAX_ITERS,
                format!(
                    "differences {:.3?}, halving ratios {:.3?}, max Picard iterations {}",
                    study.differences, study.ratios, study.max_picard_iterations
                ),
            )
        }
        Err(e) => outcome(7, "Picard/splitting consistency", false, e.to_string()),
    }
}

fn criterion_lipschitz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let optics = OpticalParams {
        k_par: Some(0.3),
        ..OpticalParams::default()
    };
    let (q_sup, depth, lambda) = (1.0, 200.0, 12.5);
    let (mut samples, mut violations) = (0usize, 0usize);
    let mut worst_i = 0.0_f64;
    let mut worst_g = 0.0_f64;
    for (_, params) in all_variants() {
        let response = LightResponse::from_params(&params, &optics).unwrap();
        let ctx = LipschitzContext {
            params: &params,
            optics: &optics,
            response,
            q_sup,
            column_depth: depth,
            lambda,
        };
        for _ in 0..10_000 / 18 + 1 {
            let a: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..=10.0));
            let b: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..=10.0));
            let x = rng.gen_range(0.0..=depth);
            let q = rng.gen_range(0.0..=q_sup);
            let li = |p: f64| light_limit(par(x, p, q, &optics).unwrap(), &response);
            samples += 1;

            let k_i = npzd_core::optics::lipschitz_k_i(a[1], b[1], q_sup, &optics, &response, depth).unwrap();
            let lhs = (a[1] * li(a[1]) - b[1] * li(b[1])).abs();
            let rhs = k_i * (a[1] - b[1]).abs();
            if lhs > rhs * (1.0 + 1e-12) + 1e-15 {
                violations += 1;
            }
            if rhs > 0.0 {
                worst_i = worst_i.max(lhs / rhs);
            }

            let k = lipschitz_bound(a, b, &ctx).unwrap();
            let dist: f64 = a.iter().zip(&b).map(|(u, v)| (u - v).abs()).sum();
            for euphotic in [true, false] {
                let g = |c: [f64; 4]| {
                    eval_reaction(
                        &ReactionInput {
                            c,
                            in_euphotic: euphotic,
                            light_limit: li(c[1]),
                            lambda,
                        },
                        &params,
                    )
                    .unwrap()
                };
                let (ga, gb) = (g(a), g(b));
                for j in 0..4 {
                    let lhs = (ga[j] - gb[j]).abs();
                    let rhs = k[j] * dist;
                    if lhs > rhs * (1.0 + 1e-12) + 1e-15 {
                        violations += 1;
                    }
                    if rhs > 0.0 {
                        worst_g = worst_g.max(lhs / rhs);
                    }
                }
            }
        }
    }
    outcome(
        8,
        "Lipschitz estimates",
        violations == 0 && samples >= 10_000,
        format!("{samples} pairs, {violations} violations, max ratio K_I: {worst_i:.3}, K_N..K_D: {worst_g:.3}"),
    )
}

fn criterion_dependence(runs: &SeasonalRuns) -> Outcome {
    let cfg = {
        let mut c = smooth_npzd();
        c.solver.dt = 0.01;
        c.solver.snapshot_every = 1;
        c
    };
    let scenario = cfg.resolve().unwrap();
    let model = scenario.model(scenario.n_cells).unwrap();
    let base = scenario.initial_state(&model.grid).unwrap();
    // Perturb N along a smooth shape scaled to L² norm ε.
    let shape: Vec<f64> = model
        .grid
        .centers()
        .iter()
        .map(|x| (std::f64::consts::PI * x / model.grid.depth()).cos() + 1.5)
        .collect();
    let norm = (model.grid.cell_width() * shape.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let mut perturbed = base.clone();
    for (n, s) in perturbed.conc[0].iter_mut().zip(&shape) {
        *n += PERTURBATION * s / norm;
    }
    let mut details = Vec::new();
    let mut pass = true;
    for mode in [npzd_core::SolverMode::Splitting, npzd_core::SolverMode::Picard] {
        let solver = npzd_core::SolverConfig {
            mode,
            ..cfg.solver.clone()
        };
        let a = run(&model, &base, &solver).unwrap();
        let b = run(&model, &perturbed, &solver).unwrap();
        let check = continuous_dependence(&a, &b, &model, &solver).unwrap();
        pass &= check.worst_ratio <= 1.0 && (check.epsilon - PERTURBATION).abs() < 1e-12;
        details.push(format!(
            "{mode:?}: eps = {:.3e}, dist(T) = {:.3e}, worst dist/bound = {:.3e}, K_max = {:.3e}",
            check.epsilon, check.distance_at_end, check.worst_ratio, check.k_max
        ));
    }
    let same = runs.base.1.diagnostics.len() == runs.repeat.diagnostics.len()
        && runs
            .base
            .1
            .diagnostics
            .iter()
            .zip(&runs.repeat.diagnostics)
            .all(|(x, y)| {
                [x.t, x.total_n, x.l2, x.h1, x.min_conc, x.bottom_export]
                    .iter()
                    .zip([y.t, y.total_n, y.l2, y.h1, y.min_conc, y.bottom_export])
                    .all(|(u, v)| u.to_bits() == v.to_bits())
            });
    pass &= same;
    details.push(format!("repeat run bitwise identical = {same}"));
    outcome(9, "continuous dependence", pass, details.join("; "))
}

fn criterion_shift() -> Outcome {
    let cfg = smooth_npzd();
    let scenario = cfg.resolve().unwrap();
    let model = scenario.model(scenario.n_cells).unwrap();
    let initial: StateVector = scenario.initial_state(&model.grid).unwrap();
    let lmin = model.lambda_min();
    let runs: Vec<Trajectory> = [0.0, lmin, 10.0 * lmin]
        .iter()
        .map(|&l| {
            let solver = npzd_core::SolverConfig {
                lambda: Some(l),
                ..cfg.solver.clone()
            };
            run(&model, &initial, &solver).unwrap()
        })
        .collect();
    let scale = runs[0].diagnostics.iter().map(|d| d.l2).fold(0.0, f64::max);
    let d1 = max_l2_distance(&runs[0], &runs[1], &model.grid).unwrap() / scale;
    let d2 = max_l2_distance(&runs[0], &runs[2], &model.grid).unwrap() / scale;
    outcome(
        10,
        "shift equivalence",
        d1 <= SHIFT_REL && d2 <= SHIFT_REL,
        format!("lambda_min = {lmin}; relative distances {d1:.3e}, {d2:.3e}"),
    )
}

fn criterion_orders() -> Outcome {
    let start = Instant::now();
    let diffusion = pure_diffusion();
    let (dts, cells) = diffusion.convergence_levels();
    let spatial = convergence_study(&diffusion.resolve().unwrap(), &dts, &cells).map(|r| r.spatial);
    let smooth = smooth_npzd();
    let (dts, cells) = smooth.convergence_levels();
    let temporal = convergence_study(&smooth.resolve().unwrap(), &dts, &cells).map(|r| r.temporal);
    let elapsed = start.elapsed().as_secs_f64();
    match (spatial, temporal) {
        (Ok(s), Ok(t)) => {
            let ok = (s.order() - 2.0).abs() <= ORDER_TOL
                && (t.order() - 1.0).abs() <= ORDER_TOL
                && s.reliable
                && t.reliable
                && elapsed < STUDY_BUDGET_SECS;
            outcome(
                11,
                "convergence orders",
                ok,
                format!(
                    "spatial {:.3} (orders {:.3?}), temporal {:.3} (orders {:.3?}), {elapsed:.1} s",
                    s.order(),
                    s.orders,
                    t.order(),
                    t.orders
                ),
            )
        }
        (s, t) => outcome(11, "convergence orders", false, format!("{:?} / {:?}", s.err(), t.err())),
    }
}

fn criterion_coercivity() -> Outcome {
    let base = coercivity_lambda(0.1, 5.0).unwrap();
    let mut pass = (base - 125.0).abs() <= 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 12);
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let v = rng.gen_range(0.01..20.0);
        let s = rng.gen_range(0.1..10.0);
        let ratio = coercivity_lambda(0.1, s * v).unwrap() / coercivity_lambda(0.1, v).unwrap();
        let err = (ratio / (s * s) - 1.0).abs();
        worst = worst.max(err);
        pass &= err <= 1e-12;
    }
    outcome(
        12,
        "coercivity formula",
        pass,
        format!("coercivity_lambda(0.1, 5) = {base}; max relative v_d^2 scaling error over 10 samples = {worst:.1e}"),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let runs = seasonal_runs();
    let results = vec![
        criterion_positivity(&runs),
        criterion_budget(&runs),
        criterion_cancellation(),
        criterion_growth_bounds(),
        criterion_gronwall(&runs),
        criterion_truncation(&runs),
        criterion_picard(),
        criterion_lipschitz(),
        criterion_dependence(&runs),
        criterion_shift(),
        criterion_orders(),
        criterion_coercivity(),
    ];
    let mut failed = 0;
    for r in &results {
        let tag = if r.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {:>2} {}: {}", r.id, r.name, r.detail);
        failed += usize::from(!r.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.1} s)",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
