use npzd_core::analysis::{coercivity_lambda, discrete_norms};
use npzd_core::optics::{par, LightResponse};
use npzd_core::reactions::{bound_constants, eval_reaction, lipschitz_bound, truncate, LipschitzContext, ReactionInput};
use npzd_core::solver::{step_advection, step_diffusion};
use npzd_core::{
    default_params, total_nitrogen, GrazingVariant, Grid, LightVariant, MixingField, ModelParams, OpticalParams,
    StateVector, ZooMortalityVariant,
};
use proptest::prelude::*;

fn variant() -> impl Strategy<Value = ModelParams> {
    (0usize..3, 0usize..2, 0usize..3).prop_map(|(g, l, m)| {
        let mut p = default_params();
        p.grazing_variant = [
            GrazingVariant::SquaredMm,
            GrazingVariant::LosaShared,
            GrazingVariant::FashamSwitching,
        ][g];
        p.light_variant = [LightVariant::ExpSaturation, LightVariant::SpitzTanhLike][l];
        p.zmort_variant = [
            ZooMortalityVariant::Linear,
            ZooMortalityVariant::Saturating,
            ZooMortalityVariant::SaturatingFlux,
        ][m];
        p
    })
}

fn conc(lo: f64, hi: f64) -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(lo..=hi)
}

fn f(c: [f64; 4], euphotic: bool, li: f64, params: &ModelParams) -> [f64; 4] {
    eval_reaction(
        &ReactionInput {
            c,
            in_euphotic: euphotic,
            light_limit: li,
            lambda: 0.0,
        },
        params,
    )
    .unwrap()
}

fn state(n: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec(conc(0.0, 10.0), n).prop_map(|cells| {
        let mut s = StateVector::zeros(cells.len(), 0.0);
        for (i, c) in cells.into_iter().enumerate() {
            s.set_cell(i, c);
        }
        s
    })
}

proptest! {
    #[test]
    fn total_nitrogen_is_linear(s in state(12), a in -5.0f64..5.0) {
        let grid = Grid::new(120.0, 12, 40.0).unwrap();
        let mut scaled = s.clone();
        scaled.conc.iter_mut().flatten().for_each(|v| *v *= a);
        let base = total_nitrogen(&s, &grid).unwrap();
        let lhs = total_nitrogen(&scaled, &grid).unwrap();
        prop_assert!((lhs - a * base).abs() <= 1e-12 * (1.0 + base.abs() * a.abs()));
    }

    #[test]
    fn total_nitrogen_ignores_cell_order(s in state(9), shift in 1usize..9) {
        let grid = Grid::new(90.0, 9, 30.0).unwrap();
        let mut rotated = s.clone();
        rotated.conc.iter_mut().for_each(|v| v.rotate_left(shift));
        let a = total_nitrogen(&s, &grid).unwrap();
        let b = total_nitrogen(&rotated, &grid).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn truncation_is_odd_bounded_and_shrinking(g in conc(-1e6, 1e6), n in 1u64..100_000) {
        let t = truncate(g, n);
        let neg = truncate(g.map(|v| -v), n);
        for i in 0..4 {
            prop_assert_eq!(neg[i], -t[i]);
            prop_assert!(t[i].abs() < n as f64);
            prop_assert!(t[i].abs() <= g[i].abs());
            prop_assert!(t[i] * g[i] >= 0.0);
        }
    }

    #[test]
    fn truncation_is_monotone(a in -1e4f64..1e4, b in -1e4f64..1e4, n in 1u64..10_000) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(truncate([lo; 4], n)[0] <= truncate([hi; 4], n)[0]);
    }

    #[test]
    fn truncation_error_decays_like_one_over_n(g in -100.0f64..100.0, n in 1u64..1_000_000) {
        let t = truncate([g; 4], n)[0];
        prop_assert!((g - t).abs() <= g * g / n as f64 * (1.0 + 1e-12));
    }

    #[test]
    fn reaction_components_cancel(params in variant(), c in conc(-10.0, 10.0), li in 0.0f64..=1.0, eu in any::<bool>()) {
        let v = f(c, eu, li, &params);
        prop_assert!(v.iter().sum::<f64>().abs() <= 1e-12);
    }

    #[test]
    fn quasi_positivity(params in variant(), c in conc(0.0, 10.0), zero in 0usize..4, li in 0.0f64..=1.0, eu in any::<bool>()) {
        let mut c = c;
        c[zero] = 0.0;
        prop_assert!(f(c, eu, li, &params)[zero] >= 0.0);
    }

    #[test]
    fn linear_growth_bounds(params in variant(), c in conc(-10.0, 10.0), li in 0.0f64..=1.0, eu in any::<bool>()) {
        let v = f(c, eu, li, &params);
        let rhs = bound_constants(&params, 0.0).bound(c);
        for i in 0..4 {
            prop_assert!(v[i].abs() <= rhs[i] * (1.0 + 1e-14));
        }
    }

    #[test]
    fn lipschitz_functions_are_monotone(params in variant(), a in conc(0.0, 10.0), b in conc(0.0, 10.0), bump in conc(0.0, 5.0)) {
        let optics = OpticalParams { k_par: Some(0.3), ..OpticalParams::default() };
        let ctx = LipschitzContext {
            params: &params,
            optics: &optics,
            response: LightResponse::from_params(&params, &optics).unwrap(),
            q_sup: 1.0,
            column_depth: 200.0,
            lambda: 1.0,
        };
        let k = lipschitz_bound(a, b, &ctx).unwrap();
        let bigger: [f64; 4] = std::array::from_fn(|i| a[i] + bump[i]);
        let k2 = lipschitz_bound(bigger, b, &ctx).unwrap();
        for i in 0..4 {
            prop_assert!(k2[i] >= k[i]);
        }
    }

    #[test]
    fn par_decreases_with_depth_and_pigment(x in 0.0f64..500.0, dx in 0.0f64..100.0, p in 0.0f64..10.0, dp in 0.0f64..10.0) {
        let o = OpticalParams::default();
        prop_assert!(par(x + dx, p, 1.0, &o).unwrap() <= par(x, p, 1.0, &o).unwrap());
        prop_assert!(par(x, p + dp, 1.0, &o).unwrap() <= par(x, p, 1.0, &o).unwrap());
    }

    #[test]
    fn diffusion_conserves_and_contracts(u in prop::collection::vec(-5.0f64..5.0, 2..40), d in 0.1f64..200.0, dt in 0.001f64..5.0) {
        let grid = Grid::new(100.0, u.len(), 50.0).unwrap();
        let out = step_diffusion(&u, &grid, &MixingField::Constant(d), 0.0, dt).unwrap();
        let before: f64 = u.iter().sum();
        let after: f64 = out.iter().sum();
        prop_assert!((before - after).abs() <= 1e-12 * u.iter().map(|v| v.abs()).sum::<f64>().max(1.0));
        let (lo, hi) = u.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
        prop_assert!(out.iter().all(|v| *v >= lo - 1e-12 && *v <= hi + 1e-12));
    }

    #[test]
    fn advection_export_balances_mass(d in prop::collection::vec(0.0f64..5.0, 2..40), v in 0.0f64..20.0, dt in 0.0f64..3.0) {
        let grid = Grid::new(100.0, d.len(), 50.0).unwrap();
        let mut out = d.clone();
        let exported = step_advection(&mut out, &grid, v, dt);
        let dx = grid.cell_width();
        let change = dx * (out.iter().sum::<f64>() - d.iter().sum::<f64>());
        prop_assert!((change + exported).abs() <= 1e-12 * (1.0 + dx * d.iter().sum::<f64>()));
        prop_assert!(out.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn coercivity_lambda_scales_quadratically(d0 in 0.01f64..100.0, v in 0.0f64..20.0, s in 0.1f64..10.0) {
        let a = coercivity_lambda(d0, v).unwrap();
        let b = coercivity_lambda(d0, s * v).unwrap();
        prop_assert!((b - s * s * a).abs() <= 1e-12 * b.max(1e-300));
    }

    #[test]
    fn h1_dominates_l2(s in state(7)) {
        let grid = Grid::new(70.0, 7, 30.0).unwrap();
        let (l2, h1) = discrete_norms(&s, &grid).unwrap();
        prop_assert!(h1 >= l2);
    }
}
