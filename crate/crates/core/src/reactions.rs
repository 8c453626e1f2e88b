//! Biological source terms.
//!
//! Above the euphotic depth:
//!
//! ```text
//! f_N = -μ_p(1-γ) L_I L_N P + μ_z Z + μ_d D
//! f_P =  μ_p(1-γ) L_I L_N P - G_P Z - m_p P
//! f_Z =  a_p G_P Z + a_d G_D Z - M(Z) - μ_z Z
//! f_D = (1-a_p) G_P Z - a_d G_D Z + m_p P + M(Z) - μ_d D
//! ```
//!
//! and below it `(τ(P+Z+D), -τP, -τZ, -τD)`. `M(Z)` is the zooplankton
//! mortality loss. The shifted source is `g = f + λC`; its truncation
//! `g_n = g / (1 + |g|/n)` is applied componentwise.
//!
//! All nonlinearities use `|·|` where a denominator could otherwise vanish,
//! so `f` is defined on all of ℝ⁴.

use crate::error::{ModelError, Result};
use crate::model::{GrazingVariant, ModelParams, ZooMortalityVariant};
use crate::optics::{lipschitz_k_i, LightResponse, OpticalParams};

/// `N / (k_n + |N|)`.
pub fn limit_nutrient(n: f64, k_n: f64) -> f64 {
    n / (k_n + n.abs())
}

/// Grazing rates `(G_P, G_D)`, each in `[0, g_z]`.
pub fn graze(p: f64, d: f64, params: &ModelParams) -> (f64, f64) {
    let g = params.g_z;
    let k = params.k_z;
    let (p2, d2) = (p * p, d * d);
    match params.grazing_variant {
        GrazingVariant::SquaredMm => (g * p2 / (k + p2), g * d2 / (k + d2)),
        GrazingVariant::LosaShared => {
            let den = k + p2 + d2;
            (g * p2 / den, g * d2 / den)
        }
        GrazingVariant::FashamSwitching => {
            let r = params.r_preference;
            let den = k * (r * p.abs() + (1.0 - r) * d.abs()) + r * p2 + (1.0 - r) * d2;
            if den <= 0.0 {
                // Only at P = D = 0; continuous extension along nonnegative rays.
                (0.0, 0.0)
            } else {
                (g * r * p2 / den, g * (1.0 - r) * d2 / den)
            }
        }
    }
}

/// Zooplankton mortality loss flux (mmol N m⁻³ day⁻¹).
pub fn zoo_mortality(z: f64, params: &ModelParams) -> f64 {
    let k = params.k_zmort;
    match params.zmort_variant {
        ZooMortalityVariant::Linear => params.m_z * z,
        ZooMortalityVariant::Saturating => params.m_z * z * z.abs() / (k + z.abs()),
        ZooMortalityVariant::SaturatingFlux => params.m_z * z / (k + z.abs()),
    }
}

/// Coefficient `c` such that `|M(Z)| ≤ c |Z|`; also the Lipschitz constant
/// of `M` on `[0, ∞)`.
pub fn mortality_coefficient(params: &ModelParams) -> f64 {
    match params.zmort_variant {
        ZooMortalityVariant::Linear | ZooMortalityVariant::Saturating => params.m_z,
        ZooMortalityVariant::SaturatingFlux => params.m_z / params.k_zmort,
    }
}

/// Pointwise input to the reaction vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactionInput {
    /// `(N, P, Z, D)`.
    pub c: [f64; 4],
    pub in_euphotic: bool,
    /// Light limitation `L_I ∈ [0, 1]`.
    pub light_limit: f64,
    /// Shift `λ ≥ 0`; zero gives the unshifted `f`.
    pub lambda: f64,
}

/// Evaluates `g = f + λC` at one point.
pub fn eval_reaction(input: &ReactionInput, params: &ModelParams) -> Result<[f64; 4]> {
    if input.c.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite("reaction input".into()));
    }
    if !(0.0..=1.0).contains(&input.light_limit) {
        return Err(ModelError::OutOfRange {
            what: "L_I".into(),
            value: input.light_limit,
            min: 0.0,
            max: 1.0,
        });
    }
    if !(input.lambda >= 0.0) {
        return Err(ModelError::param("lambda", format!("must be nonnegative, got {}", input.lambda)));
    }
    Ok(shifted_source(input.c, input.in_euphotic, input.light_limit, input.lambda, params))
}

/// Unchecked `f(C)`.
#[inline]
pub(crate) fn source(c: [f64; 4], in_euphotic: bool, light_limit: f64, params: &ModelParams) -> [f64; 4] {
    let [n, p, z, d] = c;
    if in_euphotic {
        let production = params.mu_p * (1.0 - params.gamma) * light_limit * limit_nutrient(n, params.k_n) * p;
        let (gp, gd) = graze(p, d, params);
        let grazing_p = gp * z;
        let grazing_d = gd * z;
        let mortality = zoo_mortality(z, params);
        [
            -production + params.mu_z * z + params.mu_d * d,
            production - grazing_p - params.m_p * p,
            params.a_p * grazing_p + params.a_d * grazing_d - mortality - params.mu_z * z,
            (1.0 - params.a_p) * grazing_p - params.a_d * grazing_d + params.m_p * p + mortality
                - params.mu_d * d,
        ]
    } else {
        let tau = params.tau;
        [tau * (p + z + d), -tau * p, -tau * z, -tau * d]
    }
}

#[inline]
pub(crate) fn shifted_source(
    c: [f64; 4],
    in_euphotic: bool,
    light_limit: f64,
    lambda: f64,
    params: &ModelParams,
) -> [f64; 4] {
    let f = source(c, in_euphotic, light_limit, params);
    if lambda == 0.0 {
        f
    } else {
        std::array::from_fn(|i| f[i] + lambda * c[i])
    }
}

/// Componentwise `g_i / (1 + |g_i| / n)`.
pub fn truncate(g: [f64; 4], n: u64) -> [f64; 4] {
    assert!(n >= 1, "truncation level must be a positive integer");
    let n = n as f64;
    g.map(|gi| gi / (1.0 + gi.abs() / n))
}

/// Linear growth bounds `|f_i(C)| ≤ Σ_j A_ij |C_j|` valid in both branches,
/// plus the growth constant of the shifted source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    /// Rows: `f_N, f_P, f_Z, f_D`; columns: `|N|, |P|, |Z|, |D|`.
    pub coeffs: [[f64; 4]; 4],
    pub lambda: f64,
    /// `max(max row sum, max column sum) + λ`. Bounds the operator 1-, 2-
    /// and ∞-norms of `C ↦ g(C)`.
    pub m_g: f64,
}

impl BoundConstants {
    /// Right-hand side of the growth inequalities at `C`.
    pub fn bound(&self, c: [f64; 4]) -> [f64; 4] {
        std::array::from_fn(|i| (0..4).map(|j| self.coeffs[i][j] * c[j].abs()).sum())
    }

    pub fn max_row_sum(&self) -> f64 {
        self.coeffs.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_col_sum(&self) -> f64 {
        (0..4).map(|j| self.coeffs.iter().map(|r| r[j]).sum::<f64>()).fold(0.0, f64::max)
    }
}

pub fn bound_constants(params: &ModelParams, lambda: f64) -> BoundConstants {
    let ModelParams {
        g_z,
        a_p,
        a_d,
        mu_z,
        m_p,
        mu_d,
        mu_p,
        gamma,
        tau,
        ..
    } = *params;
    let prod = mu_p * (1.0 - gamma);
    let mz = mortality_coefficient(params);
    let coeffs = [
        [0.0, prod + tau, mu_z + tau, mu_d + tau],
        [0.0, prod + m_p + tau, g_z, 0.0],
        [0.0, 0.0, (a_p + a_d) * g_z + mz + mu_z + tau, 0.0],
        [0.0, m_p, ((1.0 - a_p) + a_d) * g_z + mz, mu_d + tau],
    ];
    let mut b = BoundConstants {
        coeffs,
        lambda,
        m_g: 0.0,
    };
    b.m_g = b.max_row_sum().max(b.max_col_sum()) + lambda;
    b
}

/// Global bounds on the partial derivatives of `(G_P, G_D)` over the
/// nonnegative quadrant: `[[∂G_P/∂P, ∂G_P/∂D], [∂G_D/∂P, ∂G_D/∂D]]`.
pub fn grazing_lipschitz(params: &ModelParams) -> [[f64; 2]; 2] {
    let g = params.g_z;
    let k = params.k_z;
    // sup_x d/dx x²/(k+x²) = 3√3 / (8√k)
    let squared = 3.0 * 3f64.sqrt() / (8.0 * k.sqrt()) * g;
    match params.grazing_variant {
        GrazingVariant::SquaredMm => [[squared, 0.0], [0.0, squared]],
        GrazingVariant::LosaShared => {
            let cross = g / (4.0 * k.sqrt());
            [[squared, cross], [cross, squared]]
        }
        GrazingVariant::FashamSwitching => {
            let r = params.r_preference;
            let s = 1.0 - r;
            let own = 3.5 * g / k;
            [
                [own, g * (s / r + (s / r).sqrt()) / k],
                [g * (r / s + (r / s).sqrt()) / k, own],
            ]
        }
    }
}

/// Everything needed to evaluate the local Lipschitz functions of `g`.
#[derive(Debug, Clone, Copy)]
pub struct LipschitzContext<'a> {
    pub params: &'a ModelParams,
    pub optics: &'a OpticalParams,
    pub response: LightResponse,
    /// `‖Q‖_∞`.
    pub q_sup: f64,
    pub column_depth: f64,
    pub lambda: f64,
}

impl LipschitzContext<'_> {
    /// Constant `L` with `‖g(C) - g(Ĉ)‖₂ ≤ L ‖C - Ĉ‖₂` pointwise whenever the
    /// components of both states are bounded by `sup` (per species).
    pub fn l_infinity(&self, sup: [f64; 4]) -> Result<f64> {
        let k = lipschitz_bound(sup, sup, self)?;
        // Σ_j |ΔC_j| ≤ 2 |ΔC|₂ in ℝ⁴.
        Ok(2.0 * k.iter().map(|v| v * v).sum::<f64>().sqrt())
    }
}

/// Local Lipschitz functions `(K_N, K_P, K_Z, K_D)` such that for
/// nonnegative `C, Ĉ`:
///
/// `|g_i(C) - g_i(Ĉ)| ≤ K_i · Σ_j |C_j - Ĉ_j|`.
///
/// `K_N` depends on `max(P, P̂)` only. The grazing flux `G_P Z` makes the
/// phytoplankton row depend on `max(Z, Ẑ)` as well; `K_Z` and `K_D` depend on
/// `max(Z, Ẑ)`. All are nondecreasing in each argument.
pub fn lipschitz_bound(c: [f64; 4], c_hat: [f64; 4], ctx: &LipschitzContext<'_>) -> Result<[f64; 4]> {
    if c.iter().chain(&c_hat).any(|v| !(*v >= 0.0)) {
        return Err(ModelError::OutOfRange {
            what: "concentration".into(),
            value: c.iter().chain(&c_hat).copied().fold(f64::INFINITY, f64::min),
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    let p = ctx.params;
    let pm = c[1].max(c_hat[1]);
    let zm = c[2].max(c_hat[2]);
    let prod = p.mu_p * (1.0 - p.gamma);
    let lambda = ctx.lambda;
    let tau = p.tau;
    let k_i = lipschitz_k_i(c[1], c_hat[1], ctx.q_sup, ctx.optics, &ctx.response, ctx.column_depth)?;
    let [[gpp, gpd], [gdp, gdd]] = grazing_lipschitz(p);
    let mz = mortality_coefficient(p);

    let k_n = max4(lambda + prod * pm / p.k_n, tau + prod * k_i, p.mu_z + tau, p.mu_d + tau);
    let k_p = max4(
        prod * pm / p.k_n,
        lambda + tau + p.m_p + prod * k_i + zm * gpp,
        p.g_z,
        zm * gpd,
    );
    let k_z = max4(
        0.0,
        zm * (p.a_p * gpp + p.a_d * gdp),
        lambda + tau + (p.a_p + p.a_d) * p.g_z + mz + p.mu_z,
        zm * (p.a_p * gpd + p.a_d * gdd),
    );
    let k_d = max4(
        0.0,
        p.m_p + zm * ((1.0 - p.a_p) * gpp + p.a_d * gdp),
        ((1.0 - p.a_p) + p.a_d) * p.g_z + mz,
        lambda + tau + p.mu_d + zm * ((1.0 - p.a_p) * gpd + p.a_d * gdd),
    );
    Ok([k_n, k_p, k_z, k_d])
}

fn max4(a: f64, b: f64, c: f64, d: f64) -> f64 {
    a.max(b).max(c).max(d)
}
