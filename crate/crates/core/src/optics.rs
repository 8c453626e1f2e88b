//! Photosynthetically available radiation and light limitation.
//!
//! The reference optical model attenuates two wavebands (green and red)
//! with absorption coefficients that grow as a power of the chlorophyll
//! concentration derived from `P`:
//!
//! ```text
//! chl = 12 P r_d / (r_pg r_c)
//! PAR = Q(t) [ exp(-(k_go + k_gp chl^l_g) x) + exp(-(k_ro + k_rp chl^l_r) x) ]
//! ```
//!
//! A single-band form `Q exp(-(k1 + k2 P) x)` is also available.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::model::{LightVariant, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpticalModel {
    TwoBand,
    SingleBand,
}

/// How self-shading enters the attenuation exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttenuationMode {
    /// Local concentration times depth.
    Local,
    /// Pigment absorption integrated over the overlying column.
    ColumnIntegrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticalParams {
    /// Redfield C:N ratio.
    pub r_d: f64,
    /// Contribution of chlorophyll to absorbing pigments.
    pub r_pg: f64,
    /// Carbon:chlorophyll ratio (mgC mgChla⁻¹).
    pub r_c: f64,
    /// Water absorption in red (m⁻¹).
    pub k_ro: f64,
    /// Water absorption in green (m⁻¹).
    pub k_go: f64,
    pub k_rp: f64,
    pub k_gp: f64,
    pub l_r: f64,
    pub l_g: f64,
    /// Light saturation constant, same units as PAR. `None` resolves to
    /// `0.3 Q_ref` once the irradiance forcing is known.
    pub k_par: Option<f64>,
    pub model: OpticalModel,
    /// Single-band water attenuation (m⁻¹).
    pub k1: f64,
    /// Single-band pigment attenuation (m⁻¹ (mmol N m⁻³)⁻¹).
    pub k2: f64,
    pub attenuation: AttenuationMode,
}

impl Default for OpticalParams {
    fn default() -> Self {
        OpticalParams {
            r_d: 6.625,
            r_pg: 0.7,
            r_c: 55.0,
            k_ro: 0.225,
            k_go: 0.0232,
            k_rp: 0.037,
            k_gp: 0.074,
            l_r: 0.629,
            l_g: 0.674,
            k_par: None,
            model: OpticalModel::TwoBand,
            k1: 0.04,
            k2: 0.03,
            attenuation: AttenuationMode::Local,
        }
    }
}

/// Fraction of the reference surface irradiance used as default `k_par`.
pub const DEFAULT_K_PAR_FRACTION: f64 = 0.3;

impl OpticalParams {
    pub fn validate(&self) -> Result<()> {
        let mut positive = vec![
            ("r_d", self.r_d),
            ("r_pg", self.r_pg),
            ("r_c", self.r_c),
            ("k_ro", self.k_ro),
            ("k_go", self.k_go),
            ("k_rp", self.k_rp),
            ("k_gp", self.k_gp),
            ("k1", self.k1),
            ("k2", self.k2),
        ];
        if let Some(k) = self.k_par {
            positive.push(("k_par", k));
        }
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(ModelError::param(name, format!("must be strictly positive, got {v}")));
            }
        }
        for (name, v) in [("l_r", self.l_r), ("l_g", self.l_g)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(ModelError::param(name, format!("must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }

    /// `k_par`, or an error if it has not been resolved yet.
    pub fn k_par(&self) -> Result<f64> {
        self.k_par
            .ok_or_else(|| ModelError::param("k_par", "not resolved; set it or derive it from the irradiance forcing"))
    }

    /// Chlorophyll-equivalent pigment concentration of `P`.
    pub fn chlorophyll(&self, p: f64) -> f64 {
        12.0 * p * self.r_d / (self.r_pg * self.r_c)
    }

    fn chl_factor(&self) -> f64 {
        12.0 * self.r_d / (self.r_pg * self.r_c)
    }

    /// Green and red attenuation coefficients at pigment concentration `P`.
    fn band_coefficients(&self, p: f64) -> (f64, f64) {
        let chl = self.chlorophyll(p);
        (
            self.k_go + self.k_gp * chl.powf(self.l_g),
            self.k_ro + self.k_rp * chl.powf(self.l_r),
        )
    }
}

/// PAR at depth `x` with local self-shading by phytoplankton `P`.
pub fn par(x: f64, p: f64, q: f64, optics: &OpticalParams) -> Result<f64> {
    if !(p >= 0.0) {
        return Err(ModelError::OutOfRange {
            what: "P".into(),
            value: p,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(ModelError::OutOfRange {
            what: "depth".into(),
            value: x,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    if !(q >= 0.0) {
        return Err(ModelError::OutOfRange {
            what: "Q".into(),
            value: q,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    Ok(par_unchecked(x, p, q, optics))
}

pub(crate) fn par_unchecked(x: f64, p: f64, q: f64, optics: &OpticalParams) -> f64 {
    match optics.model {
        OpticalModel::TwoBand => {
            let (kg, kr) = optics.band_coefficients(p);
            q * ((-kg * x).exp() + (-kr * x).exp())
        }
        OpticalModel::SingleBand => q * (-(optics.k1 + optics.k2 * p) * x).exp(),
    }
}

/// PAR at every cell center. Negative `P` is treated as zero pigment.
///
/// With [`AttenuationMode::ColumnIntegrated`] the pigment term uses the
/// integral of the absorption coefficient over `[0, x]` instead of the local
/// value times `x`.
pub fn par_profile(centers: &[f64], cell_width: f64, p: &[f64], q: f64, optics: &OpticalParams) -> Vec<f64> {
    match optics.attenuation {
        AttenuationMode::Local => centers
            .iter()
            .zip(p)
            .map(|(&x, &pi)| par_unchecked(x, pi.max(0.0), q, optics))
            .collect(),
        AttenuationMode::ColumnIntegrated => {
            let mut out = Vec::with_capacity(p.len());
            // Optical depth accumulated down to the top of the current cell.
            let (mut tau_g, mut tau_r, mut tau_1) = (0.0, 0.0, 0.0);
            for (&x, &pi) in centers.iter().zip(p) {
                let pi = pi.max(0.0);
                let half = 0.5 * cell_width;
                let top = x - half;
                let value = match optics.model {
                    OpticalModel::TwoBand => {
                        let chl = optics.chlorophyll(pi);
                        let ag = optics.k_gp * chl.powf(optics.l_g);
                        let ar = optics.k_rp * chl.powf(optics.l_r);
                        let v = q
                            * ((-(optics.k_go * x + tau_g + ag * (x - top))).exp()
                                + (-(optics.k_ro * x + tau_r + ar * (x - top))).exp());
                        tau_g += ag * cell_width;
                        tau_r += ar * cell_width;
                        v
                    }
                    OpticalModel::SingleBand => {
                        let a = optics.k2 * pi;
                        let v = q * (-(optics.k1 * x + tau_1 + a * (x - top))).exp();
                        tau_1 += a * cell_width;
                        v
                    }
                };
                out.push(value);
            }
            out
        }
    }
}

/// Light-limitation response resolved from the model and optical settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LightResponse {
    ExpSaturation { k_par: f64 },
    SpitzTanhLike { v_p: f64, alpha: f64 },
}

impl LightResponse {
    pub fn from_params(params: &ModelParams, optics: &OpticalParams) -> Result<Self> {
        Ok(match params.light_variant {
            LightVariant::ExpSaturation => LightResponse::ExpSaturation { k_par: optics.k_par()? },
            LightVariant::SpitzTanhLike => LightResponse::SpitzTanhLike {
                v_p: params.v_p,
                alpha: params.alpha,
            },
        })
    }

    /// Supremum of `dL_I/dPAR` over `PAR ≥ 0`.
    pub fn max_slope(&self) -> f64 {
        match *self {
            LightResponse::ExpSaturation { k_par } => 1.0 / k_par,
            LightResponse::SpitzTanhLike { v_p, alpha } => alpha / v_p,
        }
    }
}

/// Light limitation factor in `[0, 1]`.
pub fn light_limit(par_value: f64, response: &LightResponse) -> f64 {
    let par_value = par_value.max(0.0);
    match *response {
        LightResponse::ExpSaturation { k_par } => 1.0 - (-par_value / k_par).exp(),
        LightResponse::SpitzTanhLike { v_p, alpha } => {
            if par_value.is_infinite() {
                return 1.0;
            }
            let ap = alpha * par_value;
            (ap / v_p.hypot(ap)).clamp(0.0, 1.0)
        }
    }
}

/// Local Lipschitz function `K_I(P, P̂)` of `P ↦ P L_I(t, x, P)` on `[0, ∞)`,
/// valid for every `(t, x) ∈ [0, T] × [0, L]`.
///
/// Bounds `d/dP (P L_I)` by `1 + S ‖Q‖_∞ L · (pigment-absorption growth at
/// max(P, P̂))`, where `S` is the maximal slope of the light response.
pub fn lipschitz_k_i(
    p: f64,
    p_hat: f64,
    q_sup: f64,
    optics: &OpticalParams,
    response: &LightResponse,
    column_depth: f64,
) -> Result<f64> {
    if !(p >= 0.0 && p_hat >= 0.0) {
        return Err(ModelError::OutOfRange {
            what: "P".into(),
            value: p.min(p_hat),
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    let pm = p.max(p_hat);
    let scale = response.max_slope() * q_sup * column_depth;
    let growth = match optics.model {
        OpticalModel::TwoBand => {
            let c = optics.chl_factor();
            optics.k_gp * optics.l_g * c.powf(optics.l_g) * pm.powf(optics.l_g)
                + optics.k_rp * optics.l_r * c.powf(optics.l_r) * pm.powf(optics.l_r)
        }
        OpticalModel::SingleBand => optics.k2 * pm,
    };
    Ok(1.0 + scale * growth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optics() -> OpticalParams {
        OpticalParams {
            k_par: Some(0.3),
            ..OpticalParams::default()
        }
    }

    #[test]
    fn surface_value_is_twice_q() {
        let o = optics();
        for p in [0.0, 0.3, 5.0] {
            assert!((par(0.0, p, 0.7, &o).unwrap() - 1.4).abs() < 1e-14);
        }
    }

    #[test]
    fn clear_water_at_ten_meters() {
        let v = par(10.0, 0.0, 1.0, &optics()).unwrap();
        assert!((v - ((-0.232_f64).exp() + (-2.25_f64).exp())).abs() < 1e-14);
        assert!((v - 0.898345).abs() < 1e-6);
    }

    #[test]
    fn dense_bloom_is_dark() {
        let v = par(10.0, 1e12, 1.0, &optics()).unwrap();
        assert!(v < 1e-30);
    }

    #[test]
    fn rejects_negative_inputs() {
        assert!(par(1.0, -0.1, 1.0, &optics()).is_err());
        assert!(par(-1.0, 0.1, 1.0, &optics()).is_err());
    }

    #[test]
    fn light_limit_values() {
        let exp = LightResponse::ExpSaturation { k_par: 0.3 };
        assert_eq!(light_limit(0.0, &exp), 0.0);
        assert!((light_limit(0.3, &exp) - (1.0 - (-1.0_f64).exp())).abs() < 1e-15);
        assert!((light_limit(0.3, &exp) - 0.63212).abs() < 1e-5);
        assert_eq!(light_limit(f64::INFINITY, &exp), 1.0);

        let spitz = LightResponse::SpitzTanhLike { v_p: 2.0, alpha: 6.0 };
        assert_eq!(light_limit(0.0, &spitz), 0.0);
        assert!((light_limit(1e12, &spitz) - 1.0).abs() < 1e-12);
        assert_eq!(light_limit(f64::INFINITY, &spitz), 1.0);
    }

    #[test]
    fn k_i_examples() {
        let o = optics();
        let r = LightResponse::ExpSaturation { k_par: 0.3 };
        assert_eq!(lipschitz_k_i(0.0, 0.0, 1.0, &o, &r, 1000.0).unwrap(), 1.0);
        assert_eq!(
            lipschitz_k_i(1.0, 2.0, 1.0, &o, &r, 1000.0).unwrap(),
            lipschitz_k_i(2.0, 1.0, 1.0, &o, &r, 1000.0).unwrap()
        );
        assert!(lipschitz_k_i(-1.0, 2.0, 1.0, &o, &r, 1000.0).is_err());
    }

    #[test]
    fn integrated_matches_local_for_uniform_p_at_centers() {
        // Uniform P: the integrated optical depth equals the local one.
        let mut o = optics();
        let centers: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) * 2.0).collect();
        let p = vec![0.4; 10];
        let local = par_profile(&centers, 2.0, &p, 1.0, &o);
        o.attenuation = AttenuationMode::ColumnIntegrated;
        let integrated = par_profile(&centers, 2.0, &p, 1.0, &o);
        for (a, b) in local.iter().zip(&integrated) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
