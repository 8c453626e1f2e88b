//! Shared domain types: biological parameters, the depth grid, state vectors
//! and trajectories.
//!
//! Units are fixed throughout the crate: meters, days and mmol N m⁻³. Rates
//! are stored in day⁻¹ and no kernel performs unit conversion.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Zooplankton grazing response on phytoplankton and detritus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrazingVariant {
    /// `g_z P² / (k_z + P²)` and `g_z D² / (k_z + D²)`.
    SquaredMm,
    /// Shared denominator `k_z + P² + D²`.
    LosaShared,
    /// Preference-weighted switching with preference `r` for phytoplankton.
    FashamSwitching,
}

/// Light limitation of phytoplankton growth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightVariant {
    /// `1 - exp(-PAR / k_par)`.
    ExpSaturation,
    /// `α PAR / sqrt(v_p² + α² PAR²)`, the Spitz growth form normalized by `v_p`.
    SpitzTanhLike,
}

/// Zooplankton mortality loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZooMortalityVariant {
    /// `m_z Z`.
    Linear,
    /// Saturating rate `m_z |Z| / (k + |Z|)` applied to `Z`.
    Saturating,
    /// Saturating expression read literally as the loss flux `m_z Z / (k + |Z|)`.
    SaturatingFlux,
}

/// Biological constants of the reaction terms plus variant selectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Nutrient half-saturation (mmol N m⁻³).
    pub k_n: f64,
    /// Maximal grazing rate (day⁻¹).
    pub g_z: f64,
    /// Grazing half-saturation, entering as `k_z + P²`.
    pub k_z: f64,
    /// Assimilated fraction of phytoplankton.
    pub a_p: f64,
    /// Assimilated fraction of detritus.
    pub a_d: f64,
    /// Zooplankton excretion rate (day⁻¹).
    pub mu_z: f64,
    /// Phytoplankton mortality rate (day⁻¹).
    pub m_p: f64,
    /// Zooplankton mortality rate (day⁻¹).
    pub m_z: f64,
    /// Detritus remineralization rate (day⁻¹).
    pub mu_d: f64,
    /// Detritus sinking speed (m day⁻¹).
    pub v_d: f64,
    /// Maximal phytoplankton growth rate (day⁻¹).
    pub mu_p: f64,
    /// Exudation fraction.
    pub gamma: f64,
    /// Aphotic remineralization rate (day⁻¹).
    pub tau: f64,
    /// Maximum depth of the euphotic layer (m).
    pub l_euphotic: f64,
    pub grazing_variant: GrazingVariant,
    pub light_variant: LightVariant,
    pub zmort_variant: ZooMortalityVariant,
    /// Preference for phytoplankton in the switching response, in (0, 1).
    pub r_preference: f64,
    /// Half-saturation of saturating zooplankton mortality (mmol N m⁻³).
    pub k_zmort: f64,
    /// Maximal growth rate of the Spitz light response (day⁻¹).
    pub v_p: f64,
    /// Initial slope of the Spitz light response (per unit PAR, day⁻¹).
    pub alpha: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        default_params()
    }
}

/// Reference parameter set: squared Michaelis–Menten grazing, exponential
/// light saturation and linear zooplankton mortality.
pub fn default_params() -> ModelParams {
    ModelParams {
        k_n: 0.5,
        g_z: 0.75,
        k_z: 1.0,
        a_p: 0.7,
        a_d: 0.5,
        mu_z: 0.1,
        m_p: 0.03,
        m_z: 0.03,
        mu_d: 0.09,
        v_d: 5.0,
        mu_p: 2.0,
        gamma: 0.05,
        tau: 0.05,
        l_euphotic: 200.0,
        grazing_variant: GrazingVariant::SquaredMm,
        light_variant: LightVariant::ExpSaturation,
        zmort_variant: ZooMortalityVariant::Linear,
        // Selector-specific constants; not used by the reference variants.
        r_preference: 0.5,
        k_zmort: 1.0,
        v_p: 2.0,
        alpha: 6.0,
    }
}

impl ModelParams {
    /// Checks positivity of every constant and that `γ`, `a_p`, `a_d` (and
    /// `r` for the switching response) lie strictly inside (0, 1).
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k_n", self.k_n),
            ("g_z", self.g_z),
            ("k_z", self.k_z),
            ("mu_z", self.mu_z),
            ("m_p", self.m_p),
            ("m_z", self.m_z),
            ("mu_d", self.mu_d),
            ("v_d", self.v_d),
            ("mu_p", self.mu_p),
            ("tau", self.tau),
            ("l_euphotic", self.l_euphotic),
            ("k_zmort", self.k_zmort),
            ("v_p", self.v_p),
            ("alpha", self.alpha),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(ModelError::param(name, format!("must be strictly positive, got {value}")));
            }
        }
        let fractions = [
            ("gamma", self.gamma),
            ("a_p", self.a_p),
            ("a_d", self.a_d),
            ("r_preference", self.r_preference),
        ];
        for (name, value) in fractions {
            if !(value > 0.0 && value < 1.0) {
                return Err(ModelError::param(name, format!("must lie in (0, 1), got {value}")));
            }
        }
        Ok(())
    }
}

/// The four tracers, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    Nutrient = 0,
    Phytoplankton = 1,
    Zooplankton = 2,
    Detritus = 3,
}

impl Species {
    pub const ALL: [Species; 4] = [
        Species::Nutrient,
        Species::Phytoplankton,
        Species::Zooplankton,
        Species::Detritus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Species::Nutrient => "N",
            Species::Phytoplankton => "P",
            Species::Zooplankton => "Z",
            Species::Detritus => "D",
        }
    }
}

/// Uniform cell-centered grid on `[0, L]`, `x` positive downward.
///
/// The euphotic depth is snapped to the nearest interior cell interface so
/// that every cell lies entirely on one side of it.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    depth: f64,
    n_cells: usize,
    cell_width: f64,
    centers: Vec<f64>,
    euphotic_cells: usize,
    snap_distance: f64,
}

impl Grid {
    pub fn new(depth: f64, n_cells: usize, l_euphotic: f64) -> Result<Self> {
        if !depth.is_finite() || depth <= 0.0 {
            return Err(ModelError::param("depth", format!("must be positive, got {depth}")));
        }
        if n_cells < 2 {
            return Err(ModelError::param("n_cells", format!("need at least 2 cells, got {n_cells}")));
        }
        if !(l_euphotic > 0.0 && l_euphotic < depth) {
            return Err(ModelError::param(
                "l_euphotic",
                format!("must lie in (0, {depth}), got {l_euphotic}"),
            ));
        }
        let cell_width = depth / n_cells as f64;
        let centers = (0..n_cells).map(|i| (i as f64 + 0.5) * cell_width).collect();
        let euphotic_cells = ((l_euphotic / cell_width).round() as usize).clamp(1, n_cells - 1);
        let snap_distance = euphotic_cells as f64 * cell_width - l_euphotic;
        Ok(Grid {
            depth,
            n_cells,
            cell_width,
            centers,
            euphotic_cells,
            snap_distance,
        })
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Number of cells above the euphotic interface.
    pub fn euphotic_cells(&self) -> usize {
        self.euphotic_cells
    }

    /// Depth of the flagged euphotic interface after snapping.
    pub fn euphotic_depth(&self) -> f64 {
        self.euphotic_cells as f64 * self.cell_width
    }

    /// Signed distance moved by snapping (snapped minus requested).
    pub fn snap_distance(&self) -> f64 {
        self.snap_distance
    }

    pub fn is_euphotic(&self, cell: usize) -> bool {
        cell < self.euphotic_cells
    }
}

/// Concentrations of the four tracers over the grid at time `t` (day).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub t: f64,
    pub conc: [Vec<f64>; 4],
}

impl StateVector {
    pub fn zeros(n_cells: usize, t: f64) -> Self {
        StateVector {
            t,
            conc: std::array::from_fn(|_| vec![0.0; n_cells]),
        }
    }

    pub fn from_arrays(t: f64, n: Vec<f64>, p: Vec<f64>, z: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        let state = StateVector {
            t,
            conc: [n, p, z, d],
        };
        state.check(state.conc[0].len())?;
        Ok(state)
    }

    pub fn n_cells(&self) -> usize {
        self.conc[0].len()
    }

    pub fn species(&self, s: Species) -> &[f64] {
        &self.conc[s.index()]
    }

    pub fn species_mut(&mut self, s: Species) -> &mut [f64] {
        &mut self.conc[s.index()]
    }

    /// Concentration vector `(N, P, Z, D)` in one cell.
    pub fn cell(&self, i: usize) -> [f64; 4] {
        [self.conc[0][i], self.conc[1][i], self.conc[2][i], self.conc[3][i]]
    }

    pub fn set_cell(&mut self, i: usize, c: [f64; 4]) {
        for (arr, v) in self.conc.iter_mut().zip(c) {
            arr[i] = v;
        }
    }

    /// Verifies array lengths against `n_cells` and finiteness.
    pub fn check(&self, n_cells: usize) -> Result<()> {
        for (s, arr) in Species::ALL.iter().zip(&self.conc) {
            if arr.len() != n_cells {
                return Err(ModelError::LengthMismatch {
                    expected: n_cells,
                    got: arr.len(),
                });
            }
            if arr.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFinite(format!("species {}", s.symbol())));
            }
        }
        Ok(())
    }

    pub fn min_value(&self) -> f64 {
        self.conc.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.conc.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Per-species maximum of `|C_i|` over the grid.
    pub fn sup_norms(&self) -> [f64; 4] {
        std::array::from_fn(|k| self.conc[k].iter().fold(0.0_f64, |m, v| m.max(v.abs())))
    }
}

/// Total nitrogen inventory of the column, mmol N m⁻².
pub fn total_nitrogen(state: &StateVector, grid: &Grid) -> Result<f64> {
    for arr in &state.conc {
        if arr.len() != grid.n_cells() {
            return Err(ModelError::LengthMismatch {
                expected: grid.n_cells(),
                got: arr.len(),
            });
        }
    }
    let sum: f64 = (0..grid.n_cells())
        .map(|i| state.conc.iter().map(|arr| arr[i]).sum::<f64>())
        .sum();
    Ok(grid.cell_width() * sum)
}

/// Per-step bookkeeping recorded by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    /// Column inventory after the step (mmol N m⁻²).
    pub total_n: f64,
    pub l2: f64,
    pub h1: f64,
    pub min_conc: f64,
    /// Detritus exported through the bottom during this step (mmol N m⁻²).
    pub bottom_export: f64,
    /// Per-species sup-norms after the step.
    pub sup: [f64; 4],
    /// Largest `|g_i|` evaluated during the step.
    pub max_abs_source: f64,
}

/// Statistics of one Picard time slab.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabStats {
    pub t: f64,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    /// Discrete analogue of the Θ contraction bound on this slab.
    pub contraction_bound: f64,
}

/// Time-ordered snapshots plus per-step diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<StateVector>,
    /// Diagnostics of the initial state followed by one entry per step.
    pub diagnostics: Vec<Diagnostics>,
    pub slabs: Vec<SlabStats>,
}

impl Trajectory {
    pub fn initial(&self) -> Option<&StateVector> {
        self.snapshots.first()
    }

    pub fn last(&self) -> Option<&StateVector> {
        self.snapshots.last()
    }

    /// Cumulative detritus export over the run.
    pub fn total_export(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.bottom_export).sum()
    }

    pub fn max_abs_source(&self) -> f64 {
        self.diagnostics.iter().fold(0.0, |m, d| m.max(d.max_abs_source))
    }

    pub(crate) fn push_snapshot(&mut self, state: StateVector) {
        debug_assert!(self.snapshots.last().is_none_or(|s| s.t < state.t));
        self.snapshots.push(state);
    }
}
