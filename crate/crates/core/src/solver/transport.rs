//! Vertical transport: implicit Neumann diffusion and upwind sinking.

use crate::error::{ModelError, Result};
use crate::forcing::MixingField;
use crate::model::Grid;

use super::tridiag::solve_tridiagonal;

/// Face conductances `d_face / Δx²` of the interior faces at one time.
///
/// The face diffusivity is the harmonic mean of the two adjacent
/// cell-center values; boundary faces carry no flux.
#[derive(Debug, Clone)]
pub struct DiffusionOperator {
    /// `conductance[i]` couples cells `i` and `i + 1`.
    conductance: Vec<f64>,
}

impl DiffusionOperator {
    pub fn assemble(grid: &Grid, mixing: &MixingField, t: f64) -> Result<Self> {
        let d: Vec<f64> = grid
            .centers()
            .iter()
            .map(|&x| mixing.mixing_at(t, x))
            .collect::<Result<_>>()?;
        if let Some(bad) = d.iter().find(|v| !(**v > 0.0)) {
            return Err(ModelError::param("mixing", format!("coefficient must be positive, got {bad}")));
        }
        let inv_dx2 = 1.0 / (grid.cell_width() * grid.cell_width());
        let conductance = d
            .windows(2)
            .map(|w| 2.0 * w[0] * w[1] / (w[0] + w[1]) * inv_dx2)
            .collect();
        Ok(DiffusionOperator { conductance })
    }

    /// Tridiagonal rows of `shift·I - dt·A` (diffusion only).
    pub(crate) fn implicit_rows(&self, dt: f64, shift: f64, sub: &mut Vec<f64>, diag: &mut Vec<f64>, sup: &mut Vec<f64>) {
        let n = self.conductance.len() + 1;
        sub.clear();
        diag.clear();
        sup.clear();
        for i in 0..n {
            let left = if i > 0 { self.conductance[i - 1] } else { 0.0 };
            let right = if i + 1 < n { self.conductance[i] } else { 0.0 };
            sub.push(-dt * left);
            sup.push(-dt * right);
            diag.push(shift + dt * (left + right));
        }
    }
}

/// Backward-Euler diffusion of one tracer: solves `(I - dt A) u_new = u_old`
/// with `A` evaluated from `d(t, ·)`.
pub fn step_diffusion(u: &[f64], grid: &Grid, mixing: &MixingField, t: f64, dt: f64) -> Result<Vec<f64>> {
    if u.len() != grid.n_cells() {
        return Err(ModelError::LengthMismatch {
            expected: grid.n_cells(),
            got: u.len(),
        });
    }
    if !(dt > 0.0) {
        return Err(ModelError::param("dt", format!("must be positive, got {dt}")));
    }
    let op = DiffusionOperator::assemble(grid, mixing, t)?;
    let mut out = u.to_vec();
    let mut work = Workspace::default();
    work.diffuse(&op, dt, &mut out);
    Ok(out)
}

#[derive(Debug, Default)]
pub(crate) struct Workspace {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    scratch: Vec<f64>,
}

impl Workspace {
    pub(crate) fn diffuse(&mut self, op: &DiffusionOperator, dt: f64, u: &mut [f64]) {
        op.implicit_rows(dt, 1.0, &mut self.sub, &mut self.diag, &mut self.sup);
        solve_tridiagonal(&self.sub, &self.diag, &self.sup, u, &mut self.scratch);
    }

    /// Solves `((1 + λ dt) I - dt A - dt A_sink) u = rhs` in place, where
    /// `A_sink` is the implicit upwind sinking operator when `sinking` is set.
    pub(crate) fn implicit_solve(
        &mut self,
        op: &DiffusionOperator,
        dt: f64,
        lambda: f64,
        sinking: Option<(f64, f64)>,
        rhs: &mut [f64],
    ) {
        op.implicit_rows(dt, 1.0 + lambda * dt, &mut self.sub, &mut self.diag, &mut self.sup);
        if let Some((v, dx)) = sinking {
            let c = dt * v / dx;
            for i in 0..self.diag.len() {
                self.diag[i] += c;
                if i > 0 {
                    self.sub[i] -= c;
                }
            }
        }
        solve_tridiagonal(&self.sub, &self.diag, &self.sup, rhs, &mut self.scratch);
    }
}

/// First-order upwind sinking of detritus over `dt`, sub-cycled so that the
/// Courant number never exceeds one.
///
/// Nothing enters through the surface; the bottom cell exports `v_d D` and
/// the exported amount (mmol N m⁻²) is returned.
pub fn step_advection(d: &mut [f64], grid: &Grid, v_d: f64, dt: f64) -> f64 {
    let dx = grid.cell_width();
    if v_d == 0.0 || dt == 0.0 {
        return 0.0;
    }
    let substeps = (v_d * dt / dx).ceil().max(1.0) as usize;
    let h = dt / substeps as f64;
    let courant = v_d * h / dx;
    let mut exported = 0.0;
    for _ in 0..substeps {
        let bottom = *d.last().unwrap();
        exported += v_d * h * bottom;
        // Upstream is the shallower neighbour; sweep from the bottom so each
        // update reads the old value above it.
        for i in (1..d.len()).rev() {
            d[i] -= courant * (d[i] - d[i - 1]);
        }
        d[0] -= courant * d[0];
    }
    exported
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_field_unchanged_by_diffusion() {
        let g = Grid::new(100.0, 10, 50.0).unwrap();
        let m = MixingField::SyntheticSeasonal {
            d_min: 1.0,
            d_max: 50.0,
            h_min: 10.0,
            h_max: 60.0,
            deepest_day: 30.0,
        };
        let out = step_diffusion(&[2.5; 10], &g, &m, 3.0, 0.7).unwrap();
        for v in out {
            assert!((v - 2.5).abs() < 1e-14);
        }
    }

    #[test]
    fn two_cell_hand_solution() {
        // (1 + dt k) u0 - dt k u1 = b0, -dt k u0 + (1 + dt k) u1 = b1 with k = d/dx².
        let g = Grid::new(10.0, 2, 5.0).unwrap();
        let (d, dt) = (3.0, 0.4);
        let k = d / 25.0;
        let b = [1.0, 0.2];
        let out = step_diffusion(&b, &g, &MixingField::Constant(d), 0.0, dt).unwrap();
        let sum = b[0] + b[1];
        let diff = (b[0] - b[1]) / (1.0 + 2.0 * dt * k);
        assert!((out[0] - 0.5 * (sum + diff)).abs() < 1e-15);
        assert!((out[1] - 0.5 * (sum - diff)).abs() < 1e-15);
    }

    #[test]
    fn diffusion_conserves_mass() {
        let g = Grid::new(200.0, 37, 50.0).unwrap();
        let u: Vec<f64> = (0..37).map(|i| ((i * 7919) % 13) as f64 * 0.37).collect();
        let out = step_diffusion(&u, &g, &MixingField::Constant(40.0), 0.0, 2.0).unwrap();
        let before: f64 = u.iter().sum::<f64>() * g.cell_width();
        let after: f64 = out.iter().sum::<f64>() * g.cell_width();
        assert!(((after - before) / before).abs() < 1e-12);
    }

    #[test]
    fn diffusion_rejects_length_mismatch() {
        let g = Grid::new(10.0, 2, 5.0).unwrap();
        assert!(step_diffusion(&[1.0], &g, &MixingField::Constant(1.0), 0.0, 0.1).is_err());
    }

    #[test]
    fn upwind_hand_update() {
        let g = Grid::new(30.0, 3, 10.0).unwrap();
        let mut d = vec![1.0; 3];
        let (v, dt) = (5.0, 0.5);
        let exported = step_advection(&mut d, &g, v, dt);
        // Courant 0.25: top cell loses v dt D / dx, interior and bottom balance.
        assert!((d[0] - 0.75).abs() < 1e-15);
        assert!((d[1] - 1.0).abs() < 1e-15);
        assert!((d[2] - 1.0).abs() < 1e-15);
        assert!((exported - v * dt).abs() < 1e-15);
    }

    #[test]
    fn zero_detritus_stays_zero() {
        let g = Grid::new(30.0, 3, 10.0).unwrap();
        let mut d = vec![0.0; 3];
        assert_eq!(step_advection(&mut d, &g, 5.0, 1.0), 0.0);
        assert_eq!(d, vec![0.0; 3]);
    }

    #[test]
    fn subcycling_telescopes() {
        let g = Grid::new(100.0, 20, 10.0).unwrap();
        let mut d: Vec<f64> = (0..20).map(|i| 0.1 + (i as f64 * 0.3).sin().abs()).collect();
        let before: f64 = d.iter().sum::<f64>() * g.cell_width();
        // Courant 3.1 → four sub-steps.
        let exported = step_advection(&mut d, &g, 5.0, 3.1);
        let after: f64 = d.iter().sum::<f64>() * g.cell_width();
        assert!((after - before + exported).abs() < 1e-12);
        assert!(d.iter().all(|v| *v >= 0.0));
    }
}
