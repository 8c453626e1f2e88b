//! Physical forcing: the vertical mixing coefficient `d(t, x)` and the
//! surface irradiance factor `Q(t)`.
//!
//! Both can be read from delimited text tables or generated synthetically.
//! Mixing tables have the header `time_day,depth_m,d_m2_per_day`, rows
//! sorted by time then depth, and the same depth levels in every time slice.
//! Irradiance tables have the header `time_day,q`.

use std::f64::consts::PI;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{ModelError, Result};

const DAYS_PER_YEAR: f64 = 365.0;

/// Mixing coefficient `d(t, x)` in m² day⁻¹, bounded in `[d_min, d_max]`.
#[derive(Debug, Clone, PartialEq)]
pub enum MixingField {
    Constant(f64),
    /// `d_max` inside a seasonally varying mixed layer of depth `h(t)`,
    /// blended with a cosine profile to `d_min` over a transition layer of
    /// thickness `0.1 h(t)` below it.
    SyntheticSeasonal {
        d_min: f64,
        d_max: f64,
        h_min: f64,
        h_max: f64,
        /// Day of the year at which the mixed layer is deepest.
        deepest_day: f64,
    },
    File(MixingTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingTable {
    pub source: PathBuf,
    times: Vec<f64>,
    depths: Vec<f64>,
    /// Row-major `[time][depth]`.
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct MixingRow {
    time_day: f64,
    depth_m: f64,
    d_m2_per_day: f64,
}

impl MixingTable {
    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(file, path)
    }

    pub fn from_reader<R: Read>(reader: R, source: &Path) -> Result<Self> {
        let bad = |reason: String| ModelError::Table {
            path: source.to_path_buf(),
            reason,
        };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<MixingRow>() {
            rows.push(rec.map_err(|e| bad(e.to_string()))?);
        }
        if rows.is_empty() {
            return Err(bad("no data rows".into()));
        }
        let mut times: Vec<f64> = Vec::new();
        for r in &rows {
            if times.last() != Some(&r.time_day) {
                if let Some(&last) = times.last() {
                    if r.time_day <= last {
                        return Err(bad(format!("times not increasing at {}", r.time_day)));
                    }
                }
                times.push(r.time_day);
            }
        }
        let depths: Vec<f64> = rows
            .iter()
            .take_while(|r| r.time_day == times[0])
            .map(|r| r.depth_m)
            .collect();
        if depths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("depths not increasing within a time slice".into()));
        }
        if rows.len() != times.len() * depths.len() {
            return Err(bad("every time slice must list the same depth levels".into()));
        }
        for (k, r) in rows.iter().enumerate() {
            if r.depth_m != depths[k % depths.len()] {
                return Err(bad(format!("unexpected depth {} at time {}", r.depth_m, r.time_day)));
            }
            if !(r.d_m2_per_day > 0.0) || !r.d_m2_per_day.is_finite() {
                return Err(bad(format!(
                    "mixing coefficient must be strictly positive, got {} at (t={}, x={})",
                    r.d_m2_per_day, r.time_day, r.depth_m
                )));
            }
        }
        Ok(MixingTable {
            source: source.to_path_buf(),
            values: rows.iter().map(|r| r.d_m2_per_day).collect(),
            times,
            depths,
        })
    }

    fn bounds(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    fn time_range(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    /// Bilinear interpolation; depths outside the table are clamped to the
    /// nearest level, times outside it are an error.
    fn at(&self, t: f64, x: f64) -> Result<f64> {
        let (t0, t1) = self.time_range();
        if !(t >= t0 && t <= t1) {
            return Err(ModelError::OutOfRange {
                what: format!("time in {}", self.source.display()),
                value: t,
                min: t0,
                max: t1,
            });
        }
        let (it, wt) = bracket(&self.times, t);
        let (ix, wx) = bracket(&self.depths, x);
        let nd = self.depths.len();
        let v = |i: usize, j: usize| self.values[i * nd + j];
        let it1 = (it + 1).min(self.times.len() - 1);
        let ix1 = (ix + 1).min(nd - 1);
        let lower = v(it, ix) * (1.0 - wx) + v(it, ix1) * wx;
        let upper = v(it1, ix) * (1.0 - wx) + v(it1, ix1) * wx;
        Ok(lower * (1.0 - wt) + upper * wt)
    }
}

/// Index of the left knot and interpolation weight, clamped to the ends.
fn bracket(knots: &[f64], x: f64) -> (usize, f64) {
    if knots.len() == 1 || x <= knots[0] {
        return (0, 0.0);
    }
    let last = knots.len() - 1;
    if x >= knots[last] {
        return (last, 0.0);
    }
    let i = knots.partition_point(|&k| k <= x) - 1;
    (i, (x - knots[i]) / (knots[i + 1] - knots[i]))
}

impl MixingField {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MixingField::Constant(d) => {
                if !(d > 0.0) || !d.is_finite() {
                    return Err(ModelError::param("mixing.d", format!("must be strictly positive, got {d}")));
                }
            }
            MixingField::SyntheticSeasonal {
                d_min,
                d_max,
                h_min,
                h_max,
                deepest_day,
            } => {
                if !(d_min > 0.0 && d_min <= d_max && d_max.is_finite()) {
                    return Err(ModelError::param(
                        "mixing.d_min",
                        format!("need 0 < d_min <= d_max, got {d_min}, {d_max}"),
                    ));
                }
                if !(h_min > 0.0 && h_min <= h_max && h_max.is_finite()) {
                    return Err(ModelError::param(
                        "mixing.h_min",
                        format!("need 0 < h_min <= h_max, got {h_min}, {h_max}"),
                    ));
                }
                if !deepest_day.is_finite() {
                    return Err(ModelError::param("mixing.deepest_day", "must be finite"));
                }
            }
            MixingField::File(_) => {}
        }
        Ok(())
    }

    /// Lower bound `d₀`.
    pub fn d_min(&self) -> f64 {
        match self {
            MixingField::Constant(d) => *d,
            MixingField::SyntheticSeasonal { d_min, .. } => *d_min,
            MixingField::File(t) => t.bounds().0,
        }
    }

    /// Upper bound `d_∞`.
    pub fn d_max(&self) -> f64 {
        match self {
            MixingField::Constant(d) => *d,
            MixingField::SyntheticSeasonal { d_max, .. } => *d_max,
            MixingField::File(t) => t.bounds().1,
        }
    }

    /// Mixed-layer depth of the synthetic profile.
    pub fn mixed_layer_depth(&self, t: f64) -> Option<f64> {
        match *self {
            MixingField::SyntheticSeasonal {
                h_min,
                h_max,
                deepest_day,
                ..
            } => {
                let phase = 2.0 * PI * (t - deepest_day) / DAYS_PER_YEAR;
                Some(0.5 * (h_min + h_max) + 0.5 * (h_max - h_min) * phase.cos())
            }
            _ => None,
        }
    }

    pub fn mixing_at(&self, t: f64, x: f64) -> Result<f64> {
        if !t.is_finite() || !x.is_finite() {
            return Err(ModelError::NonFinite("mixing query".into()));
        }
        match self {
            MixingField::Constant(d) => Ok(*d),
            MixingField::SyntheticSeasonal { d_min, d_max, .. } => {
                let h = self.mixed_layer_depth(t).unwrap();
                let width = 0.1 * h;
                let d = if x <= h {
                    *d_max
                } else if x >= h + width {
                    *d_min
                } else {
                    let s = (x - h) / width;
                    d_min + (d_max - d_min) * 0.5 * (1.0 + (PI * s).cos())
                };
                Ok(d)
            }
            MixingField::File(table) => table.at(t, x),
        }
    }
}

/// Surface irradiance factor `Q(t) ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum IrradianceSeries {
    Constant(f64),
    /// `Q_ref max(0, sin(2π frac(t))) s(t)` with seasonal envelope
    /// `s(t) = 1 - amplitude (1 - cos(2π (t - peak_day)/365)) / 2`.
    DiurnalSeasonal {
        q_ref: f64,
        seasonal_amplitude: f64,
        peak_day: f64,
    },
    File(IrradianceTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrradianceTable {
    pub source: PathBuf,
    times: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct IrradianceRow {
    time_day: f64,
    q: f64,
}

impl IrradianceTable {
    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(file, path)
    }

    pub fn from_reader<R: Read>(reader: R, source: &Path) -> Result<Self> {
        let bad = |reason: String| ModelError::Table {
            path: source.to_path_buf(),
            reason,
        };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.deserialize::<IrradianceRow>() {
            let r = rec.map_err(|e| bad(e.to_string()))?;
            if times.last().is_some_and(|&last| r.time_day <= last) {
                return Err(bad(format!("times not increasing at {}", r.time_day)));
            }
            if !(r.q >= 0.0) || !r.q.is_finite() {
                return Err(bad(format!("irradiance must be nonnegative, got {} at t={}", r.q, r.time_day)));
            }
            times.push(r.time_day);
            values.push(r.q);
        }
        if times.is_empty() {
            return Err(bad("no data rows".into()));
        }
        Ok(IrradianceTable {
            source: source.to_path_buf(),
            times,
            values,
        })
    }
}

impl IrradianceSeries {
    pub fn validate(&self) -> Result<()> {
        match *self {
            IrradianceSeries::Constant(q) => {
                if !(q >= 0.0) || !q.is_finite() {
                    return Err(ModelError::param("irradiance.q", format!("must be nonnegative, got {q}")));
                }
            }
            IrradianceSeries::DiurnalSeasonal {
                q_ref,
                seasonal_amplitude,
                peak_day,
            } => {
                if !(q_ref > 0.0) || !q_ref.is_finite() {
                    return Err(ModelError::param("irradiance.q_ref", format!("must be positive, got {q_ref}")));
                }
                if !(0.0..=1.0).contains(&seasonal_amplitude) {
                    return Err(ModelError::param(
                        "irradiance.seasonal_amplitude",
                        format!("must lie in [0, 1], got {seasonal_amplitude}"),
                    ));
                }
                if !peak_day.is_finite() {
                    return Err(ModelError::param("irradiance.peak_day", "must be finite"));
                }
            }
            IrradianceSeries::File(_) => {}
        }
        Ok(())
    }

    /// `‖Q‖_∞`.
    pub fn q_sup(&self) -> f64 {
        match self {
            IrradianceSeries::Constant(q) => *q,
            IrradianceSeries::DiurnalSeasonal { q_ref, .. } => *q_ref,
            IrradianceSeries::File(t) => t.values.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Reference surface value used to derive the default `k_par`.
    pub fn q_ref(&self) -> f64 {
        self.q_sup()
    }

    pub fn irradiance_at(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(ModelError::NonFinite("irradiance query".into()));
        }
        match self {
            IrradianceSeries::Constant(q) => Ok(*q),
            IrradianceSeries::DiurnalSeasonal {
                q_ref,
                seasonal_amplitude,
                peak_day,
            } => {
                if t < 0.0 {
                    return Err(ModelError::OutOfRange {
                        what: "time".into(),
                        value: t,
                        min: 0.0,
                        max: f64::INFINITY,
                    });
                }
                let daily = (2.0 * PI * t.fract()).sin().max(0.0);
                let season = 1.0
                    - seasonal_amplitude * 0.5 * (1.0 - (2.0 * PI * (t - peak_day) / DAYS_PER_YEAR).cos());
                Ok((q_ref * daily * season).clamp(0.0, *q_ref))
            }
            IrradianceSeries::File(table) => {
                let (t0, t1) = (table.times[0], *table.times.last().unwrap());
                if !(t >= t0 && t <= t1) {
                    return Err(ModelError::OutOfRange {
                        what: format!("time in {}", table.source.display()),
                        value: t,
                        min: t0,
                        max: t1,
                    });
                }
                let (i, w) = bracket(&table.times, t);
                let j = (i + 1).min(table.times.len() - 1);
                Ok(table.values[i] * (1.0 - w) + table.values[j] * w)
            }
        }
    }
}

/// Forcing bundle handed to the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    pub mixing: MixingField,
    pub irradiance: IrradianceSeries,
}

impl Forcing {
    pub fn validate(&self) -> Result<()> {
        self.mixing.validate()?;
        self.irradiance.validate()
    }
}
