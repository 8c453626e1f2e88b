//! Run configuration: a TOML document that resolves into a [`Scenario`].
//!
//! Every section is optional except `grid`; unknown keys are rejected.
//! Relative table paths are resolved against the config file's directory.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::forcing::{Forcing, IrradianceSeries, IrradianceTable, MixingField, MixingTable};
use crate::model::{Grid, ModelParams, StateVector};
use crate::optics::OpticalParams;
use crate::scenarios::Scenario;
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub model: ModelParams,
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub forcing: ForcingSpec,
    #[serde(default)]
    pub optics: OpticalParams,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converge: Option<ConvergeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Column depth `L` (m).
    pub depth: f64,
    pub n_cells: usize,
    /// Overrides `model.l_euphotic` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_euphotic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSpec {
    pub mixing: MixingSpec,
    pub irradiance: IrradianceSpec,
}

impl Default for ForcingSpec {
    fn default() -> Self {
        ForcingSpec {
            mixing: MixingSpec::SyntheticSeasonal {
                d_min: 1.0,
                d_max: 100.0,
                h_min: 20.0,
                h_max: 300.0,
                deepest_day: 45.0,
            },
            irradiance: IrradianceSpec::DiurnalSeasonal {
                q_ref: 1.0,
                seasonal_amplitude: 0.5,
                peak_day: 172.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MixingSpec {
    Constant {
        d: f64,
    },
    SyntheticSeasonal {
        d_min: f64,
        d_max: f64,
        h_min: f64,
        h_max: f64,
        deepest_day: f64,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IrradianceSpec {
    Constant {
        q: f64,
    },
    DiurnalSeasonal {
        q_ref: f64,
        seasonal_amplitude: f64,
        peak_day: f64,
    },
    File {
        path: PathBuf,
    },
}

/// Initial profile of one tracer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Constant {
        value: f64,
    },
    /// `background + surface · exp(-x / scale)`.
    ExponentialProfile {
        surface: f64,
        scale: f64,
        #[serde(default)]
        background: f64,
    },
    /// Table with header `depth_m,value`, linearly interpolated and held
    /// constant beyond its ends.
    FromFile {
        path: PathBuf,
    },
    /// Independent uniform values per cell, drawn from the run seed.
    Random {
        min: f64,
        max: f64,
    },
    /// `mean + amplitude · cos(modes · π x / L)`.
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default = "one")]
        modes: u32,
    },
}

fn one() -> u32 {
    1
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Constant { value: 0.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialCondition {
    pub n: InitialSpec,
    pub p: InitialSpec,
    pub z: InitialSpec,
    pub d: InitialSpec,
}

#[derive(Deserialize)]
struct ProfileRow {
    depth_m: f64,
    value: f64,
}

impl InitialSpec {
    fn resolve_paths(&mut self, base: &Path) {
        if let InitialSpec::FromFile { path } = self {
            *path = absolutize(base, path);
        }
    }

    fn values(&self, grid: &Grid, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let xs = grid.centers();
        Ok(match *self {
            InitialSpec::Constant { value } => vec![value; xs.len()],
            InitialSpec::ExponentialProfile {
                surface,
                scale,
                background,
            } => {
                if !(scale > 0.0) {
                    return Err(ModelError::param("initial.scale", format!("must be positive, got {scale}")));
                }
                xs.iter().map(|x| background + surface * (-x / scale).exp()).collect()
            }
            InitialSpec::FromFile { ref path } => profile_from_file(path, xs)?,
            InitialSpec::Random { min, max } => {
                if !(min <= max) || !min.is_finite() || !max.is_finite() {
                    return Err(ModelError::param("initial.min", format!("need finite min <= max, got {min}, {max}")));
                }
                xs.iter().map(|_| if min == max { min } else { rng.gen_range(min..max) }).collect()
            }
            InitialSpec::Cosine { mean, amplitude, modes } => {
                let k = modes as f64 * std::f64::consts::PI / grid.depth();
                xs.iter().map(|x| mean + amplitude * (k * x).cos()).collect()
            }
        })
    }
}

fn profile_from_file(path: &Path, xs: &[f64]) -> Result<Vec<f64>> {
    let bad = |reason: String| ModelError::Table {
        path: path.to_path_buf(),
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut depth = Vec::new();
    let mut value = Vec::new();
    for rec in rdr.deserialize::<ProfileRow>() {
        let r = rec.map_err(|e| bad(e.to_string()))?;
        if depth.last().is_some_and(|&d| r.depth_m <= d) {
            return Err(bad(format!("depths not increasing at {}", r.depth_m)));
        }
        if !r.value.is_finite() {
            return Err(bad("non-finite value".into()));
        }
        depth.push(r.depth_m);
        value.push(r.value);
    }
    if depth.is_empty() {
        return Err(bad("no rows".into()));
    }
    Ok(xs
        .iter()
        .map(|&x| {
            let j = depth.partition_point(|&d| d <= x);
            if j == 0 {
                value[0]
            } else if j == depth.len() {
                value[j - 1]
            } else {
                let w = (x - depth[j - 1]) / (depth[j] - depth[j - 1]);
                value[j - 1] * (1.0 - w) + value[j] * w
            }
        })
        .collect())
}

impl InitialCondition {
    pub fn uniform(spec: InitialSpec) -> Self {
        InitialCondition {
            n: spec.clone(),
            p: spec.clone(),
            z: spec.clone(),
            d: spec,
        }
    }

    /// Builds the initial state; random profiles use independent streams
    /// derived from `seed` per tracer.
    pub fn build(&self, grid: &Grid, seed: u64) -> Result<StateVector> {
        let specs = [&self.n, &self.p, &self.z, &self.d];
        let mut conc: [Vec<f64>; 4] = Default::default();
        for (k, spec) in specs.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            conc[k] = spec.values(grid, &mut rng)?;
        }
        let [n, p, z, d] = conc;
        StateVector::from_arrays(0.0, n, p, z, d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSpec {
    /// Time steps, coarsest first.
    pub dts: Vec<f64>,
    /// Cell counts, coarsest first.
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Dotted key path into this config, e.g. `model.mu_p`.
    pub parameter: String,
    pub values: Vec<toml::Value>,
}

fn absolutize(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ModelError::Config(e.to_string()))
    }

    /// Parses a config file and makes its relative paths absolute.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.resolve_paths(&base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        if let MixingSpec::File { path } = &mut self.forcing.mixing {
            *path = absolutize(base, path);
        }
        if let IrradianceSpec::File { path } = &mut self.forcing.irradiance {
            *path = absolutize(base, path);
        }
        for spec in [
            &mut self.initial.n,
            &mut self.initial.p,
            &mut self.initial.z,
            &mut self.initial.d,
        ] {
            spec.resolve_paths(base);
        }
        if let Some(out) = &mut self.output_dir {
            *out = absolutize(base, out);
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| ModelError::Config(e.to_string()))
    }

    /// Validates everything and builds the scenario.
    pub fn resolve(&self) -> Result<Scenario> {
        let mut params = self.model.clone();
        if let Some(l) = self.grid.l_euphotic {
            params.l_euphotic = l;
        }
        let mixing = match &self.forcing.mixing {
            MixingSpec::Constant { d } => MixingField::Constant(*d),
            &MixingSpec::SyntheticSeasonal {
                d_min,
                d_max,
                h_min,
                h_max,
                deepest_day,
            } => MixingField::SyntheticSeasonal {
                d_min,
                d_max,
                h_min,
                h_max,
                deepest_day,
            },
            MixingSpec::File { path } => MixingField::File(MixingTable::from_path(path)?),
        };
        let irradiance = match &self.forcing.irradiance {
            IrradianceSpec::Constant { q } => IrradianceSeries::Constant(*q),
            &IrradianceSpec::DiurnalSeasonal {
                q_ref,
                seasonal_amplitude,
                peak_day,
            } => IrradianceSeries::DiurnalSeasonal {
                q_ref,
                seasonal_amplitude,
                peak_day,
            },
            IrradianceSpec::File { path } => IrradianceSeries::File(IrradianceTable::from_path(path)?),
        };
        let scenario = Scenario {
            name: self.name.clone().unwrap_or_else(|| "run".into()),
            params,
            optics: self.optics.clone(),
            forcing: Forcing { mixing, irradiance },
            depth: self.grid.depth,
            n_cells: self.grid.n_cells,
            initial: self.initial.clone(),
            solver: self.solver.clone(),
            seed: self.seed,
        };
        let model = scenario.model(self.grid.n_cells)?;
        scenario.solver.validate(&model)?;
        scenario.initial_state(&model.grid)?;
        Ok(scenario)
    }

    /// Config with every derived default written out, so that running it
    /// again reproduces the same scenario.
    pub fn resolved(&self) -> Result<RunConfig> {
        let scenario = self.resolve()?;
        let model = scenario.model(self.grid.n_cells)?;
        let mut out = self.clone();
        out.grid.l_euphotic = Some(model.params.l_euphotic);
        out.model.l_euphotic = model.params.l_euphotic;
        out.optics.k_par = model.optics.k_par;
        out.solver.lambda = Some(self.solver.lambda_for(&model));
        Ok(out)
    }

    /// Copy of this config with the dotted `key` replaced by `value`.
    pub fn with_override(&self, key: &str, value: toml::Value) -> Result<RunConfig> {
        let mut doc = toml::Value::try_from(self).map_err(|e| ModelError::Config(e.to_string()))?;
        let mut node = &mut doc;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let table = node
                .as_table_mut()
                .ok_or_else(|| ModelError::Config(format!("`{key}` does not name a config entry")))?;
            if i + 1 == parts.len() {
                table.insert(part.to_string(), value.clone());
                break;
            }
            node = table
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(Default::default()));
        }
        let text = toml::to_string(&doc).map_err(|e| ModelError::Config(e.to_string()))?;
        Self::from_toml_str(&text)
    }

    /// One config per sweep value, in order.
    pub fn sweep_configs(&self) -> Result<Vec<RunConfig>> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| ModelError::Config("no [sweep] section".into()))?;
        if sweep.values.is_empty() {
            return Err(ModelError::Config("sweep.values is empty".into()));
        }
        sweep
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut cfg = self.with_override(&sweep.parameter, v.clone())?;
                cfg.sweep = None;
                cfg.name = Some(format!("{}_{i:03}", self.name.as_deref().unwrap_or("sweep")));
                Ok(cfg)
            })
            .collect()
    }

    /// Refinement levels from `[converge]`, or three halvings of the base
    /// `dt` and three doublings of the base cell count.
    pub fn convergence_levels(&self) -> (Vec<f64>, Vec<usize>) {
        match &self.converge {
            Some(c) => (c.dts.clone(), c.cells.clone()),
            None => {
                let dt = self.solver.dt;
                let n = self.grid.n_cells;
                (vec![dt, dt / 2.0, dt / 4.0], vec![n, 2 * n, 4 * n])
            }
        }
    }
}
