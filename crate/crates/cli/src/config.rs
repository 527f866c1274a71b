//! Run files: one or more experiment configurations.

use std::collections::HashSet;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use wdro_core::losses::LossSpec;
use wdro_core::space::DiscreteDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Bounds,
    Oracle,
    Certificate,
    Cvar,
    Solve,
}

impl Pipeline {
    pub const ALL: [Pipeline; 5] = [Pipeline::Bounds, Pipeline::Oracle, Pipeline::Certificate, Pipeline::Cvar, Pipeline::Solve];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Bounds => "bounds",
            Pipeline::Oracle => "oracle",
            Pipeline::Certificate => "certificate",
            Pipeline::Cvar => "cvar",
            Pipeline::Solve => "solve",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    /// Coordinates uniform on `[-scale, scale)`.
    #[default]
    Uniform,
    /// Coordinates `scale * N(0, 1)`.
    Gaussian,
}

/// Seeded synthetic data; the atom kind follows the loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub n: usize,
    pub dim: usize,
    #[serde(default)]
    pub sampler: Sampler,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

/// Explicit distribution or a generator. In JSON, a generator is an object
/// with a single `"generator"` key; anything else is parsed as a distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Distribution(DiscreteDistribution),
    Generator(GeneratorSpec),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorWrap {
    generator: GeneratorSpec,
}

impl Serialize for DataSource {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            DataSource::Distribution(d) => d.serialize(s),
            DataSource::Generator(g) => GeneratorWrap { generator: g.clone() }.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for DataSource {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        if v.get("generator").is_some() {
            let w: GeneratorWrap = serde_json::from_value(v).map_err(D::Error::custom)?;
            Ok(DataSource::Generator(w.generator))
        } else {
            serde_json::from_value(v).map(DataSource::Distribution).map_err(D::Error::custom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(default = "step0")]
    pub step0: f64,
    #[serde(default = "max_iter")]
    pub max_iter: usize,
    #[serde(default = "stall_tol")]
    pub stall_tol: f64,
    #[serde(default = "stall_window")]
    pub stall_window: usize,
}

fn step0() -> f64 {
    0.5
}
fn max_iter() -> usize {
    20_000
}
fn stall_tol() -> f64 {
    1e-12
}
fn stall_window() -> usize {
    2_000
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { step0: step0(), max_iter: max_iter(), stall_tol: stall_tol(), stall_window: stall_window() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub config_id: String,
    pub loss: LossSpec,
    pub data: DataSource,
    pub delta_grid: Vec<f64>,
    #[serde(default = "resolution")]
    pub grid_resolution: usize,
    pub pipelines: Vec<Pipeline>,
    /// Certificate slack as a fraction of `min(L_min, delta L_min)`.
    #[serde(default = "epsilon_fraction")]
    pub epsilon_fraction: f64,
    #[serde(default)]
    pub solver: SolverSettings,
}

fn resolution() -> usize {
    8
}
fn epsilon_fraction() -> f64 {
    1e-3
}

/// Contents of a run file: a list of configurations, accepted as a bare
/// array, as `{"configs": [...]}` or as a single configuration object.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFile {
    pub configs: Vec<ExperimentConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Wrapped {
    configs: Vec<ExperimentConfig>,
}

impl<'de> Deserialize<'de> for RunFile {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        let configs = match v {
            Value::Array(_) => serde_json::from_value(v).map_err(D::Error::custom)?,
            Value::Object(ref m) if m.contains_key("configs") => {
                serde_json::from_value::<Wrapped>(v).map_err(D::Error::custom)?.configs
            }
            Value::Object(_) => vec![serde_json::from_value(v).map_err(D::Error::custom)?],
            _ => return Err(D::Error::custom("run file must be an object or an array")),
        };
        Ok(RunFile { configs })
    }
}

impl RunFile {
    /// Parses and validates a run file.
    pub fn parse(text: &str) -> Result<RunFile, String> {
        let run: RunFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        run.validate()?;
        Ok(run)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.configs.is_empty() {
            return Err("run file has no configurations".into());
        }
        let mut ids = HashSet::new();
        for c in &self.configs {
            if !ids.insert(c.config_id.as_str()) {
                return Err(format!("duplicate config_id {:?}", c.config_id));
            }
            c.validate().map_err(|e| format!("config {:?}: {e}", c.config_id))?;
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.config_id.is_empty() {
            return Err("config_id is empty".into());
        }
        self.loss.check_pairing().map_err(|e| e.to_string())?;
        if self.delta_grid.is_empty() {
            return Err("delta_grid is empty".into());
        }
        if let Some(d) = self.delta_grid.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(format!("delta {d} is not finite and nonnegative"));
        }
        if self.delta_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err("delta_grid must be strictly ascending".into());
        }
        if self.grid_resolution == 0 {
            return Err("grid_resolution must be at least 1".into());
        }
        if self.pipelines.is_empty() {
            return Err("no pipelines requested".into());
        }
        let unique: HashSet<_> = self.pipelines.iter().collect();
        if unique.len() != self.pipelines.len() {
            return Err("pipelines contain duplicates".into());
        }
        if !(self.epsilon_fraction > 0.0 && self.epsilon_fraction < 1.0) {
            return Err(format!("epsilon_fraction {} outside (0, 1)", self.epsilon_fraction));
        }
        let s = &self.solver;
        if !(s.step0.is_finite() && s.step0 > 0.0) || s.stall_window == 0 || s.stall_tol.is_nan() || s.stall_tol < 0.0 {
            return Err("solver settings need step0 > 0, stall_window >= 1 and stall_tol >= 0".into());
        }
        if let DataSource::Generator(g) = &self.data {
            if g.n == 0 || g.dim == 0 {
                return Err("generator needs n >= 1 and dim >= 1".into());
            }
            if !(g.scale.is_finite() && g.scale > 0.0) {
                return Err(format!("generator scale {} must be positive", g.scale));
            }
        }
        Ok(())
    }
}
