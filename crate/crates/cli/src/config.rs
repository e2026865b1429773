//! Scenario files: TOML with fixed sections, unknown keys rejected.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use wavelab::{
    BoundaryMode, CoefficientProfile, CutoffSet, DampingKind, DampingSpec, Grid, InitialData, RunSpec, WaveError,
};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub p: f64,
    /// Seeds `random_modes` initial data.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    pub damping: DampingKind,
    /// Absent for boundary damping, where `a = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<CoefficientConfig>,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub initial: InitialConfig,
    pub weights: WeightsConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub multipliers: MultipliersConfig,
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub debug: Option<DebugConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryConfig {
    #[default]
    Dirichlet,
    Damped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub omega: [f64; 2],
    pub a0: f64,
    #[serde(default = "default_ramp")]
    pub ramp: f64,
}

fn default_ramp() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    /// Steps between recorded snapshots.
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// `z0 = A sin(pi x)`, `z1 = B sin(2 pi x)`.
    Standing { amplitude: f64, velocity: f64 },
    /// `z0 = A sin(pi x / 2)`, `z1 = 0`.
    QuarterWave { amplitude: f64 },
    /// Sum of `modes` sine modes with seeded coefficients in `[-1, 1]`
    /// and `1/k` decay, scaled by `amplitude`; `z1 = 0`.
    RandomModes { amplitude: f64, modes: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub m: u32,
    pub eta: f64,
    /// Threshold of the small-velocity region in the energy trace.
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_eps() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Defaults to the last decade of the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultipliersConfig {
    pub enabled: bool,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoffs: Option<[f64; 8]>,
}

impl Default for MultipliersConfig {
    fn default() -> Self {
        Self { enabled: true, s: 0.0, t: 2.0, cutoffs: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default = "default_true")]
    pub snapshots: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DebugConfig {
    /// Overwrites one node with NaN before this step.
    pub inject_nan_at_step: u64,
}

/// Everything a run needs, checked and built from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: RunConfig,
    pub damping: DampingSpec,
    pub grid: Grid,
    pub init: InitialData,
    pub spec: RunSpec,
    pub cutoffs: CutoffSet,
}

fn config_err(e: WaveError) -> CliError {
    CliError::Config(e.to_string())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Output directory, overridden by `WAVELAB_OUT`.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os("WAVELAB_OUT") {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output.dir.clone(),
        }
    }

    /// Checks every precondition and builds the run inputs.
    pub fn build(&self) -> Result<Scenario, CliError> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(CliError::Config(format!("p must satisfy 1 < p < inf, got {}", self.p)));
        }
        let damping = DampingSpec::from_kind(self.damping)
            .and_then(|d| d.with_eta(self.weights.eta))
            .map_err(config_err)?;
        damping.validate().map_err(config_err)?;
        if self.weights.m == 0 {
            return Err(CliError::Config("weights.m must be at least 1".into()));
        }
        if !(self.weights.eps > 0.0) {
            return Err(CliError::Config("weights.eps must be positive".into()));
        }
        let grid = Grid::new(self.grid.n_cells).map_err(config_err)?;
        let mode = match self.boundary {
            BoundaryConfig::Dirichlet => BoundaryMode::Dirichlet,
            BoundaryConfig::Damped => BoundaryMode::Damped,
        };
        let coeff = match (&self.coefficient, mode) {
            (Some(c), BoundaryMode::Dirichlet) => {
                CoefficientProfile::trapezoid(&grid, (c.omega[0], c.omega[1]), c.a0, c.ramp).map_err(config_err)?
            }
            (None, BoundaryMode::Damped) => CoefficientProfile::zero(&grid),
            (None, BoundaryMode::Dirichlet) => {
                return Err(CliError::Config("distributed damping needs a [coefficient] section".into()))
            }
            (Some(_), BoundaryMode::Damped) => {
                return Err(CliError::Config("boundary damping takes no [coefficient] section".into()))
            }
        };
        let cutoffs = match (self.multipliers.cutoffs, &self.coefficient) {
            (Some(points), Some(c)) => CutoffSet::new(points, (c.omega[0], c.omega[1])).map_err(config_err)?,
            (Some(_), None) => return Err(CliError::Config("cutoffs need a [coefficient] section".into())),
            (None, _) => CutoffSet::default(),
        };
        let init = self.initial_data(grid)?;
        let spec = RunSpec { damping: damping.clone(), coeff, mode, t_final: self.time.t_final, stride: self.time.stride };
        spec.n_steps(&grid).map_err(config_err)?;
        let m = &self.multipliers;
        if m.enabled && !(m.s >= 0.0 && m.t > m.s) {
            return Err(CliError::Config(format!("multipliers need 0 <= S < T, got S = {}, T = {}", m.s, m.t)));
        }
        if m.enabled && mode == BoundaryMode::Dirichlet {
            let dt = grid.dt();
            for (key, v) in [("S", m.s), ("T", m.t)] {
                if ((v / dt).round() * dt - v).abs() > 1e-9 * dt {
                    return Err(CliError::Config(format!("multipliers.{key} = {v} is not a multiple of dt = {dt}")));
                }
            }
            if m.t - m.s < 2.0 * dt * (1.0 - 1e-9) {
                return Err(CliError::Config("multipliers interval must span at least two steps".into()));
            }
        }
        if let (Some(lo), Some(hi)) = (self.fit.t_lo, self.fit.t_hi) {
            if !(lo < hi) {
                return Err(CliError::Config(format!("fit window [{lo}, {hi}] is empty")));
            }
        }
        Ok(Scenario { config: self.clone(), damping, grid, init, spec, cutoffs })
    }

    fn initial_data(&self, grid: Grid) -> Result<InitialData, CliError> {
        use std::f64::consts::PI;
        match self.initial {
            InitialConfig::Standing { amplitude, velocity } => {
                InitialData::standing(grid, amplitude, velocity).map_err(config_err)
            }
            InitialConfig::QuarterWave { amplitude } => InitialData::quarter_wave(grid, amplitude).map_err(config_err),
            InitialConfig::RandomModes { amplitude, modes } => {
                if modes == 0 {
                    return Err(CliError::Config("random_modes needs at least one mode".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let c: Vec<f64> = (1..=modes).map(|k| rng.gen_range(-1.0..1.0) / k as f64).collect();
                let c2 = c.clone();
                let mut d = InitialData::from_profiles(
                    grid,
                    move |x| amplitude * c.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * PI * x).sin()).sum::<f64>(),
                    move |x| {
                        amplitude
                            * c2.iter()
                                .enumerate()
                                .map(|(k, a)| a * (k + 1) as f64 * PI * ((k + 1) as f64 * PI * x).cos())
                                .sum::<f64>()
                    },
                    |_| 0.0,
                )
                .map_err(config_err)?;
                let n = grid.n_cells;
                d.z0[n] = 0.0;
                Ok(d)
            }
        }
    }
}
