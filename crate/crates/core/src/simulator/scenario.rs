use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controller::{design_gains, DesignOutcome, DesignProblem, Heuristics};
use crate::dynamics::{ModelBounds, RobotModel, RobotState};
use crate::error::{Error, Result};
use crate::graph::TreeNetwork;
use crate::Vec2;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_DT: f64 = 1e-3;
/// Hold length of the bounded-random profile, in seconds.
pub const RANDOM_HOLD: f64 = 0.25;

/// User force applied to the informed robot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForceProfile {
    #[default]
    Zero,
    /// Constant force from `onset` on; `magnitude` defaults to `f_bar`.
    Step {
        direction: [f64; 2],
        magnitude: Option<f64>,
        #[serde(default)]
        onset: f64,
    },
    /// `amplitude · sin(2π·frequency·t + phase)` along `direction`.
    Sinusoid {
        direction: [f64; 2],
        amplitude: Option<f64>,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Piecewise constant over [`RANDOM_HOLD`] windows, uniform direction,
    /// magnitude uniform in `[0, f_bar]`.
    BoundedRandom { seed: u64 },
    /// Commands arrive from a live operator session.
    ExternalLive,
}

impl ForceProfile {
    /// Scripted force at time `t`; live profiles return zero here.
    pub fn force_at(&self, t: f64, f_bar: f64) -> Vec2 {
        match *self {
            ForceProfile::Zero | ForceProfile::ExternalLive => Vec2::zeros(),
            ForceProfile::Step { direction, magnitude, onset } => {
                if t < onset {
                    Vec2::zeros()
                } else {
                    unit(direction) * magnitude.unwrap_or(f_bar)
                }
            }
            ForceProfile::Sinusoid { direction, amplitude, frequency, phase } => {
                unit(direction) * (amplitude.unwrap_or(f_bar) * (TAU * frequency * t + phase).sin())
            }
            ForceProfile::BoundedRandom { seed } => {
                // A pure function of (seed, hold index): no state carried between calls.
                let hold = (t / RANDOM_HOLD + 1e-9).floor().max(0.0) as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(hold);
                let angle = rng.random_range(0.0..TAU);
                let magnitude = f_bar * rng.random::<f64>();
                Vec2::new(angle.cos(), angle.sin()) * magnitude
            }
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ForceProfile::BoundedRandom { seed } => Some(*seed),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ForceProfile::Zero)
    }

    pub fn is_live(&self) -> bool {
        matches!(self, ForceProfile::ExternalLive)
    }

    fn validate(&self, f_bar: f64) -> Result<()> {
        let check_direction = |d: [f64; 2]| {
            let n = Vec2::from(d).norm();
            if n > 0.0 && n.is_finite() {
                Ok(())
            } else {
                Err(Error::Schema(format!("force direction {d:?} must be a finite non-zero vector")))
            }
        };
        let check_magnitude = |m: Option<f64>| match m {
            Some(m) if !(0.0..=f_bar).contains(&m) => {
                Err(Error::Schema(format!("scripted force magnitude {m} must lie in [0, f_bar = {f_bar}]")))
            }
            _ => Ok(()),
        };
        match *self {
            ForceProfile::Step { direction, magnitude, onset } => {
                check_direction(direction)?;
                check_magnitude(magnitude)?;
                if !onset.is_finite() {
                    return Err(Error::Schema("step onset must be finite".into()));
                }
            }
            ForceProfile::Sinusoid { direction, amplitude, frequency, phase } => {
                check_direction(direction)?;
                check_magnitude(amplitude)?;
                if !(frequency >= 0.0 && frequency.is_finite() && phase.is_finite()) {
                    return Err(Error::Schema("sinusoid frequency and phase must be finite".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn unit(d: [f64; 2]) -> Vec2 {
    Vec2::from(d).normalize()
}

/// Deliberately invalid configurations used to show that the checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegativeControl {
    /// Hold every `K_i` at its initial value.
    #[serde(default)]
    pub freeze_gains: bool,
    /// Multiplies the scripted force, so `‖f‖` may exceed `f_bar`.
    #[serde(default = "unit_scale")]
    pub force_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub model: RobotModel,
    pub x: [f64; 2],
    #[serde(default)]
    pub v: [f64; 2],
}

/// On-disk scenario document (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    /// One-based vertex pairs; robot 1 is the informed robot.
    pub edges: Vec<[usize; 2]>,
    pub robots: Vec<RobotSpec>,
    pub r: f64,
    pub epsilon: f64,
    pub f_bar: f64,
    #[serde(default)]
    pub force: ForceProfile,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub duration: f64,
    #[serde(default)]
    pub heuristics: Heuristics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_control: Option<NegativeControl>,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub tree: TreeNetwork,
    pub models: Vec<RobotModel>,
    pub initial: Vec<RobotState>,
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        let n = file.robots.len();
        let pairs: Vec<(usize, usize)> = file.edges.iter().map(|e| (e[0], e[1])).collect();
        let tree = TreeNetwork::new(n, &pairs).map_err(|e| Error::Schema(e.to_string()))?;
        for (name, v) in [("r", file.r), ("epsilon", file.epsilon), ("dt", file.dt), ("duration", file.duration)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Schema(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(file.f_bar >= 0.0 && file.f_bar.is_finite()) {
            return Err(Error::Schema(format!("f_bar must be non-negative, got {}", file.f_bar)));
        }
        file.force.validate(file.f_bar)?;
        if let Some(nc) = &file.negative_control {
            if !(nc.force_scale >= 0.0 && nc.force_scale.is_finite()) {
                return Err(Error::Schema(format!("force_scale must be non-negative, got {}", nc.force_scale)));
            }
        }
        let mut models = Vec::with_capacity(n);
        let mut initial = Vec::with_capacity(n);
        for (k, spec) in file.robots.iter().enumerate() {
            spec.model.validate().map_err(|e| Error::Schema(format!("robot {}: {e}", k + 1)))?;
            let state = RobotState::new(Vec2::from(spec.x), Vec2::from(spec.v));
            if !state.is_finite() {
                return Err(Error::Schema(format!("robot {} has a non-finite initial state", k + 1)));
            }
            models.push(spec.model);
            initial.push(state);
        }
        Ok(Self { file, tree, models, initial })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn n_robots(&self) -> usize {
        self.models.len()
    }

    pub fn dt(&self) -> f64 {
        self.file.dt
    }

    pub fn n_steps(&self) -> usize {
        (self.file.duration / self.file.dt).round() as usize
    }

    pub fn freeze_gains(&self) -> bool {
        self.file.negative_control.is_some_and(|nc| nc.freeze_gains)
    }

    pub fn force_scale(&self) -> f64 {
        self.file.negative_control.map_or(1.0, |nc| nc.force_scale)
    }

    /// Replaces the seed of a bounded-random profile.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let ForceProfile::BoundedRandom { seed: s } = &mut self.file.force {
            *s = seed;
        }
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        self.file.dt = dt;
        Self::from_file(self.file)
    }

    pub fn with_duration(mut self, duration: f64) -> Result<Self> {
        self.file.duration = duration;
        Self::from_file(self.file)
    }

    /// Scripted force actually applied at `t`, including any negative-control scaling.
    pub fn force_at(&self, t: f64) -> Vec2 {
        self.file.force.force_at(t, self.file.f_bar) * self.force_scale()
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.file).expect("scenario serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn bounds(&self) -> Vec<ModelBounds> {
        self.models.iter().map(RobotModel::bounds).collect()
    }

    pub fn design_with(&self, bounds: &[ModelBounds]) -> Result<DesignOutcome> {
        design_gains(&DesignProblem {
            tree: &self.tree,
            bounds,
            initial: &self.initial,
            r: self.file.r,
            epsilon: self.file.epsilon,
            f_bar: self.file.f_bar,
            heuristics: self.file.heuristics,
        })
    }

    pub fn design(&self) -> Result<DesignOutcome> {
        self.design_with(&self.bounds())
    }
}
