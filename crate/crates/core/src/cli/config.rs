//! Run configuration, read from a TOML file.
//!
//! ```toml
//! problem = "point-vortex-periodic"   # or "point-vortex-localized", "vortex-patch"
//! output_dir = "out"
//! seed = 0
//!
//! [physics]
//! g = 1.0
//! alpha = 1.0
//! L = 1.0                             # period 2πL, periodic problem only
//!
//! [grid]
//! n = 128                             # surface nodes, a power of two
//! half_width = 200.0                  # localized problems
//!
//! [solver]
//! tol = 1e-10
//! max_iter = 25
//!
//! [continuation]
//! ds = 0.01
//! n_steps = 20
//! direction = 1                       # or -1
//! blowup_threshold = 100.0
//! eps_floor = 1e-6
//! nontrivial_floor = 1e-4
//! separation_floor = 0.05
//! stop_on_flag = true
//!
//! [patch]
//! epsilon = 0.01
//! delta = 0.05
//! tau = 0.1
//! strength = "quadratic"              # or "exponential"
//! n_beta = 32
//! ```
//!
//! Every key except `problem` has a default.

use crate::error::{Error, Result};
use crate::point_vortex::{ContinuationConfig, NewtonConfig, PhysicalParams, SurfaceGrid, DEFAULT_HALF_WIDTH, DEFAULT_LINE_POINTS, DEFAULT_PERIODIC_MODES};
use crate::spectral::{LineGrid, PeriodicGrid};
use crate::vortex_green::Setting;
use crate::vortex_patch::{PatchConfig, StrengthFn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    PointVortexLocalized,
    PointVortexPeriodic,
    VortexPatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub physics: Physics,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default)]
    pub continuation: Continuation,
    #[serde(default)]
    pub patch: Patch,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Physics {
    pub g: f64,
    pub alpha: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self { g: 1.0, alpha: 1.0, l: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    pub n: Option<usize>,
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Solver {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for Solver {
    fn default() -> Self {
        let n = NewtonConfig::default();
        Self { tol: n.tol, max_iter: n.max_iter }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Continuation {
    pub ds: f64,
    pub n_steps: usize,
    pub max_halvings: usize,
    pub direction: i32,
    pub blowup_threshold: f64,
    pub eps_floor: f64,
    pub nontrivial_floor: f64,
    pub separation_floor: f64,
    pub stop_on_flag: bool,
}

impl Default for Continuation {
    fn default() -> Self {
        let c = ContinuationConfig::default();
        Self {
            ds: c.ds,
            n_steps: c.n_steps,
            max_halvings: c.max_halvings,
            direction: 1,
            blowup_threshold: c.blowup_threshold,
            eps_floor: c.eps_floor,
            nontrivial_floor: c.nontrivial_floor,
            separation_floor: c.separation_floor,
            stop_on_flag: c.stop_on_flag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Patch {
    pub epsilon: f64,
    pub delta: f64,
    pub tau: f64,
    pub strength: String,
    pub n_beta: usize,
    pub tol: f64,
    pub max_epsilon: f64,
    pub max_delta: f64,
    pub max_tau: f64,
}

impl Default for Patch {
    fn default() -> Self {
        let p = PatchConfig::default();
        Self {
            epsilon: 0.01,
            delta: 0.05,
            tau: 0.1,
            strength: "quadratic".into(),
            n_beta: p.n_beta,
            tol: p.tol,
            max_epsilon: p.max_epsilon,
            max_delta: p.max_delta,
            max_tau: p.max_tau,
        }
    }
}

/// A validated configuration together with the SHA-256 of its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub hash: String,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub fn parse_config(text: &str) -> Result<LoadedConfig> {
    let config: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    config.validate()?;
    let hash = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    Ok(LoadedConfig { config, hash })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let p = &self.physics;
        for (name, v) in [("physics.g", p.g), ("physics.alpha", p.alpha), ("physics.L", p.l)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        if let Some(n) = self.grid.n {
            if n < 8 || !n.is_power_of_two() {
                return Err(invalid(format!("grid.n must be a power of two of at least 8, got {n}")));
            }
        }
        if let Some(h) = self.grid.half_width {
            if !(h > 0.0 && h.is_finite()) {
                return Err(invalid("grid.half_width must be positive"));
            }
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(invalid("solver.tol and solver.max_iter must be positive"));
        }
        self.continuation_config().validate()?;
        let q = &self.patch;
        if StrengthFn::by_name(&q.strength).is_none() {
            return Err(invalid(format!("unknown strength function {:?}", q.strength)));
        }
        if !(q.tol > 0.0) {
            return Err(invalid("patch.tol must be positive"));
        }
        if q.n_beta < 3 {
            return Err(invalid("patch.n_beta must be at least 3"));
        }
        if self.problem == Problem::VortexPatch {
            if !(q.epsilon.abs() <= q.max_epsilon && (0.0..=q.max_delta).contains(&q.delta) && q.tau.abs() <= q.max_tau) {
                return Err(invalid(format!(
                    "(ε, δ, τ) = ({}, {}, {}) outside |ε| ≤ {}, 0 ≤ δ ≤ {}, |τ| ≤ {}",
                    q.epsilon, q.delta, q.tau, q.max_epsilon, q.max_delta, q.max_tau
                )));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        let setting = match self.problem {
            Problem::PointVortexPeriodic => Setting::Periodic { l: self.physics.l },
            _ => Setting::Localized,
        };
        PhysicalParams::new(self.physics.g, self.physics.alpha, setting)
    }

    pub fn surface_grid(&self) -> Result<SurfaceGrid> {
        Ok(match self.problem {
            Problem::PointVortexPeriodic => {
                SurfaceGrid::Periodic(PeriodicGrid::new(self.physics.l, self.grid.n.unwrap_or(DEFAULT_PERIODIC_MODES))?)
            }
            _ => SurfaceGrid::Line(LineGrid::new(
                self.grid.half_width.unwrap_or(DEFAULT_HALF_WIDTH),
                self.grid.n.unwrap_or(DEFAULT_LINE_POINTS),
            )?),
        })
    }

    pub fn newton_config(&self) -> NewtonConfig {
        NewtonConfig { tol: self.solver.tol, max_iter: self.solver.max_iter, ..NewtonConfig::default() }
    }

    pub fn continuation_config(&self) -> ContinuationConfig {
        let c = &self.continuation;
        ContinuationConfig {
            ds: c.ds,
            n_steps: c.n_steps,
            max_halvings: c.max_halvings,
            newton: self.newton_config(),
            blowup_threshold: c.blowup_threshold,
            eps_floor: c.eps_floor,
            nontrivial_floor: c.nontrivial_floor,
            separation_floor: c.separation_floor,
            stop_on_flag: c.stop_on_flag,
            direction: c.direction as f64,
        }
    }

    pub fn patch_config(&self) -> PatchConfig {
        let q = &self.patch;
        let d = PatchConfig::default();
        PatchConfig {
            n_beta: q.n_beta,
            half_width: self.grid.half_width.unwrap_or(d.half_width),
            n_line: self.grid.n.unwrap_or(d.n_line),
            tol: q.tol,
            newton: NewtonConfig { max_iter: self.solver.max_iter, ..d.newton },
            max_epsilon: q.max_epsilon,
            max_delta: q.max_delta,
            max_tau: q.max_tau,
            ..d
        }
    }

    pub fn strength(&self) -> StrengthFn {
        StrengthFn::by_name(&self.patch.strength).expect("validated strength name")
    }
}
