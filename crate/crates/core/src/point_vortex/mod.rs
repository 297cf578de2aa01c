//! Traveling capillary-gravity waves carrying a point vortex of strength `ε`
//! at the origin, in unscaled variables `(ε, η, ψ, c)`.

mod branch_io;
mod continuation;
mod newton;
mod predictor;
mod residual;

pub use branch_io::{read_branch, write_branch, write_profile_csv, BranchHeader};
pub use continuation::{continue_branch, extend_branch, Branch, BranchPoint, ContinuationConfig, Flags, StopReason};
pub(crate) use newton::{projected_residual_norm, surface_solve};
pub(crate) use residual::{dtn_config, Frame};
pub use newton::{newton_solve, Constraint, NewtonConfig, NewtonReport};
pub use predictor::asymptotic_predictor;
pub use residual::{bernoulli_constant, jacobian_apply, residual, Direction, Residual};

use crate::error::{Error, Result};
use crate::spectral::{max_abs, LineField, LineGrid, PeriodicField, PeriodicGrid};
use crate::vortex_green::{Setting, VortexGreen};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub g: f64,
    pub alpha: f64,
    pub setting: Setting,
}

impl PhysicalParams {
    pub fn new(g: f64, alpha: f64, setting: Setting) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidArgument(format!("gravity must be positive, got {g}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("surface tension must be positive, got {alpha}")));
        }
        if let Setting::Periodic { l } = setting {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidArgument(format!("L must be positive, got {l}")));
            }
        }
        Ok(Self { g, alpha, setting })
    }

    pub fn green(&self) -> VortexGreen {
        VortexGreen { setting: self.setting }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.setting, Setting::Periodic { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceGrid {
    Periodic(PeriodicGrid),
    Line(LineGrid),
}

impl SurfaceGrid {
    /// The grid seen as one period; the line wraps with `L = half_width/π`.
    pub fn periodic(&self) -> PeriodicGrid {
        match self {
            SurfaceGrid::Periodic(g) => *g,
            SurfaceGrid::Line(g) => g.periodic(),
        }
    }

    pub fn n(&self) -> usize {
        self.periodic().n()
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.periodic().nodes()
    }

    /// Grid matching the physical setting with default sizes.
    pub fn for_setting(setting: Setting, n: usize) -> Result<Self> {
        Ok(match setting {
            Setting::Periodic { l } => SurfaceGrid::Periodic(PeriodicGrid::new(l, n)?),
            Setting::Localized => SurfaceGrid::Line(LineGrid::new(DEFAULT_HALF_WIDTH, n)?),
        })
    }
}

pub const DEFAULT_HALF_WIDTH: f64 = 200.0;
pub const DEFAULT_LINE_POINTS: usize = 4096;
pub const DEFAULT_PERIODIC_MODES: usize = 128;
pub const DEFAULT_SEPARATION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct PointVortexState {
    pub epsilon: f64,
    pub eta: Vec<f64>,
    pub psi: Vec<f64>,
    pub c: f64,
    pub grid: SurfaceGrid,
}

impl PointVortexState {
    pub fn trivial(grid: SurfaceGrid) -> Self {
        let n = grid.n();
        Self { epsilon: 0.0, eta: vec![0.0; n], psi: vec![0.0; n], c: 0.0, grid }
    }

    pub fn eta_field(&self) -> PeriodicField {
        PeriodicField { grid: self.grid.periodic(), values: self.eta.clone() }
    }

    pub fn psi_field(&self) -> PeriodicField {
        PeriodicField { grid: self.grid.periodic(), values: self.psi.clone() }
    }

    pub fn eta_line(&self) -> Option<LineField> {
        match self.grid {
            SurfaceGrid::Line(g) => Some(LineField { grid: g, values: self.eta.clone() }),
            SurfaceGrid::Periodic(_) => None,
        }
    }

    /// `max(|ε|, ‖η‖∞, ‖ψ‖∞, |c|)`
    pub fn norm(&self) -> f64 {
        self.epsilon.abs().max(max_abs(&self.eta)).max(max_abs(&self.psi)).max(self.c.abs())
    }

    /// Surface height above the vortex, `1 + η(0)`.
    pub fn height_at_crest_axis(&self) -> f64 {
        1.0 + self.eta[self.grid.n() / 2]
    }

    pub fn check(&self, params: &PhysicalParams, separation: f64) -> Result<()> {
        let n = self.grid.n();
        if self.eta.len() != n || self.psi.len() != n {
            return Err(Error::InvalidArgument("state fields do not match the grid".into()));
        }
        match (params.setting, self.grid) {
            (Setting::Periodic { l }, SurfaceGrid::Periodic(g)) if (g.l() - l).abs() <= 1e-14 * l => {}
            (Setting::Localized, SurfaceGrid::Line(_)) => {}
            _ => return Err(Error::InvalidArgument("grid does not match the physical setting".into())),
        }
        let m = self.eta.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(1.0 + m > separation) {
            return Err(Error::Domain(format!("surface too close to the vortex: 1 + min η = {:.3e}", 1.0 + m)));
        }
        Ok(())
    }
}
