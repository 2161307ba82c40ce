//! The diffuse-interface model: time stepping, equilibria of the transverse
//! problem and the selection of the variational wave speed.

mod equilibrium;
mod pinned;
mod stepper;

pub use equilibrium::{find_equilibrium_v, second_variation_min, EquilibriumResult};
pub use pinned::{
    find_c_dagger_eps, front_seed, leading_edge, measure_speed_dynamic, minimize_phi_pinned, verify_cvar, CvarReport,
    DiffuseSpeed, DynamicTrace, PinnedClass, PinnedOutcome,
};
pub use stepper::{RdStepper, StepInfo, BLOWUP_LIMIT};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functionals::FunctionalError;
use crate::model::{CrossSection, CylinderGrid, ModelError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiffuseError {
    #[error("blow-up: |u| exceeded {BLOWUP_LIMIT} at t = {time}")]
    BlowUp { time: f64 },
    #[error("no-crossing: {0}")]
    NoCrossing(String),
    #[error("escape-to-zero: the front collapsed at t = {time}")]
    EscapeToZero { time: f64 },
    #[error("non-convergent drift: slopes {first} and {second} differ by more than {tol}")]
    NonConvergentDrift { first: f64, second: f64, tol: f64 },
    #[error("equilibrium iteration diverged: {0}")]
    Divergence(String),
    #[error("bracket never classified: {0}")]
    Unclassified(String),
    #[error("invalid run parameters: {0}")]
    Parameter(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

/// Lab-frame window management for dynamic runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowShift {
    Fixed,
    /// Advance by whole cells whenever the leading edge passes the given
    /// fraction of the window.
    FollowFront { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffuseRunParams {
    pub eps: f64,
    pub dt: f64,
    /// Horizon of a dynamic run, and of the first pinned relaxation.
    pub max_time: f64,
    /// Horizon of each warm-started pinned relaxation during bisection.
    pub warm_time: f64,
    /// Pinned drift below this magnitude counts as critical.
    pub drift_tol: f64,
    /// Largest admissible change between the two half-window slopes of a
    /// dynamic run.
    pub slope_tol: f64,
    /// Trailing fraction of a dynamic run used for the slope fit.
    pub fit_fraction: f64,
    pub sample_every: usize,
    pub theta_pin: f64,
    pub window_shift: WindowShift,
    /// Bisection stops once the bracket is narrower than this.
    pub tol_c: f64,
    /// Relative widening of the sharp bracket `[mean g, sup g] / c_W`.
    pub bracket_margin: f64,
    /// The range check reports nodes outside `[−δ, 1 + δ]`.
    pub range_delta: f64,
}

impl DiffuseRunParams {
    pub fn for_eps(eps: f64) -> Self {
        Self {
            eps,
            dt: 0.1 * eps * eps,
            max_time: 200.0 * eps * eps,
            warm_time: 40.0 * eps * eps,
            drift_tol: 1e-6,
            slope_tol: 5e-3,
            fit_fraction: 0.5,
            sample_every: 10,
            theta_pin: 0.5,
            window_shift: WindowShift::FollowFront { fraction: 0.5 },
            tol_c: 1e-5,
            bracket_margin: 0.2,
            range_delta: 0.1,
        }
    }

    /// Interface-resolving grid: `Δy ≤ ε/4`, `Δz = ε/8`, window `[−16ε, 16ε]`.
    pub fn default_grid(&self, length: f64) -> Result<CylinderGrid, DiffuseError> {
        let cross = CrossSection::with_max_spacing(length, 0.25 * self.eps)?;
        Ok(CylinderGrid::new(cross, -16.0 * self.eps, 16.0 * self.eps, 0.125 * self.eps)?)
    }

    pub fn validate(&self, grid: &CylinderGrid) -> Result<(), DiffuseError> {
        let eps = self.eps;
        let bad = |m: String| Err(DiffuseError::Parameter(m));
        if !(eps > 0.0 && self.dt > 0.0 && self.tol_c > 0.0 && self.drift_tol > 0.0) {
            return bad("eps, dt, tol_c and drift_tol must be positive".into());
        }
        if grid.dz() > 0.25 * eps * (1.0 + 1e-9) || grid.dy() > 0.25 * eps * (1.0 + 1e-9) {
            return bad(format!(
                "grid spacing (dy = {}, dz = {}) exceeds eps/4 = {}",
                grid.dy(),
                grid.dz(),
                0.25 * eps
            ));
        }
        if !(self.theta_pin > 0.0 && self.theta_pin < 1.0) {
            return bad(format!("theta_pin = {}", self.theta_pin));
        }
        if !(self.fit_fraction > 0.0 && self.fit_fraction <= 1.0) || self.sample_every == 0 {
            return bad("fit_fraction must lie in (0, 1] and sample_every be positive".into());
        }
        grid.check_resolution(eps)?;
        Ok(())
    }
}
