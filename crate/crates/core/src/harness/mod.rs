//! Experiments: the ε-sweep, the long-time stability run and the density
//! audits of diffuse minimizers.

mod density;
mod levelset;
mod stability;
mod sweep;

pub use density::{
    density_audit_L2, density_audit_levelset, interface_centers, DensityAudit, DensityRow, LevelSetAudit, LevelSetRow,
};
pub use levelset::{
    aligned_l1_difference, directed_hausdorff, graph_segments, hausdorff, hausdorff_level_set, l1_distance_to_subgraph,
    level_set_segments, HausdorffReport, Point, Segment,
};
pub use stability::{stability_experiment, InitialDatum, StabilityConfig, StabilityReport};
pub use sweep::{default_window, run_eps_sweep, SweepConfig, SweepReport, SweepRow, SweepSummary};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conditions::ConditionsError;
use crate::diffuse::{DiffuseError, DiffuseRunParams, WindowShift};
use crate::functionals::FunctionalError;
use crate::model::{CrossSection, CylinderGrid, ModelError};
use crate::sharp::SharpError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("the level set {{u = {0}}} is empty in the window")]
    EmptyLevelSet(f64),
    #[error("precondition-empty: {0}")]
    PreconditionEmpty(String),
    #[error("initial datum is not front-like: {0}")]
    NotFrontLike(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid harness parameters: {0}")]
    Parameter(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Diffuse(#[from] DiffuseError),
    #[error(transparent)]
    Sharp(#[from] SharpError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Conditions(#[from] ConditionsError),
}

/// Diffuse run parameters expressed relative to `ε`, so one description
/// serves a whole sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffuseScaling {
    pub dt_over_eps2: f64,
    pub max_time_over_eps2: f64,
    pub warm_time_over_eps2: f64,
    pub dz_over_eps: f64,
    pub dy_over_eps: f64,
    /// The window is `[−w ε, w ε]`.
    pub half_window_over_eps: f64,
    pub drift_tol: f64,
    pub slope_tol: f64,
    pub tol_c: f64,
    pub bracket_margin: f64,
    pub fit_fraction: f64,
    pub sample_every: usize,
    pub theta_pin: f64,
}

impl Default for DiffuseScaling {
    fn default() -> Self {
        let p = DiffuseRunParams::for_eps(1.0);
        Self {
            dt_over_eps2: p.dt,
            max_time_over_eps2: p.max_time,
            warm_time_over_eps2: p.warm_time,
            dz_over_eps: 0.125,
            dy_over_eps: 0.25,
            half_window_over_eps: 16.0,
            drift_tol: p.drift_tol,
            slope_tol: p.slope_tol,
            tol_c: p.tol_c,
            bracket_margin: p.bracket_margin,
            fit_fraction: p.fit_fraction,
            sample_every: p.sample_every,
            theta_pin: p.theta_pin,
        }
    }
}

impl DiffuseScaling {
    pub fn params(&self, eps: f64) -> DiffuseRunParams {
        let e2 = eps * eps;
        DiffuseRunParams {
            eps,
            dt: self.dt_over_eps2 * e2,
            max_time: self.max_time_over_eps2 * e2,
            warm_time: self.warm_time_over_eps2 * e2,
            drift_tol: self.drift_tol,
            slope_tol: self.slope_tol,
            fit_fraction: self.fit_fraction,
            sample_every: self.sample_every,
            theta_pin: self.theta_pin,
            window_shift: WindowShift::FollowFront { fraction: 0.5 },
            tol_c: self.tol_c,
            bracket_margin: self.bracket_margin,
            range_delta: 0.1,
        }
    }

    pub fn cross(&self, eps: f64, length: f64) -> Result<CrossSection, HarnessError> {
        Ok(CrossSection::with_max_spacing(length, self.dy_over_eps * eps)?)
    }

    pub fn grid(&self, eps: f64, length: f64) -> Result<CylinderGrid, HarnessError> {
        let w = self.half_window_over_eps * eps;
        Ok(CylinderGrid::new(self.cross(eps, length)?, -w, w, self.dz_over_eps * eps)?)
    }
}
