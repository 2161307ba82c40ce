//! The sharp-interface model: forced curvature flow of graphs, the convex
//! functional `G_c` and the maximal speed `c†`.

mod flow;
mod gc;

pub use flow::{measure_speed_fmc, step_fmc, FmcOutcome, GRADIENT_LIMIT};
pub use gc::{find_c_dagger, m_of_c_scan, minimize_G_c, project_weighted_simplex, GcMinimizerResult, SharpSpeed};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DoubleWell, Forcing, ModelError, Profile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SharpError {
    #[error("gradient blow-up: |h_y| exceeded {limit} at t = {time}")]
    GradientBlowUp { limit: f64, time: f64 },
    #[error("non-convergence: {0}")]
    NonConvergence(String),
    #[error("bracket endpoints misclassified: m({lo}) = {m_lo}, m({hi}) = {m_hi}")]
    Bracket { lo: f64, hi: f64, m_lo: f64, m_hi: f64 },
    #[error("invalid sharp parameters: {0}")]
    Parameter(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharpRunParams {
    /// Time step as a multiple of `Δy²`.
    pub dt_factor: f64,
    pub max_time: f64,
    /// Shape drift per unit time below which the flow counts as stationary.
    pub shape_tol: f64,
    /// Shape drift is measured over windows of this length.
    pub check_interval: f64,
    /// Smoothing parameters of the surface term, strictly decreasing.
    pub smoothing: Vec<f64>,
    pub max_iter: usize,
    /// Stopping tolerance on the norm of the projected gradient mapping.
    pub grad_tol: f64,
    pub tol_c: f64,
    /// Relative widening of the bracket `[mean g, sup g] / c_W`.
    pub bracket_margin: f64,
    /// Nodes with `ζ` below this fraction of `max ζ` are outside the support.
    pub finger_tol: f64,
    /// Euler-Lagrange residuals pass below `el_tol · Δy²`.
    pub el_tol: f64,
}

impl Default for SharpRunParams {
    fn default() -> Self {
        Self {
            dt_factor: 0.4,
            max_time: 20.0,
            shape_tol: 1e-6,
            check_interval: 0.25,
            smoothing: vec![1e-3, 1e-4, 1e-5],
            max_iter: 200_000,
            grad_tol: 1e-10,
            tol_c: 1e-6,
            bracket_margin: 0.05,
            finger_tol: 1e-8,
            el_tol: 10.0,
        }
    }
}

impl SharpRunParams {
    pub fn validate(&self) -> Result<(), SharpError> {
        let bad = |m: &str| Err(SharpError::Parameter(m.into()));
        if !(self.dt_factor > 0.0 && self.dt_factor <= 0.4) {
            return bad("dt_factor must lie in (0, 0.4]");
        }
        if self.smoothing.is_empty()
            || self.smoothing.windows(2).any(|w| w[1] >= w[0])
            || *self.smoothing.last().unwrap() < 1e-8
        {
            return bad("smoothing must decrease strictly and stay at or above 1e-8");
        }
        if !(self.max_time > 0.0
            && self.shape_tol > 0.0
            && self.check_interval > 0.0
            && self.grad_tol > 0.0
            && self.tol_c > 0.0
            && self.el_tol > 0.0)
        {
            return bad("tolerances and horizons must be positive");
        }
        Ok(())
    }
}

/// `ψ = (1/c) ln(cζ)`, masked where `ζ = 0`.
pub fn profile_from_zeta(zeta: &Profile, c: f64) -> Profile {
    let values = zeta
        .values
        .iter()
        .map(|z| if *z > 0.0 { (c * z).ln() / c } else { f64::NEG_INFINITY })
        .collect();
    Profile {
        cross: zeta.cross.clone(),
        values,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerLagrangeReport {
    /// Sup residual over unmasked nodes whose neighbours are unmasked;
    /// boundary nodes use the mirrored ghost.
    pub residual: f64,
    /// Largest one-sided boundary slope.
    pub boundary_slope: f64,
    pub nodes: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Residual of `−(ψ'/√(1+ψ'²))' − g/c_W + c/√(1+ψ'²)` in flux form.
pub fn check_euler_lagrange(psi: &Profile, c: f64, well: &DoubleWell, forcing: &Forcing, el_tol: f64) -> EulerLagrangeReport {
    let n = psi.len();
    let dy = psi.cross.dy();
    let v = &psi.values;
    let g = forcing.g();
    let flux = |p: f64| p / (1.0 + p * p).sqrt();
    let mut residual: f64 = 0.0;
    let mut nodes = 0;
    for i in 0..n {
        let (l, r) = match i {
            0 => (1, 1),
            _ if i == n - 1 => (n - 2, n - 2),
            _ => (i - 1, i + 1),
        };
        if !(v[i].is_finite() && v[l].is_finite() && v[r].is_finite()) {
            continue;
        }
        let (pl, pr) = ((v[i] - v[l]) / dy, (v[r] - v[i]) / dy);
        let pl = if i == 0 { -pr } else { pl };
        let pr = if i == n - 1 { -pl } else { pr };
        let p = 0.5 * (pl + pr);
        let res = -(flux(pr) - flux(pl)) / dy - g[i] / well.c_w() + c / (1.0 + p * p).sqrt();
        residual = residual.max(res.abs());
        nodes += 1;
    }
    let mut boundary_slope: f64 = 0.0;
    if v[0].is_finite() && v[1].is_finite() {
        boundary_slope = boundary_slope.max(((v[1] - v[0]) / dy).abs());
    }
    if v[n - 1].is_finite() && v[n - 2].is_finite() {
        boundary_slope = boundary_slope.max(((v[n - 1] - v[n - 2]) / dy).abs());
    }
    let tolerance = el_tol * dy * dy;
    EulerLagrangeReport {
        residual,
        boundary_slope,
        nodes,
        tolerance,
        pass: nodes > 0 && residual <= tolerance,
    }
}
