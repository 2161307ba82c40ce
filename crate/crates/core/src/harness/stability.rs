//! Long-time behaviour of front-like data in the frame moving with `c†_ε`.
//!
//! The plateau is taken first (t → ∞ at fixed ε) and only then compared
//! across ε. The `distances` table of several reports read at a common time
//! gives the reversed limit order, which is kept as a diagnostic only.

use serde::{Deserialize, Serialize};

use super::{default_window, l1_distance_to_subgraph, DiffuseScaling, HarnessError};
use crate::diffuse::{find_c_dagger_eps, leading_edge, RdStepper};
use crate::model::{CrossSection, CylinderGrid, Field, ForcingDescriptor, Profile, WellDescriptor};
use crate::sharp::{find_c_dagger, SharpRunParams};

/// Initial data, with the interface at `offset + amplitude·cos(πy/L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDatum {
    /// Indicator of the subgraph.
    Step { amplitude: f64, offset: f64 },
    /// `½(1 − tanh((z − h(y))/width))`.
    Smooth { amplitude: f64, offset: f64, width: f64 },
}

impl InitialDatum {
    pub fn sample(&self, grid: &CylinderGrid) -> Field {
        let len = grid.cross().length();
        let h = |y: f64, a: f64, o: f64| o + a * (std::f64::consts::PI * y / len).cos();
        match *self {
            InitialDatum::Step { amplitude, offset } => {
                Field::from_fn(grid.clone(), |y, z| if z < h(y, amplitude, offset) { 1.0 } else { 0.0 })
            }
            InitialDatum::Smooth { amplitude, offset, width } => Field::from_fn(grid.clone(), |y, z| {
                0.5 * (1.0 - ((z - h(y, amplitude, offset)) / width).tanh())
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub well: WellDescriptor,
    pub forcing: ForcingDescriptor,
    pub length: f64,
    pub eps: f64,
    #[serde(default)]
    pub diffuse: DiffuseScaling,
    #[serde(default)]
    pub sharp: SharpRunParams,
    pub sharp_nodes: usize,
    /// Comparison half-height `M`; defaults to `2 + sup ψ − inf ψ`.
    #[serde(default)]
    pub window: Option<f64>,
    /// The evolution window is `[−(M + pad), M + pad]`.
    pub pad: f64,
    pub max_time: f64,
    pub checkpoints: usize,
    /// A plateau is reached once consecutive distances differ by less than
    /// this relative amount.
    pub plateau_tol: f64,
    /// Frame speed; computed by the pinned bisection when absent.
    #[serde(default)]
    pub c_dagger_eps: Option<f64>,
    /// Bounds of the admissibility check `−δ ≤ u₀ ≤ 1 + δ`.
    pub admissibility_delta: f64,
}

impl StabilityConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.eps > 0.0 && self.length > 0.0 && self.max_time > 0.0 && self.pad >= 0.0) {
            return Err(HarnessError::Parameter("eps, length and max_time must be positive".into()));
        }
        if self.checkpoints < 2 || !(self.plateau_tol > 0.0) || !(self.admissibility_delta > 0.0) {
            return Err(HarnessError::Parameter("need at least two checkpoints and positive tolerances".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub eps: f64,
    pub c_dagger_eps: f64,
    pub window: f64,
    /// `|Σ_M| = 2M|Ω|`.
    pub window_measure: f64,
    /// Final leading ½-crossing in the moving frame.
    pub r_infinity: f64,
    pub times: Vec<f64>,
    /// Aligned `L¹(Σ_M)` distance to `χ_{S_ψ}` at each checkpoint.
    pub distances: Vec<f64>,
    pub initial_distance: f64,
    pub plateau: f64,
    pub plateau_reached: bool,
    pub psi: Profile,
    #[serde(skip)]
    pub final_field: Field,
}

fn check_front_like(u: &Field, delta: f64) -> Result<(), HarnessError> {
    let (lo, hi) = u.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if lo < -delta || hi > 1.0 + delta {
        return Err(HarnessError::NotFrontLike(format!("values span [{lo}, {hi}]")));
    }
    let nz = u.grid.nz();
    for i in 0..u.grid.ny() {
        let col = u.column(i);
        if col[0] < 1.0 - delta || col[nz - 1] > delta {
            return Err(HarnessError::NotFrontLike(format!(
                "column {i} runs from {} to {} across the window",
                col[0],
                col[nz - 1]
            )));
        }
    }
    Ok(())
}

/// Evolves the datum in the frame moving with `c†_ε` and records the aligned
/// distance to the subgraph of the sharp profile at evenly spaced times. All
/// snapshots are aligned with the final leading edge.
pub fn stability_experiment(cfg: &StabilityConfig, initial: &InitialDatum) -> Result<StabilityReport, HarnessError> {
    cfg.validate()?;
    let well = cfg.well.build();
    let eps = cfg.eps;
    let sharp_cross = CrossSection::new(cfg.length, cfg.sharp_nodes)?;
    let sharp_forcing = cfg.forcing.build_at(&sharp_cross, None)?;
    let sharp_psi = find_c_dagger(&cfg.sharp, &well, &sharp_forcing)?.psi;
    if sharp_psi.has_mask() {
        return Err(HarnessError::Precondition("the sharp profile has fingers; no subgraph limit to compare".into()));
    }
    let m = cfg.window.unwrap_or_else(|| default_window(&sharp_psi));
    let cross = cfg.diffuse.cross(eps, cfg.length)?;
    let forcing = cfg.forcing.build_at(&cross, Some(eps))?;
    let params = cfg.diffuse.params(eps);
    let c = match cfg.c_dagger_eps {
        Some(c) => c,
        None => find_c_dagger_eps(&cfg.diffuse.grid(eps, cfg.length)?, &params, &well, &forcing, false)?.speed.c,
    };
    let psi = Profile::from_fn(cross.clone(), |y| sharp_psi.interpolate(y));
    let z = m + cfg.pad;
    let grid = CylinderGrid::new(cross.clone(), -z, z, cfg.diffuse.dz_over_eps * eps)?;
    params.validate(&grid)?;
    let mut u = initial.sample(&grid);
    check_front_like(&u, cfg.admissibility_delta)?;

    let mut stepper = RdStepper::new(&grid, eps, params.dt, c, &well, &forcing)?;
    let total = (cfg.max_time / params.dt).ceil() as usize;
    let every = (total / cfg.checkpoints).max(1);
    let mut times = vec![0.0];
    let mut snapshots = vec![u.values.clone()];
    for n in 1..=total {
        stepper.step(&mut u)?;
        if n % every == 0 || n == total {
            times.push(u.time);
            snapshots.push(u.values.clone());
        }
    }
    let r_infinity = leading_edge(&u, 0.5)?;
    let distances: Vec<f64> = snapshots
        .into_iter()
        .map(|values| {
            let f = Field {
                grid: grid.clone(),
                values,
                time: 0.0,
            };
            l1_distance_to_subgraph(&f, r_infinity, &psi, m)
        })
        .collect();
    let k = distances.len();
    let plateau = distances[k - 1];
    let plateau_reached = (distances[k - 1] - distances[k - 2]).abs() <= cfg.plateau_tol * plateau.abs().max(f64::MIN_POSITIVE);
    Ok(StabilityReport {
        eps,
        c_dagger_eps: c,
        window: m,
        window_measure: 2.0 * m * cross.length(),
        r_infinity,
        times,
        initial_distance: distances[0],
        distances,
        plateau,
        plateau_reached,
        psi,
        final_field: u,
    })
}
