//! Empirical density estimates for diffuse minimizers, on fields already
//! rescaled to the stretched variables `x/ε`. Radii are in those units, and
//! balls are taken in the cylinder reflected across its lateral walls.

use serde::Serialize;

use super::HarnessError;
use crate::model::Field;
use crate::numerics::fit_power_law;

/// For every `stride`-th column, the node nearest to the leading
/// `θ`-crossing.
pub fn interface_centers(u: &Field, theta: f64, stride: usize) -> Vec<(usize, usize)> {
    let nz = u.grid.nz();
    (0..u.grid.ny())
        .step_by(stride.max(1))
        .filter_map(|i| {
            let col = u.column(i);
            let j = (0..nz - 1).rev().find(|&j| col[j] >= theta && col[j + 1] < theta)?;
            let t = (col[j] - theta) / (col[j] - col[j + 1]);
            Some((i, if t > 0.5 { j + 1 } else { j }))
        })
        .collect()
}

/// Column of the evenly reflected cylinder that lattice column `k` maps to.
fn reflect(k: i64, ny: usize) -> usize {
    let period = 2 * (ny as i64 - 1);
    let m = k.rem_euclid(period);
    if m < ny as i64 {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// `Σ w f(u)` and `Σ w` over `B(center, R)` for each radius, in one pass.
/// Balls live in the cylinder reflected evenly across the lateral walls, so
/// a Neumann field is audited without clipping near the walls.
fn ball_sums<F: Fn(f64) -> f64>(u: &Field, center: (usize, usize), radii: &[f64], f: F) -> Vec<(f64, f64)> {
    let g = &u.grid;
    let (dy, dz) = (g.dy(), g.dz());
    let zc = g.z(center.1);
    let r_max = radii.iter().cloned().fold(0.0, f64::max);
    let mut sums = vec![(0.0, 0.0); radii.len()];
    let reach = (r_max / dy).ceil() as i64;
    let j_lo = ((zc - r_max - g.z(0)) / dz).floor().max(0.0) as usize;
    let j_hi = (((zc + r_max - g.z(0)) / dz).ceil() as usize).min(g.nz() - 1);
    let w = dy * dz;
    for k in -reach..=reach {
        let i = reflect(center.0 as i64 + k, g.ny());
        let off = k as f64 * dy;
        for j in j_lo..=j_hi {
            let d = (off * off + (g.z(j) - zc).powi(2)).sqrt();
            let v = f(u.at(i, j));
            for (n, r) in radii.iter().enumerate() {
                if d <= *r {
                    sums[n].0 += w * v;
                    sums[n].1 += w;
                }
            }
        }
    }
    sums
}

fn ball_fits(u: &Field, center: (usize, usize), r: f64) -> bool {
    let g = &u.grid;
    let z = g.z(center.1);
    z - r >= g.z(0) && z + r <= g.z(g.nz() - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityRow {
    pub center: (f64, f64),
    /// `R ↦ mean of u²` over `B(center, R)`.
    pub mean_u2: Vec<f64>,
    /// `R ↦ mean of (1 − u)²`.
    pub mean_complement: Vec<f64>,
    /// The hypothesis at `r₀` holds for `u²`, resp. `(1 − u)²`.
    pub active_u2: bool,
    pub active_complement: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityAudit {
    pub radii: Vec<f64>,
    pub alpha: f64,
    /// Smallest `r₀`-average of `u²` over the audited centers.
    pub fitted_alpha: f64,
    /// Smallest `r₀`-average of `(1 − u)²`.
    pub fitted_alpha_complement: f64,
    pub rows: Vec<DensityRow>,
    /// Centers whose largest ball leaves the window.
    pub skipped: usize,
    pub pass: bool,
}

/// Wherever the `r₀`-ball mean of `u²` is at least `α`, checks that it stays
/// at least `α` for every integer `R ∈ [r₀, R₀]`; likewise for `(1 − u)²`.
/// With `alpha = None` the audit runs at the fitted `α`.
#[allow(non_snake_case)]
pub fn density_audit_L2(
    u: &Field,
    centers: &[(usize, usize)],
    alpha: Option<f64>,
    r0: usize,
    R0: usize,
) -> Result<DensityAudit, HarnessError> {
    if r0 == 0 || r0 + 1 > R0 {
        return Err(HarnessError::Parameter(format!("need 1 <= r0 < R0, got r0 = {r0}, R0 = {R0}")));
    }
    let radii: Vec<f64> = (r0..=R0).map(|r| r as f64).collect();
    let mut skipped = 0;
    let mut tables = Vec::new();
    for &c in centers {
        if !ball_fits(u, c, R0 as f64) {
            skipped += 1;
            continue;
        }
        let mean = |s: Vec<(f64, f64)>| -> Vec<f64> { s.into_iter().map(|(a, w)| a / w).collect() };
        let u2 = mean(ball_sums(u, c, &radii, |v| v * v));
        let comp = mean(ball_sums(u, c, &radii, |v| (1.0 - v) * (1.0 - v)));
        tables.push((c, u2, comp));
    }
    let fitted_alpha = tables.iter().map(|t| t.1[0]).fold(f64::INFINITY, f64::min);
    let fitted_alpha_complement = tables.iter().map(|t| t.2[0]).fold(f64::INFINITY, f64::min);
    let alpha = alpha.unwrap_or(fitted_alpha);
    let cross = u.grid.cross();
    let rows: Vec<DensityRow> = tables
        .into_iter()
        .map(|(c, u2, comp)| {
            let active_u2 = u2[0] >= alpha;
            let active_complement = comp[0] >= alpha;
            let holds = |t: &[f64], active: bool| !active || t.iter().all(|m| *m >= alpha);
            let pass = holds(&u2, active_u2) && holds(&comp, active_complement);
            DensityRow {
                center: (cross.y(c.0), u.grid.z(c.1)),
                mean_u2: u2,
                mean_complement: comp,
                active_u2,
                active_complement,
                pass,
            }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    Ok(DensityAudit {
        radii,
        alpha,
        fitted_alpha,
        fitted_alpha_complement,
        rows,
        skipped,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetRow {
    pub center: (f64, f64),
    /// `μ_{β,R} = |{|u| > β} ∩ B(center, R)|`.
    pub mu: Vec<f64>,
    /// Log-log slope of `μ` against `R`.
    pub exponent: f64,
    /// `min_R μ/R²`.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetAudit {
    pub beta: f64,
    pub radii: Vec<f64>,
    pub rows: Vec<LevelSetRow>,
    pub exponent: f64,
    pub constant: f64,
    pub pass: bool,
}

const PLANAR_DIMENSION: f64 = 2.0;

/// Tabulates `μ_{β,R}` at each center and fits `μ ≈ C R^p`; passes iff
/// `p ≥ 1.8` at every center.
pub fn density_audit_levelset(
    u: &Field,
    beta: f64,
    radii: &[f64],
    centers: &[(usize, usize)],
) -> Result<LevelSetAudit, HarnessError> {
    if radii.len() < 2 || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(HarnessError::Parameter("radii must be positive and increasing".into()));
    }
    if centers.is_empty() {
        return Err(HarnessError::Parameter("no centers".into()));
    }
    let cross = u.grid.cross();
    let mut rows = Vec::with_capacity(centers.len());
    for &c in centers {
        let unit = ball_sums(u, c, &[1.0], |v| if v.abs() > beta { 1.0 } else { 0.0 })[0].0;
        if unit <= 0.0 {
            return Err(HarnessError::PreconditionEmpty(format!(
                "no node with |u| > {beta} within unit distance of ({}, {})",
                cross.y(c.0),
                u.grid.z(c.1)
            )));
        }
        let mu: Vec<f64> = ball_sums(u, c, radii, |v| if v.abs() > beta { 1.0 } else { 0.0 })
            .into_iter()
            .map(|s| s.0)
            .collect();
        let (exponent, _) = fit_power_law(radii, &mu)
            .ok_or_else(|| HarnessError::PreconditionEmpty("a ball contains no node above beta".into()))?;
        let constant = mu.iter().zip(radii).map(|(m, r)| m / r.powf(PLANAR_DIMENSION)).fold(f64::INFINITY, f64::min);
        rows.push(LevelSetRow {
            center: (cross.y(c.0), u.grid.z(c.1)),
            mu,
            exponent,
            constant,
        });
    }
    let exponent = rows.iter().map(|r| r.exponent).fold(f64::INFINITY, f64::min);
    let constant = rows.iter().map(|r| r.constant).fold(f64::INFINITY, f64::min);
    Ok(LevelSetAudit {
        beta,
        radii: radii.to_vec(),
        rows,
        exponent,
        constant,
        pass: exponent >= PLANAR_DIMENSION - 0.2,
    })
}
