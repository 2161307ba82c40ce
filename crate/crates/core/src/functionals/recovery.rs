//! Diffuse interpolation of a sharp subgraph: the optimal profile across the
//! signed distance to the graph, cut off smoothly at `z = −M`.

use rayon::prelude::*;

use super::FunctionalError;
use crate::model::{CylinderGrid, DoubleWell, Field, Profile};

/// `C^∞` step: 0 for `s ≤ 0`, 1 for `s ≥ 1`.
pub fn cutoff_eta(s: f64) -> f64 {
    let h = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let (a, b) = (h(s), h(1.0 - s));
        a / (a + b)
    }
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dz) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dz * dz;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dz) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qz) = (a.0 + t * dx - p.0, a.1 + t * dz - p.1);
    (qx * qx + qz * qz).sqrt()
}

/// Distance from `(y, z)` to the polyline graph of `ψ`, positive below it.
pub fn signed_distance_to_graph(psi: &Profile, y: f64, z: f64) -> f64 {
    let cross = &psi.cross;
    let d = (0..psi.len() - 1)
        .map(|k| {
            point_segment_distance(
                (y, z),
                (cross.y(k), psi.values[k]),
                (cross.y(k + 1), psi.values[k + 1]),
            )
        })
        .fold(f64::INFINITY, f64::min);
    if z < psi.interpolate(y) {
        d
    } else {
        -d
    }
}

/// `u(y,z) = γ(d(y,z)/ε) η((z + M)/ε)` sampled on `grid`.
pub fn modica_mortola_recovery(
    psi: &Profile,
    eps: f64,
    m: f64,
    well: &DoubleWell,
    grid: &CylinderGrid,
) -> Result<Field, FunctionalError> {
    if psi.has_mask() {
        return Err(FunctionalError::MaskedProfile);
    }
    if psi.cross != *grid.cross() {
        return Err(FunctionalError::GridMismatch("profile and grid cross-sections differ".into()));
    }
    let top = psi.max();
    if !(m > top) || !(eps > 0.0) {
        return Err(FunctionalError::Parameter(format!("need M > sup psi = {top}, got M = {m}")));
    }
    let (lo, hi) = (grid.z(0), grid.z(grid.nz() - 1));
    if lo > -m - eps || hi < top + 10.0 * eps {
        return Err(FunctionalError::WindowTooSmall(format!(
            "window [{lo}, {hi}] does not contain [{}, {}]",
            -m - eps,
            top + 10.0 * eps
        )));
    }
    let nz = grid.nz();
    let mut values = vec![0.0; grid.len()];
    values.par_chunks_mut(nz).enumerate().for_each(|(i, col)| {
        let y = grid.cross().y(i);
        for (j, v) in col.iter_mut().enumerate() {
            let z = grid.z(j);
            let eta = cutoff_eta((z + m) / eps);
            *v = if eta == 0.0 {
                0.0
            } else {
                well.gamma(signed_distance_to_graph(psi, y, z) / eps) * eta
            };
        }
    });
    Ok(Field {
        grid: grid.clone(),
        values,
        time: 0.0,
    })
}
