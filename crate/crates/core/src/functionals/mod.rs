//! The weighted energies of the diffuse and sharp models.
//!
//! Every exponentially weighted integral is evaluated with exact `e^{cz}`
//! cell weights, so translating a field by a whole number of cells (or
//! moving the window offset) rescales the discrete value by exactly `e^{ca}`.

mod recovery;
mod set;

pub use recovery::{cutoff_eta, modica_mortola_recovery, signed_distance_to_graph};
pub use set::{fgeo_c, fgeo_c_graph, per_c, rearrange_subgraph, weighted_volume, DiscreteSet};

use serde::Serialize;
use thiserror::Error;

use crate::model::{CrossSection, DoubleWell, Field, Forcing, Profile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error("window-too-small: {0}")]
    WindowTooSmall(String),
    #[error("profile has masked (-inf) nodes; evaluate energy_G_c on zeta = e^(c psi)/c instead")]
    MaskedProfile,
    #[error("zeta is negative at node {0}")]
    NegativeZeta(usize),
    #[error("invalid interval set: {0}")]
    InvalidIntervals(String),
    #[error("set has zero weighted volume")]
    EmptySet,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("set csv: {0}")]
    Csv(String),
    #[error("parameter out of range: {0}")]
    Parameter(String),
}

/// A weighted energy value with the truncation bookkeeping of its window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub value: f64,
    pub c: f64,
    pub eps: Option<f64>,
    pub window: (f64, f64),
    /// Estimate of the error committed by the tail models outside the window.
    pub tail_bound: f64,
}

/// Largest admissible `ε |u_z|` at either window end for [`phi_c_eps`].
pub const END_GRADIENT_TOL: f64 = 1e-2;

/// `∫_0^h e^{c(z0 + s)} ds` evaluated without cancellation.
pub(crate) fn exp_cell(c: f64, z0: f64, h: f64) -> f64 {
    (c * z0).exp() * (c * h).exp_m1() / c
}

/// Cross-section energy density `∫_Ω (ε/2 v_y² + W(v)/ε − G(y,v)) dy` of a
/// nodal slice, with trapezoid weights for the potential and cell
/// differences for the gradient.
fn slice_energy(v: impl Fn(usize) -> f64, cross: &CrossSection, eps: f64, well: &DoubleWell, forcing: &Forcing) -> f64 {
    let dy = cross.dy();
    let n = cross.len();
    let mut acc = 0.0;
    for i in 0..n {
        let u = v(i);
        acc += cross.weight(i) * (well.w(u) / eps - forcing.big_g(i, u));
    }
    for i in 0..n - 1 {
        let d = (v(i + 1) - v(i)) / dy;
        acc += dy * 0.5 * eps * d * d;
    }
    acc
}

/// `E^ε(v) = ∫_Ω (ε/2 |v'|² + W(v)/ε − G(y, v)) dy`.
#[allow(non_snake_case)]
pub fn energy_E_eps(v: &Profile, eps: f64, well: &DoubleWell, forcing: &Forcing) -> f64 {
    slice_energy(|i| v.values[i], &v.cross, eps, well, forcing)
}

/// `Φ_c^ε(u) = ∫_Σ e^{cz} (ε/2 |∇u|² + W(u)/ε − G(y,u))`.
///
/// Below the window the field is frozen at its trace; above it the energy
/// density is continued with the decay rate fitted from the last two slices.
pub fn phi_c_eps(u: &Field, c: f64, eps: f64, well: &DoubleWell, forcing: &Forcing) -> Result<EnergyReport, FunctionalError> {
    if !(c > 0.0 && eps > 0.0) {
        return Err(FunctionalError::Parameter(format!("c = {c}, eps = {eps}")));
    }
    let g = &u.grid;
    let (ny, nz, dz) = (g.ny(), g.nz(), g.dz());
    let cross = g.cross();
    let end_grad = |j0: usize, j1: usize| {
        (0..ny)
            .map(|i| (u.at(i, j1) - u.at(i, j0)).abs() / dz)
            .fold(0.0, f64::max)
            * eps
    };
    let (gl, gr) = (end_grad(0, 1), end_grad(nz - 2, nz - 1));
    if gl > END_GRADIENT_TOL || gr > END_GRADIENT_TOL {
        return Err(FunctionalError::WindowTooSmall(format!(
            "eps |u_z| = {gl:.3e} (left), {gr:.3e} (right) exceeds {END_GRADIENT_TOL}"
        )));
    }

    let q: Vec<f64> = (0..nz)
        .map(|j| slice_energy(|i| u.at(i, j), cross, eps, well, forcing))
        .collect();
    let zgrad = |j: usize| {
        (0..ny)
            .map(|i| {
                let d = (u.at(i, j + 1) - u.at(i, j)) / dz;
                cross.weight(i) * 0.5 * eps * d * d
            })
            .sum::<f64>()
    };
    let mut bulk = 0.0;
    for j in 0..nz - 1 {
        bulk += exp_cell(c, g.z(j), dz) * (0.5 * (q[j] + q[j + 1]) + zgrad(j));
    }

    let left = (c * g.z(0)).exp() / c * q[0];
    // Disagreement with the same model frozen one cell further in.
    let first_cell = exp_cell(c, g.z(0), dz) * (0.5 * (q[0] + q[1]) + zgrad(0));
    let left_bound = (left + first_cell - (c * g.z(1)).exp() / c * q[1]).abs();

    let density_end = q[nz - 1] + zgrad(nz - 2);
    let right = if density_end == 0.0 {
        0.0
    } else {
        let amp = |j: usize| (0..ny).map(|i| u.at(i, j).abs()).fold(0.0, f64::max);
        let (a, b) = (amp(nz - 2), amp(nz - 1));
        let lambda = if b > 0.0 && a > b { (a / b).ln() / dz } else { 0.0 };
        if 2.0 * lambda <= 1.01 * c {
            return Err(FunctionalError::WindowTooSmall(format!(
                "field does not decay at the right end fast enough for weight c = {c}"
            )));
        }
        density_end * (c * g.z(nz - 1)).exp() / (2.0 * lambda - c)
    };
    Ok(EnergyReport {
        value: bulk + left + right,
        c,
        eps: Some(eps),
        window: (g.z(0), g.z(nz - 1)),
        tail_bound: left_bound + right.abs(),
    })
}

/// `∫_Σ e^{cz} ε/2 u_z²` over the window.
pub fn weighted_z_dirichlet(u: &Field, c: f64, eps: f64) -> f64 {
    let g = &u.grid;
    let (dz, cross) = (g.dz(), g.cross());
    let mut acc = 0.0;
    for j in 0..g.nz() - 1 {
        let s: f64 = (0..g.ny())
            .map(|i| {
                let d = (u.at(i, j + 1) - u.at(i, j)) / dz;
                cross.weight(i) * 0.5 * eps * d * d
            })
            .sum();
        acc += exp_cell(c, g.z(j), dz) * s;
    }
    acc
}

/// `E⁰(A) = c_W Per(A, Ω) − ∫_A g` for `A` a finite union of intervals.
/// Touching intervals are merged; overlapping ones are rejected.
#[allow(non_snake_case)]
pub fn energy_E0(intervals: &[(f64, f64)], forcing: &Forcing, well: &DoubleWell) -> Result<f64, FunctionalError> {
    let cross = forcing.cross();
    let len = cross.length();
    let tol = 1e-12 * len;
    let mut iv: Vec<(f64, f64)> = intervals.to_vec();
    iv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in iv {
        if !(a.is_finite() && b.is_finite()) || a > b || a < -tol || b > len + tol {
            return Err(FunctionalError::InvalidIntervals(format!("[{a}, {b}] not inside [0, {len}]")));
        }
        if b - a <= tol {
            continue;
        }
        match merged.last_mut() {
            Some(last) if a < last.1 - tol => {
                return Err(FunctionalError::InvalidIntervals(format!(
                    "[{a}, {b}] overlaps [{}, {}]",
                    last.0, last.1
                )))
            }
            Some(last) if a <= last.1 + tol => last.1 = b,
            _ => merged.push((a, b)),
        }
    }
    let g = Profile {
        cross: cross.clone(),
        values: forcing.g().to_vec(),
    };
    let mut value = 0.0;
    for (a, b) in merged {
        for e in [a, b] {
            if e > tol && e < len - tol {
                value += well.c_w();
            }
        }
        value -= integrate_piecewise_linear(&g, a, b);
    }
    Ok(value)
}

/// Exact integral over `[a, b]` of the piecewise-linear interpolant of `p`.
pub(crate) fn integrate_piecewise_linear(p: &Profile, a: f64, b: f64) -> f64 {
    let dy = p.cross.dy();
    let n = p.len();
    let mut acc = 0.0;
    for k in 0..n - 1 {
        let (y0, y1) = (k as f64 * dy, (k + 1) as f64 * dy);
        let (lo, hi) = (a.max(y0), b.min(y1));
        if hi > lo {
            acc += 0.5 * (hi - lo) * (p.interpolate(lo) + p.interpolate(hi));
        }
    }
    acc
}

/// Per-cell quantities shared by the discrete `F_c` and `G_c`: with
/// `E = e^{cψ}` (or `c ζ`), the cell average `E_m` and slope `D`.
fn graph_cells(e: &[f64], dy: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    e.windows(2).map(move |w| (0.5 * (w[0] + w[1]), (w[1] - w[0]) / dy))
}

/// `F_c(ψ) = ∫_Ω e^{cψ} (c_W √(1 + ψ'²) − g/c) dy`, discretized so that
/// `F_c(ψ) = G_c(e^{cψ}/c)` holds exactly.
#[allow(non_snake_case)]
pub fn energy_F_c(psi: &Profile, c: f64, well: &DoubleWell, forcing: &Forcing) -> Result<f64, FunctionalError> {
    if psi.has_mask() {
        return Err(FunctionalError::MaskedProfile);
    }
    let e: Vec<f64> = psi.values.iter().map(|p| (c * p).exp()).collect();
    let dy = psi.cross.dy();
    let surface: f64 = graph_cells(&e, dy)
        .map(|(em, d)| dy * well.c_w() * (em * em + (d / c) * (d / c)).sqrt())
        .sum();
    let bulk: f64 = (0..e.len())
        .map(|i| psi.cross.weight(i) * forcing.g()[i] * e[i] / c)
        .sum();
    Ok(surface - bulk)
}

/// `G_c(ζ) = ∫_Ω (c_W √(c²ζ² + |ζ'|²) − g ζ) dy` on cell averages and cell
/// slopes (one-sided at the Neumann ends by construction).
#[allow(non_snake_case)]
pub fn energy_G_c(zeta: &Profile, c: f64, well: &DoubleWell, forcing: &Forcing) -> Result<f64, FunctionalError> {
    energy_G_c_smoothed(zeta, c, 0.0, well, forcing)
}

/// `G_c` with the surface integrand `√(δ² + c²ζ² + |ζ'|²)`.
#[allow(non_snake_case)]
pub fn energy_G_c_smoothed(zeta: &Profile, c: f64, delta: f64, well: &DoubleWell, forcing: &Forcing) -> Result<f64, FunctionalError> {
    if let Some(k) = zeta.values.iter().position(|z| !(*z >= 0.0)) {
        return Err(FunctionalError::NegativeZeta(k));
    }
    let dy = zeta.cross.dy();
    let surface: f64 = graph_cells(&zeta.values, dy)
        .map(|(zm, d)| dy * well.c_w() * (delta * delta + c * c * zm * zm + d * d).sqrt())
        .sum();
    let bulk: f64 = (0..zeta.len())
        .map(|i| zeta.cross.weight(i) * forcing.g()[i] * zeta.values[i])
        .sum();
    Ok(surface - bulk)
}

/// Nodewise `φ(u) = ∫_0^u √(2W)`.
pub fn phi_transform(u: &Field, well: &DoubleWell) -> Field {
    Field {
        grid: u.grid.clone(),
        values: u.values.iter().map(|v| well.phi(*v)).collect(),
        time: u.time,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_quartic_well, CylinderGrid, ForcingDescriptor, G0Descriptor};

    fn constant_forcing(cross: &CrossSection, g: f64) -> Forcing {
        ForcingDescriptor::Product {
            g0: G0Descriptor::Constant { value: g },
        }
        .build(cross)
        .unwrap()
    }

    #[test]
    fn cross_section_energy_examples() {
        let cross = CrossSection::new(1.0, 21).unwrap();
        let well = build_quartic_well();
        let f = constant_forcing(&cross, 0.1);
        assert_eq!(energy_E_eps(&Profile::constant(cross.clone(), 0.0), 0.05, &well, &f), 0.0);
        let one = energy_E_eps(&Profile::constant(cross.clone(), 1.0), 0.05, &well, &f);
        assert!((one + 0.1).abs() < 1e-14);
    }

    #[test]
    fn e0_examples() {
        let cross = CrossSection::new(1.0, 41).unwrap();
        let well = build_quartic_well();
        let f = constant_forcing(&cross, 0.1);
        assert!((energy_E0(&[(0.0, 1.0)], &f, &well).unwrap() + 0.1).abs() < 1e-14);
        let mid = energy_E0(&[(0.25, 0.75)], &f, &well).unwrap();
        assert!((mid - (2.0 * well.c_w() - 0.05)).abs() < 1e-14);
        assert!((mid - 0.1857).abs() < 1e-4);
        assert_eq!(energy_E0(&[], &f, &well).unwrap(), 0.0);
        assert!(energy_E0(&[(0.1, 0.5), (0.4, 0.6)], &f, &well).is_err());
        // Touching intervals merge: no interior endpoint at 0.5.
        let t = energy_E0(&[(0.0, 0.5), (0.5, 1.0)], &f, &well).unwrap();
        assert!((t + 0.1).abs() < 1e-14);
    }

    #[test]
    fn f_c_constant_graph_and_masks() {
        let cross = CrossSection::new(1.0, 11).unwrap();
        let well = build_quartic_well();
        let f = constant_forcing(&cross, 0.1);
        let (c, z0) = (0.7, 0.3);
        let v = energy_F_c(&Profile::constant(cross.clone(), z0), c, &well, &f).unwrap();
        let expect = (c * z0).exp() * (well.c_w() - 0.1 / c);
        assert!((v - expect).abs() < 1e-14);
        let mut masked = Profile::constant(cross.clone(), 0.0);
        masked.values[3] = f64::NEG_INFINITY;
        assert_eq!(energy_F_c(&masked, c, &well, &f), Err(FunctionalError::MaskedProfile));
        let mut neg = Profile::constant(cross, 1.0);
        neg.values[2] = -1e-3;
        assert_eq!(energy_G_c(&neg, c, &well, &f), Err(FunctionalError::NegativeZeta(2)));
    }

    #[test]
    fn g_c_constant_zeta() {
        let cross = CrossSection::new(2.0, 11).unwrap();
        let well = build_quartic_well();
        let f = constant_forcing(&cross, 0.1);
        let v = energy_G_c(&Profile::constant(cross, 0.4), 0.9, &well, &f).unwrap();
        assert!((v - 0.4 * 2.0 * (well.c_w() * 0.9 - 0.1)).abs() < 1e-14);
    }

    #[test]
    fn phi_c_eps_zero_field_and_window_check() {
        let cross = CrossSection::new(1.0, 5).unwrap();
        let grid = CylinderGrid::new(cross.clone(), -1.0, 1.0, 0.01).unwrap();
        let well = build_quartic_well();
        let f = constant_forcing(&cross, 0.1);
        let r = phi_c_eps(&Field::zeros(grid.clone()), 0.8, 0.05, &well, &f).unwrap();
        assert_eq!((r.value, r.tail_bound), (0.0, 0.0));
        let steep = Field::from_fn(grid, |_, z| if z < 0.99 { 0.0 } else { 1.0 });
        assert!(matches!(
            phi_c_eps(&steep, 0.8, 0.05, &well, &f),
            Err(FunctionalError::WindowTooSmall(_))
        ));
    }

    #[test]
    fn phi_transform_endpoints() {
        let cross = CrossSection::new(1.0, 3).unwrap();
        let grid = CylinderGrid::new(cross, 0.0, 1.0, 0.5).unwrap();
        let well = build_quartic_well();
        let ones = Field::from_fn(grid.clone(), |_, _| 1.0);
        assert!(phi_transform(&ones, &well).values.iter().all(|v| (v - well.c_w()).abs() < 1e-12));
        assert!(phi_transform(&Field::zeros(grid), &well).values.iter().all(|v| *v == 0.0));
    }
}
