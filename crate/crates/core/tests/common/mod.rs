//! Properties shared by the proptest suite and the acceptance binary. Each
//! check returns `Err` with a description of the violated relation.

#![allow(dead_code)]

use frontlab::diffuse::{find_c_dagger_eps, DiffuseRunParams};
use frontlab::functionals::{
    energy_F_c, energy_G_c, fgeo_c, fgeo_c_graph, per_c, phi_c_eps, rearrange_subgraph, weighted_volume, DiscreteSet,
};
use frontlab::model::{
    build_quartic_well, CrossSection, CylinderGrid, Field, Forcing, ForcingDescriptor, G0Descriptor, Profile,
};
use frontlab::sharp::{check_euler_lagrange, measure_speed_fmc, step_fmc, SharpRunParams};
use proptest::prelude::*;

pub type Check = Result<(), String>;

pub fn constant_forcing(cross: &CrossSection, g: f64) -> Forcing {
    ForcingDescriptor::Product {
        g0: G0Descriptor::Constant { value: g },
    }
    .build(cross)
    .unwrap()
}

pub fn cosine_forcing(cross: &CrossSection) -> Forcing {
    ForcingDescriptor::Product {
        g0: G0Descriptor::Cosine {
            mean: 0.1,
            relative_amplitude: 0.5,
        },
    }
    .build(cross)
    .unwrap()
}

fn close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
    (a - b).abs() <= rel * (a.abs() + b.abs() + scale)
}

const NY: usize = 6;
const NZ: usize = 24;

/// Grid whose cell faces sit at multiples of `Δz = 0.1`.
pub fn set_grid() -> CylinderGrid {
    let cross = CrossSection::new(1.0, NY).unwrap();
    CylinderGrid::new(cross, -1.15, 1.15, 0.1).unwrap()
}

pub fn random_set(bits: &[bool]) -> DiscreteSet {
    let mut s = DiscreteSet::empty(set_grid());
    for i in 0..NY {
        for j in 0..NZ {
            s.set(i, j, bits[i * NZ + j]);
        }
    }
    s
}

pub fn set_bits() -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(prop::bool::weighted(0.4), NY * NZ)
}

pub fn heights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.5..0.5f64, n)
}

pub fn profile(values: Vec<f64>) -> Profile {
    let cross = CrossSection::new(1.0, values.len()).unwrap();
    Profile::new(cross, values).unwrap()
}

// ---------------------------------------------------------------------------
// Translation covariance: shifting by `a` multiplies every weighted energy by
// `e^{ca}`.
// ---------------------------------------------------------------------------

pub fn translation_covariance(psi: Vec<f64>, bits: Vec<bool>, c: f64, a: f64, g: f64) -> Check {
    let well = build_quartic_well();
    let p = profile(psi);
    let f = constant_forcing(&p.cross, g);
    let shifted = Profile::new(p.cross.clone(), p.values.iter().map(|v| v + a).collect()).unwrap();
    let (fa, fb) = (energy_F_c(&shifted, c, &well, &f).unwrap(), energy_F_c(&p, c, &well, &f).unwrap());
    if !close(fa, (c * a).exp() * fb, 1e-10, 1e-12) {
        return Err(format!("F_c: {fa} vs e^(ca) {fb}"));
    }

    let s = random_set(&bits);
    let fs = constant_forcing(s.grid.cross(), g);
    let (sa, sb) = (fgeo_c(&s.translated(a), c, &well, &fs), fgeo_c(&s, c, &well, &fs));
    if !close(sa, (c * a).exp() * sb, 1e-10, 1e-12) {
        return Err(format!("set functional: {sa} vs e^(ca) {sb}"));
    }

    let eps = 0.2;
    let cross = CrossSection::new(1.0, 5).unwrap();
    let grid = CylinderGrid::new(cross.clone(), -3.0, 3.0, 0.025).unwrap();
    let u = Field::from_fn(grid, |y, z| 0.5 * (1.0 - ((z - 0.1 * y) / (2.0 * 2f64.sqrt() * eps)).tanh()));
    let mut moved = u.clone();
    moved.grid.set_z_shift(a);
    let fu = constant_forcing(&cross, g);
    let (pa, pb) = (
        phi_c_eps(&moved, c, eps, &well, &fu).unwrap().value,
        phi_c_eps(&u, c, eps, &well, &fu).unwrap().value,
    );
    if !close(pa, (c * a).exp() * pb, 1e-10, 1e-12) {
        return Err(format!("diffuse functional: {pa} vs e^(ca) {pb}"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Weighted isoperimetric inequality `Per_c(S) ≥ c |S|_c`, equality for flat
// cuts.
// ---------------------------------------------------------------------------

pub fn isoperimetric(bits: Vec<bool>, c: f64, cut: usize) -> Check {
    let s = random_set(&bits);
    let (p, v) = (per_c(&s, c), c * weighted_volume(&s, c));
    if p < v - 1e-12 * (p + v) {
        return Err(format!("Per_c = {p} < c|S|_c = {v}"));
    }
    let g = set_grid();
    let face = g.z(cut) + 0.5 * g.dz();
    let flat = DiscreteSet::from_fn(g, |_, z| z < face);
    let (p, v) = (per_c(&flat, c), c * weighted_volume(&flat, c));
    if !close(p, v, 1e-12, 0.0) {
        return Err(format!("flat cut: Per_c = {p}, c|S|_c = {v}"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Positive 1-homogeneity of `G_c` and the change of variables `ζ = e^{cψ}/c`.
// ---------------------------------------------------------------------------

pub fn gc_homogeneity(zeta: Vec<f64>, lambda: f64, c: f64, g: f64) -> Check {
    let well = build_quartic_well();
    let z = profile(zeta);
    let f = constant_forcing(&z.cross, g);
    let scaled = Profile::new(z.cross.clone(), z.values.iter().map(|v| lambda * v).collect()).unwrap();
    let (a, b) = (energy_G_c(&scaled, c, &well, &f).unwrap(), energy_G_c(&z, c, &well, &f).unwrap());
    if !close(a, lambda * b, 1e-12, 1e-14) {
        return Err(format!("G_c(λζ) = {a}, λ G_c(ζ) = {}", lambda * b));
    }
    Ok(())
}

pub fn fc_gc_identity(psi: Vec<f64>, c: f64, g: f64) -> Check {
    let well = build_quartic_well();
    let p = profile(psi);
    let f = constant_forcing(&p.cross, g);
    let zeta = Profile::new(p.cross.clone(), p.values.iter().map(|v| (c * v).exp() / c).collect()).unwrap();
    let (a, b) = (energy_F_c(&p, c, &well, &f).unwrap(), energy_G_c(&zeta, c, &well, &f).unwrap());
    if !close(a, b, 1e-12, 1e-14) {
        return Err(format!("F_c(ψ) = {a}, G_c(e^(cψ)/c) = {b}"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Rearrangement into a subgraph of equal column volumes never increases the
// geometric functional.
// ---------------------------------------------------------------------------

pub fn rearrangement(bits: Vec<bool>, c: f64, g: f64) -> Check {
    let well = build_quartic_well();
    let s = random_set(&bits);
    let f = constant_forcing(s.grid.cross(), g);
    let Ok(psi) = rearrange_subgraph(&s, c) else {
        return Ok(());
    };
    let (after, before) = (fgeo_c_graph(&psi, c, &well, &f), fgeo_c(&s, c, &well, &f));
    if after > before + 1e-12 * (after.abs() + before.abs() + 1.0) {
        return Err(format!("rearranged {after} > original {before}"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Comparison principle for the explicit curvature-flow step.
// ---------------------------------------------------------------------------

pub fn fmc_comparison(base: Vec<f64>, bump: Vec<f64>, g: f64) -> Check {
    let well = build_quartic_well();
    let n = base.len();
    let cross = CrossSection::new(1.0, n).unwrap();
    let f = constant_forcing(&cross, g);
    let smooth = |coef: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let y = cross.y(i);
                coef.iter()
                    .enumerate()
                    .map(|(k, a)| a * (std::f64::consts::PI * k as f64 * y).cos())
                    .sum()
            })
            .collect()
    };
    let lo = smooth(&base[..4]);
    let gap: Vec<f64> = smooth(&bump[..4]).iter().map(|v| v.abs() * 0.1).collect();
    let hi: Vec<f64> = lo.iter().zip(&gap).map(|(a, b)| a + b).collect();
    let dt = 0.4 * cross.dy() * cross.dy();
    let mut h1 = Profile::new(cross.clone(), lo).unwrap();
    let mut h2 = Profile::new(cross.clone(), hi).unwrap();
    for step in 0..50 {
        h1 = step_fmc(&h1, dt, &well, &f).map_err(|e| e.to_string())?;
        h2 = step_fmc(&h2, dt, &well, &f).map_err(|e| e.to_string())?;
        if let Some(k) = (0..n).find(|&k| h1.values[k] > h2.values[k] + 1e-13) {
            return Err(format!("order lost at node {k} after {} steps", step + 1));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Diffuse wave profile: nonincreasing in z with range (0, 1 + Cε].
// ---------------------------------------------------------------------------

/// Constant in the upper range bound `1 + Cε`.
pub const RANGE_CONSTANT: f64 = 1.0;

pub fn wave_profile(g: f64, eps: f64) -> Check {
    let well = build_quartic_well();
    let params = DiffuseRunParams::for_eps(eps);
    let grid = params.default_grid(0.5).unwrap();
    let f = constant_forcing(grid.cross(), g);
    let d = find_c_dagger_eps(&grid, &params, &well, &f, false).map_err(|e| e.to_string())?;
    let u = &d.profile;
    let (lo, hi) = u.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if !(lo > 0.0) || hi > 1.0 + RANGE_CONSTANT * eps {
        return Err(format!("range [{lo}, {hi}] outside (0, 1 + {RANGE_CONSTANT} eps]"));
    }
    for i in 0..u.grid.ny() {
        if let Some(w) = u.column(i).windows(2).position(|w| w[1] > w[0] + 1e-9) {
            return Err(format!("column {i} increases at node {w}"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Euler-Lagrange residual of the stationary curvature-flow shape is O(Δy²).
// ---------------------------------------------------------------------------

pub const EL_NODES: [usize; 3] = [21, 41, 81];

/// `(Δy, residual)` pairs and the fitted log-log slope.
pub fn euler_lagrange_refinement() -> (Vec<(f64, f64)>, f64) {
    let well = build_quartic_well();
    let params = SharpRunParams {
        shape_tol: 1e-9,
        ..SharpRunParams::default()
    };
    let pts: Vec<(f64, f64)> = EL_NODES
        .iter()
        .map(|&n| {
            let cross = CrossSection::new(1.0, n).unwrap();
            let f = cosine_forcing(&cross);
            let out = measure_speed_fmc(&Profile::constant(cross.clone(), 0.0), &params, &well, &f).unwrap();
            let psi = out.psi.expect("stationary shape");
            (cross.dy(), check_euler_lagrange(&psi, out.speed.c, &well, &f, params.el_tol).residual)
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
    let (slope, _) = frontlab::numerics::fit_power_law(&xs, &ys).unwrap();
    (pts, slope)
}
