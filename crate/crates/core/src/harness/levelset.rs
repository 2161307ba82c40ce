//! Level-set extraction, Hausdorff distances between polylines and `L¹`
//! distances to subgraphs.

use serde::Serialize;

use super::HarnessError;
use crate::model::{Field, Profile};

pub type Point = (f64, f64);
pub type Segment = (Point, Point);

/// Marching-squares segments of `{u = θ}` in absolute `(y, z)` coordinates.
pub fn level_set_segments(u: &Field, theta: f64) -> Vec<Segment> {
    let g = &u.grid;
    let cross = g.cross();
    let mut out = Vec::new();
    let cut = |p: Point, q: Point, a: f64, b: f64| -> Point {
        let t = (theta - a) / (b - a);
        (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1))
    };
    for i in 0..g.ny() - 1 {
        for j in 0..g.nz() - 1 {
            let corners = [
                ((cross.y(i), g.z(j)), u.at(i, j)),
                ((cross.y(i + 1), g.z(j)), u.at(i + 1, j)),
                ((cross.y(i + 1), g.z(j + 1)), u.at(i + 1, j + 1)),
                ((cross.y(i), g.z(j + 1)), u.at(i, j + 1)),
            ];
            let mut pts = Vec::with_capacity(4);
            for e in 0..4 {
                let (p, a) = corners[e];
                let (q, b) = corners[(e + 1) % 4];
                if (a > theta) != (b > theta) {
                    pts.push(cut(p, q, a, b));
                }
            }
            match pts.len() {
                2 => out.push((pts[0], pts[1])),
                4 => {
                    out.push((pts[0], pts[1]));
                    out.push((pts[2], pts[3]));
                }
                _ => {}
            }
        }
    }
    out
}

/// Polyline of the graph of `ψ`; at the edge of a masked run a vertical
/// segment drops to `floor`.
pub fn graph_segments(psi: &Profile, floor: f64) -> Vec<Segment> {
    let cross = &psi.cross;
    let v = &psi.values;
    let mut out = Vec::new();
    for k in 0..v.len() - 1 {
        let (a, b) = (v[k], v[k + 1]);
        let (ya, yb) = (cross.y(k), cross.y(k + 1));
        match (a.is_finite(), b.is_finite()) {
            (true, true) => out.push(((ya, a), (yb, b))),
            (true, false) => out.push(((ya, a), (ya, floor))),
            (false, true) => out.push(((yb, floor), (yb, b))),
            _ => {}
        }
    }
    if v.len() == 1 && v[0].is_finite() {
        out.push(((0.0, v[0]), (0.0, v[0])));
    }
    out
}

/// Part of a segment inside the band `lo ≤ z ≤ hi`.
fn clip(s: Segment, lo: f64, hi: f64) -> Option<Segment> {
    let ((y0, z0), (y1, z1)) = s;
    let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
    let dz = z1 - z0;
    if dz == 0.0 {
        return (z0 >= lo && z0 <= hi).then_some(s);
    }
    for bound in [lo, hi] {
        let t = (bound - z0) / dz;
        let entering = if bound == lo { dz > 0.0 } else { dz < 0.0 };
        if entering {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
    }
    (t0 <= t1).then(|| {
        let at = |t: f64| (y0 + t * (y1 - y0), z0 + t * dz);
        (at(t0), at(t1))
    })
}

fn point_segment(p: Point, s: &Segment) -> f64 {
    let ((ax, ay), (bx, by)) = *s;
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - ax) * dx + (p.1 - ay) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p.0 - ax - t * dx).powi(2) + (p.1 - ay - t * dy).powi(2)).sqrt()
}

const SAMPLES_PER_SEGMENT: usize = 8;

/// `sup_{a ∈ A} dist(a, B)` with each segment of `A` sampled uniformly.
pub fn directed_hausdorff(a: &[Segment], b: &[Segment]) -> f64 {
    let mut worst: f64 = 0.0;
    for s in a {
        for k in 0..=SAMPLES_PER_SEGMENT {
            let t = k as f64 / SAMPLES_PER_SEGMENT as f64;
            let p = (s.0 .0 + t * (s.1 .0 - s.0 .0), s.0 .1 + t * (s.1 .1 - s.0 .1));
            let d = b.iter().map(|q| point_segment(p, q)).fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    worst
}

pub fn hausdorff(a: &[Segment], b: &[Segment]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HausdorffReport {
    pub distance: f64,
    /// Level set to graph.
    pub forward: f64,
    /// Graph to level set.
    pub backward: f64,
    /// `max(Δy, Δz)` of the field; the extraction error is below this.
    pub resolution: f64,
    pub segments: usize,
}

/// Symmetric Hausdorff distance between `{u = θ}` and the graph of `ψ`,
/// both clipped to `|z| ≤ M`.
pub fn hausdorff_level_set(u: &Field, theta: f64, psi: &Profile, m: f64) -> Result<HausdorffReport, HarnessError> {
    let level: Vec<Segment> = level_set_segments(u, theta)
        .into_iter()
        .filter_map(|s| clip(s, -m, m))
        .collect();
    if level.is_empty() {
        return Err(HarnessError::EmptyLevelSet(theta));
    }
    let graph: Vec<Segment> = graph_segments(psi, -m).into_iter().filter_map(|s| clip(s, -m, m)).collect();
    if graph.is_empty() {
        return Err(HarnessError::Parameter("the graph of psi lies outside the window".into()));
    }
    let (forward, backward) = (directed_hausdorff(&level, &graph), directed_hausdorff(&graph, &level));
    Ok(HausdorffReport {
        distance: forward.max(backward),
        forward,
        backward,
        resolution: u.grid.dz().max(u.grid.dy()),
        segments: level.len(),
    })
}

/// `∫_a^b |ℓ|` for the linear function with `ℓ(a) = fa`, `ℓ(b) = fb`.
fn abs_linear(a: f64, b: f64, fa: f64, fb: f64) -> f64 {
    if fa * fb >= 0.0 {
        0.5 * (b - a) * (fa.abs() + fb.abs())
    } else {
        0.5 * (b - a) * (fa * fa + fb * fb) / (fa.abs() + fb.abs())
    }
}

/// `∫_{−M}^{M} |u(z + shift) − χ_{z < h}| dz` for one column, with `u`
/// piecewise linear through its nodes and constant beyond the window.
fn column_distance(zs: &[f64], col: &[f64], shift: f64, h: f64, m: f64) -> f64 {
    let n = zs.len();
    let at = |z: f64| -> f64 {
        let x = z + shift;
        if x <= zs[0] {
            return col[0];
        }
        if x >= zs[n - 1] {
            return col[n - 1];
        }
        let dz = zs[1] - zs[0];
        let k = (((x - zs[0]) / dz).floor() as usize).min(n - 2);
        let t = (x - zs[k]) / dz;
        col[k] + t * (col[k + 1] - col[k])
    };
    let mut breaks: Vec<f64> = vec![-m, m];
    breaks.extend(zs.iter().map(|z| z - shift).filter(|z| *z > -m && *z < m));
    if h > -m && h < m {
        breaks.push(h);
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks
        .windows(2)
        .map(|w| {
            let chi = if 0.5 * (w[0] + w[1]) < h { 1.0 } else { 0.0 };
            abs_linear(w[0], w[1], at(w[0]) - chi, at(w[1]) - chi)
        })
        .sum()
}

/// `‖u(·, · + shift) − χ_{S_ψ}‖_{L¹(Σ_M)}` with `S_ψ = {z < ψ(y)}`.
pub fn l1_distance_to_subgraph(u: &Field, shift: f64, psi: &Profile, m: f64) -> f64 {
    let g = &u.grid;
    let zs: Vec<f64> = (0..g.nz()).map(|j| g.z(j)).collect();
    let cross = g.cross();
    (0..g.ny())
        .map(|i| {
            let h = psi.interpolate(cross.y(i));
            cross.weight(i) * column_distance(&zs, u.column(i), shift, h, m)
        })
        .sum()
}

/// `‖a(·, · + sa) − b(·, · + sb)‖_{L¹(Σ_M)}` for fields on the same
/// cross-section, sampled on the nodes of `a`.
pub fn aligned_l1_difference(a: &Field, sa: f64, b: &Field, sb: f64, m: f64) -> Result<f64, HarnessError> {
    if a.grid.cross() != b.grid.cross() {
        return Err(HarnessError::Parameter("fields use different cross-sections".into()));
    }
    let interp = |f: &Field, i: usize, z: f64| -> f64 {
        let g = &f.grid;
        let x = ((z - g.z(0)) / g.dz()).clamp(0.0, (g.nz() - 1) as f64);
        let k = (x.floor() as usize).min(g.nz() - 2);
        let t = x - k as f64;
        f.at(i, k) * (1.0 - t) + f.at(i, k + 1) * t
    };
    let dz = a.grid.dz();
    let steps = (2.0 * m / dz).ceil() as usize;
    let h = 2.0 * m / steps as f64;
    let cross = a.grid.cross();
    let mut acc = 0.0;
    for i in 0..a.grid.ny() {
        let mut col = 0.0;
        for k in 0..=steps {
            let z = -m + k as f64 * h;
            let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
            col += w * (interp(a, i, z + sa) - interp(b, i, z + sb)).abs();
        }
        acc += cross.weight(i) * col * h;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::modica_mortola_recovery;
    use crate::model::{build_quartic_well, CrossSection, CylinderGrid};

    fn flat_front(dz: f64, center: f64) -> Field {
        let cross = CrossSection::new(1.0, 11).unwrap();
        let grid = CylinderGrid::new(cross, -1.0, 1.0, dz).unwrap();
        Field::from_fn(grid, |_, z| (0.5 - (z - center)).clamp(0.0, 1.0))
    }

    #[test]
    fn flat_level_set_against_flat_graph() {
        let u = flat_front(0.05, 0.0);
        let psi = Profile::constant(u.grid.cross().clone(), 0.0);
        let r = hausdorff_level_set(&u, 0.5, &psi, 0.5).unwrap();
        assert!(r.distance < 1e-12);
        let shifted = Profile::constant(u.grid.cross().clone(), 0.3);
        let r = hausdorff_level_set(&u, 0.5, &shifted, 0.5).unwrap();
        assert!((r.distance - 0.3).abs() < 1e-12);
    }

    #[test]
    fn translation_moves_distance_by_at_most_shift() {
        let u = flat_front(0.05, 0.0);
        let psi = Profile::from_fn(u.grid.cross().clone(), |y| 0.1 * y);
        let base = hausdorff_level_set(&u, 0.5, &psi, 0.8).unwrap().distance;
        let mut moved = u.clone();
        moved.grid.set_z_shift(0.07);
        let d = hausdorff_level_set(&moved, 0.5, &psi, 0.8).unwrap().distance;
        assert!(d <= base + 0.07 + 1e-12);
    }

    #[test]
    fn recovery_field_level_set_is_the_graph() {
        let well = build_quartic_well();
        let cross = CrossSection::new(1.0, 41).unwrap();
        let eps = 0.05;
        let grid = CylinderGrid::new(cross.clone(), -2.0, 1.0, eps / 8.0).unwrap();
        let psi = Profile::from_fn(cross, |y| -0.2 * (1.0 - (std::f64::consts::PI * y).cos()));
        let u = modica_mortola_recovery(&psi, eps, 1.5, &well, &grid).unwrap();
        let r = hausdorff_level_set(&u, 0.5, &psi, 1.0).unwrap();
        assert!(r.distance <= 2.0 * grid.dz(), "{} vs {}", r.distance, grid.dz());
    }

    #[test]
    fn empty_level_set_is_an_error() {
        let u = flat_front(0.05, 0.0);
        let zero = Field::zeros(u.grid.clone());
        let psi = Profile::constant(u.grid.cross().clone(), 0.0);
        assert!(matches!(hausdorff_level_set(&zero, 0.5, &psi, 0.5), Err(HarnessError::EmptyLevelSet(_))));
    }

    #[test]
    fn l1_distance_of_a_ramp() {
        // |ramp − step| is two triangles of area 1/8 each.
        let u = flat_front(0.01, 0.0);
        let psi = Profile::constant(u.grid.cross().clone(), 0.0);
        let d = l1_distance_to_subgraph(&u, 0.0, &psi, 0.9);
        assert!((d - 0.25).abs() < 1e-12, "{d}");
        // A step misplaced by 0.3 costs 0.3 more on each of the two sides
        // of the ramp's center, minus the triangle overlap.
        let step = Field::from_fn(u.grid.clone(), |_, z| if z < 0.3 { 1.0 } else { 0.0 });
        let d = l1_distance_to_subgraph(&step, 0.0, &psi, 0.9);
        assert!((d - 0.3).abs() < 0.011, "{d}");
        let same = aligned_l1_difference(&u, 0.0, &u, 0.0, 0.9).unwrap();
        assert_eq!(same, 0.0);
        let moved = aligned_l1_difference(&u, 0.0, &u, 0.1, 0.9).unwrap();
        assert!((moved - 0.1).abs() < 1e-9, "{moved}");
    }
}
