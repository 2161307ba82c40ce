//! Discrete sets on the cylinder grid: weighted perimeter, the geometric
//! functional and the subgraph rearrangement.
//!
//! Cell `(i, j)` is the control volume of node `(y_i, z_j)`: the y-extent is
//! the trapezoid weight `w_i`, the z-extent `[z_j − Δz/2, z_j + Δz/2]`. A
//! column whose bottom cell is occupied continues down to `z = −∞`.

use std::io::{Read, Write};

use super::{exp_cell, FunctionalError};
use crate::model::{CylinderGrid, DoubleWell, Forcing, Profile};

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSet {
    pub grid: CylinderGrid,
    occ: Vec<bool>,
}

impl DiscreteSet {
    pub fn empty(grid: CylinderGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            occ: vec![false; n],
        }
    }

    /// Occupancy from a predicate on node coordinates `(y, z)`.
    pub fn from_fn<F: Fn(f64, f64) -> bool>(grid: CylinderGrid, f: F) -> Self {
        let mut s = Self::empty(grid);
        for i in 0..s.grid.ny() {
            let y = s.grid.cross().y(i);
            for j in 0..s.grid.nz() {
                let k = s.grid.index(i, j);
                s.occ[k] = f(y, s.grid.z(j));
            }
        }
        s
    }

    /// `{z < ψ(y)}` sampled at cell centers; masked columns are empty.
    pub fn subgraph(grid: CylinderGrid, psi: &Profile) -> Self {
        let psi = psi.values.clone();
        let mut s = Self::empty(grid);
        for (i, p) in psi.iter().enumerate() {
            for j in 0..s.grid.nz() {
                let k = s.grid.index(i, j);
                s.occ[k] = s.grid.z(j) < *p;
            }
        }
        s
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.occ[self.grid.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let k = self.grid.index(i, j);
        self.occ[k] = v;
    }

    pub fn is_empty(&self) -> bool {
        !self.occ.iter().any(|b| *b)
    }

    /// Whether every column is a down-ray `{z_j : j < k_i}`.
    pub fn is_subgraph(&self) -> bool {
        (0..self.grid.ny()).all(|i| {
            let col = &self.occ[i * self.grid.nz()..(i + 1) * self.grid.nz()];
            col.windows(2).all(|w| w[0] || !w[1])
        })
    }

    /// Same set with the window offset moved by `a` (exact translation).
    pub fn translated(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.grid.set_z_shift(self.grid.z_shift() + a);
        out
    }

    /// `∫_{S^y} e^{cz} dz` for column `i`.
    pub fn column_integral(&self, i: usize, c: f64) -> f64 {
        let g = &self.grid;
        let dz = g.dz();
        let mut acc = 0.0;
        if self.contains(i, 0) {
            acc += (c * (g.z(0) - 0.5 * dz)).exp() / c;
        }
        for j in 0..g.nz() {
            if self.contains(i, j) {
                acc += exp_cell(c, g.z(j) - 0.5 * dz, dz);
            }
        }
        acc
    }

    /// Run-length encoded export: one row `y_index,z_start,z_end` (inclusive
    /// node indices) per maximal run of occupied cells.
    pub fn write_rle<W: Write>(&self, writer: W) -> Result<(), FunctionalError> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| FunctionalError::Csv(e.to_string());
        w.write_record(["y_index", "z_start", "z_end"]).map_err(err)?;
        for i in 0..self.grid.ny() {
            let mut j = 0;
            let nz = self.grid.nz();
            while j < nz {
                if self.contains(i, j) {
                    let start = j;
                    while j + 1 < nz && self.contains(i, j + 1) {
                        j += 1;
                    }
                    w.write_record([i.to_string(), start.to_string(), j.to_string()])
                        .map_err(err)?;
                }
                j += 1;
            }
        }
        w.flush().map_err(|e| FunctionalError::Csv(e.to_string()))
    }

    pub fn read_rle<R: Read>(grid: CylinderGrid, reader: R) -> Result<Self, FunctionalError> {
        let mut s = Self::empty(grid);
        let mut rdr = csv::Reader::from_reader(reader);
        for rec in rdr.deserialize::<(usize, usize, usize)>() {
            let (i, a, b) = rec.map_err(|e| FunctionalError::Csv(e.to_string()))?;
            if i >= s.grid.ny() || b >= s.grid.nz() || a > b {
                return Err(FunctionalError::Csv(format!("run ({i}, {a}, {b}) outside the grid")));
            }
            for j in a..=b {
                s.set(i, j, true);
            }
        }
        Ok(s)
    }
}

/// `∫_S e^{cz} dx`, including the infinite tails of bottom-occupied columns.
pub fn weighted_volume(s: &DiscreteSet, c: f64) -> f64 {
    let cross = s.grid.cross();
    (0..s.grid.ny()).map(|i| cross.weight(i) * s.column_integral(i, c)).sum()
}

/// Relative weighted perimeter `Σ_faces e^{cz} |face|` over interior faces.
pub fn per_c(s: &DiscreteSet, c: f64) -> f64 {
    let g = &s.grid;
    let (ny, nz, dz) = (g.ny(), g.nz(), g.dz());
    let cross = g.cross();
    let mut acc = 0.0;
    // Faces normal to z.
    for i in 0..ny {
        let w = cross.weight(i);
        for j in 0..nz {
            let above = j + 1 < nz && s.contains(i, j + 1);
            if s.contains(i, j) != above {
                acc += w * (c * (g.z(j) + 0.5 * dz)).exp();
            }
        }
    }
    // Faces normal to y, between columns i and i+1.
    for i in 0..ny - 1 {
        if s.contains(i, 0) != s.contains(i + 1, 0) {
            acc += (c * (g.z(0) - 0.5 * dz)).exp() / c;
        }
        for j in 0..nz {
            if s.contains(i, j) != s.contains(i + 1, j) {
                acc += exp_cell(c, g.z(j) - 0.5 * dz, dz);
            }
        }
    }
    acc
}

/// `𝓕_c(S) = c_W Per_c(S) − ∫_S e^{cz} g(y)`.
pub fn fgeo_c(s: &DiscreteSet, c: f64, well: &DoubleWell, forcing: &Forcing) -> f64 {
    let cross = s.grid.cross();
    let bulk: f64 = (0..s.grid.ny())
        .map(|i| cross.weight(i) * forcing.g()[i] * s.column_integral(i, c))
        .sum();
    well.c_w() * per_c(s, c) - bulk
}

/// `𝓕_c` of the subgraph of `ψ` with continuous (unquantized) heights and
/// the same face geometry as [`per_c`]: flat tops of width `w_i` and
/// vertical walls between neighbouring columns.
pub fn fgeo_c_graph(psi: &Profile, c: f64, well: &DoubleWell, forcing: &Forcing) -> f64 {
    let e: Vec<f64> = psi.values.iter().map(|p| (c * p).exp()).collect();
    let cross = &psi.cross;
    let tops: f64 = (0..e.len()).map(|i| cross.weight(i) * e[i]).sum();
    let walls: f64 = e.windows(2).map(|w| (w[1] - w[0]).abs() / c).sum();
    let bulk: f64 = (0..e.len())
        .map(|i| cross.weight(i) * forcing.g()[i] * e[i] / c)
        .sum();
    well.c_w() * (tops + walls) - bulk
}

/// `ψ(y) = (1/c) ln(c ∫_{S^y} e^{cz} dz)`, `−∞` on empty columns.
pub fn rearrange_subgraph(s: &DiscreteSet, c: f64) -> Result<Profile, FunctionalError> {
    let values: Vec<f64> = (0..s.grid.ny())
        .map(|i| {
            let m = s.column_integral(i, c);
            if m > 0.0 {
                (c * m).ln() / c
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    if values.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(FunctionalError::EmptySet);
    }
    Ok(Profile {
        cross: s.grid.cross().clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_quartic_well, CrossSection, ForcingDescriptor, G0Descriptor};

    /// Grid whose cell faces sit at integer multiples of `dz`.
    fn grid(ny: usize, lo: f64, hi: f64, dz: f64) -> CylinderGrid {
        let cross = CrossSection::new(1.0, ny).unwrap();
        CylinderGrid::new(cross, lo + 0.5 * dz, hi - 0.5 * dz, dz).unwrap()
    }

    #[test]
    fn flat_cut_perimeter() {
        let g = grid(11, -2.0, 2.0, 0.05);
        let s = DiscreteSet::from_fn(g.clone(), |_, z| z < 0.0);
        assert!((per_c(&s, 0.8) - 1.0).abs() < 1e-12);
        let c = 0.8;
        assert!((per_c(&s, c) - c * weighted_volume(&s, c)).abs() < 1e-12);
        let s2 = DiscreteSet::from_fn(g, |_, z| z < 0.5);
        assert!((per_c(&s2, c) - (c * 0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn flat_cut_fgeo() {
        let g = grid(11, -2.0, 2.0, 0.05);
        let cross = g.cross().clone();
        let well = build_quartic_well();
        let gbar = 0.1;
        let f = ForcingDescriptor::Product {
            g0: G0Descriptor::Constant { value: gbar },
        }
        .build(&cross)
        .unwrap();
        let s = DiscreteSet::from_fn(g.clone(), |_, z| z < 0.0);
        let c = 0.8;
        assert!((fgeo_c(&s, c, &well, &f) - (well.c_w() - gbar / c)).abs() < 1e-12);
        assert!(fgeo_c(&s, gbar / well.c_w(), &well, &f).abs() < 1e-12);
        assert_eq!(fgeo_c(&DiscreteSet::empty(g), c, &well, &f), 0.0);
    }

    #[test]
    fn stacked_slabs_rearrange_into_one_column() {
        let g = grid(5, -4.0, 3.0, 0.05);
        let cross = g.cross().clone();
        let well = build_quartic_well();
        let f = ForcingDescriptor::Product {
            g0: G0Descriptor::Constant { value: 0.1 },
        }
        .build(&cross)
        .unwrap();
        let c: f64 = 0.9;
        let s = DiscreteSet::from_fn(g.clone(), |_, z| (-2.0 < z && z < -1.0) || (0.0 < z && z < 1.0));
        // ∫ e^{cz} over both slabs, by hand.
        let mass = ((-c).exp() - (-2.0 * c).exp() + c.exp() - 1.0) / c;
        assert!((s.column_integral(2, c) - mass).abs() < 1e-12);
        let psi = rearrange_subgraph(&s, c).unwrap();
        let expect = (c * mass).ln() / c;
        assert!(psi.values.iter().all(|p| (p - expect).abs() < 1e-12));
        let r = DiscreteSet::subgraph(g, &psi);
        assert!(r.is_subgraph());
        assert!(fgeo_c(&r, c, &well, &f) < fgeo_c(&s, c, &well, &f));
        assert!(fgeo_c_graph(&psi, c, &well, &f) < fgeo_c(&s, c, &well, &f));
    }

    #[test]
    fn subgraph_is_a_rearrangement_fixed_point() {
        let g = grid(9, -3.0, 3.0, 0.02);
        let psi0 = Profile::from_fn(g.cross().clone(), |y| 0.3 * (3.0 * y).sin());
        let s = DiscreteSet::subgraph(g.clone(), &psi0);
        let psi = rearrange_subgraph(&s, 0.7).unwrap();
        assert!(psi.sup_distance(&psi0) <= g.dz());
    }

    #[test]
    fn empty_column_is_masked() {
        let g = grid(5, -1.0, 1.0, 0.1);
        let s = DiscreteSet::from_fn(g, |y, z| y > 0.3 && z < 0.0);
        let psi = rearrange_subgraph(&s, 1.0).unwrap();
        assert!(psi.is_masked(0) && !psi.is_masked(4));
    }

    #[test]
    fn rle_roundtrip_preserves_runs() {
        let g = grid(4, -1.0, 1.0, 0.25);
        let s = DiscreteSet::from_fn(g.clone(), |y, z| z < y - 0.5 || (z > 0.4 && z < 0.8));
        let mut buf = Vec::new();
        s.write_rle(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("y_index,z_start,z_end\n"));
        assert_eq!(DiscreteSet::read_rle(g.clone(), buf.as_slice()).unwrap(), s);
        assert!(DiscreteSet::read_rle(g, "y_index,z_start,z_end\n9,0,1\n".as_bytes()).is_err());
    }
}
