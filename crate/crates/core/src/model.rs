//! Geometry of the cylinder, the double-well potential and the stratified
//! forcing, together with the discrete fields and cross-section profiles
//! that every solver in the crate operates on.

use std::f64::consts::SQRT_2;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::simpson;

/// Node count of the composite Simpson rule used for `c_W`, `G` and `φ`.
pub const QUADRATURE_NODES: usize = 2049;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("cross-section needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("invalid length or spacing: {0}")]
    InvalidGeometry(String),
    #[error("nonzero-at-origin: a(y, 0) = {value:e} at y = {y}")]
    NonzeroAtOrigin { y: f64, value: f64 },
    #[error("invalid forcing table: {0}")]
    InvalidTable(String),
    #[error("shifted cubic forcing has no bistable structure for eps * g = {0}")]
    NoBistableShift(f64),
    #[error("field or profile holds a non-finite value at node {0}")]
    NonFinite(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// Uniform node grid on the cross-section `Ω = [0, L]` with homogeneous
/// Neumann conditions at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    length: f64,
    nodes: usize,
}

impl CrossSection {
    pub fn new(length: f64, nodes: usize) -> Result<Self, ModelError> {
        if nodes < 3 {
            return Err(ModelError::TooFewNodes(nodes));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(ModelError::InvalidGeometry(format!("length {length}")));
        }
        Ok(Self { length, nodes })
    }

    /// Coarsest grid with spacing not exceeding `max_spacing`.
    pub fn with_max_spacing(length: f64, max_spacing: f64) -> Result<Self, ModelError> {
        if !(max_spacing > 0.0) {
            return Err(ModelError::InvalidGeometry(format!("spacing {max_spacing}")));
        }
        let cells = (length / max_spacing - 1e-9).ceil().max(2.0) as usize;
        Self::new(length, cells + 1)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.nodes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dy(&self) -> f64 {
        self.length / (self.nodes - 1) as f64
    }

    pub fn y(&self, i: usize) -> f64 {
        if i + 1 == self.nodes {
            self.length
        } else {
            i as f64 * self.dy()
        }
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.y(i)).collect()
    }

    /// Width of the control cell owned by node `i` (half cells at the walls),
    /// i.e. the trapezoid weights.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.nodes {
            0.5 * self.dy()
        } else {
            self.dy()
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.weight(i)).collect()
    }

    /// Trapezoid integral of nodal values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().enumerate().map(|(i, v)| self.weight(i) * v).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            length: self.length * factor,
            nodes: self.nodes,
        }
    }
}

/// Truncated cylinder `Ω × [z_min, z_max]` with a moving-window offset.
///
/// Node `j` sits at window coordinate `z_min + j Δz`; its absolute axial
/// position is that plus `z_shift`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderGrid {
    cross: CrossSection,
    z_min: f64,
    dz: f64,
    nz: usize,
    z_shift: f64,
}

impl CylinderGrid {
    pub fn new(cross: CrossSection, z_min: f64, z_max: f64, max_dz: f64) -> Result<Self, ModelError> {
        if !(z_max > z_min) || !(max_dz > 0.0) {
            return Err(ModelError::InvalidGeometry(format!(
                "window [{z_min}, {z_max}] with dz {max_dz}"
            )));
        }
        let cells = ((z_max - z_min) / max_dz - 1e-9).ceil().max(2.0) as usize;
        Ok(Self {
            cross,
            z_min,
            dz: (z_max - z_min) / cells as f64,
            nz: cells + 1,
            z_shift: 0.0,
        })
    }

    pub fn cross(&self) -> &CrossSection {
        &self.cross
    }

    pub fn ny(&self) -> usize {
        self.cross.len()
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn dz(&self) -> f64 {
        self.dz
    }

    pub fn dy(&self) -> f64 {
        self.cross.dy()
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_min + (self.nz - 1) as f64 * self.dz
    }

    pub fn z_shift(&self) -> f64 {
        self.z_shift
    }

    pub fn set_z_shift(&mut self, shift: f64) {
        self.z_shift = shift;
    }

    /// Absolute axial coordinate of node `j`.
    pub fn z(&self, j: usize) -> f64 {
        self.z_shift + self.z_min + j as f64 * self.dz
    }

    pub fn len(&self) -> usize {
        self.ny() * self.nz
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nz + j
    }

    /// Checks the interface-resolution requirements for width parameter `eps`.
    pub fn check_resolution(&self, eps: f64) -> Result<(), ModelError> {
        if self.z_max() - self.z_min < 10.0 * eps {
            return Err(ModelError::InvalidGeometry(format!(
                "window length {} below 10 eps = {}",
                self.z_max() - self.z_min,
                10.0 * eps
            )));
        }
        Ok(())
    }

    /// Same node layout with every length divided by `eps` (the stretched
    /// variables `x / eps`).
    pub fn stretched(&self, eps: f64) -> Self {
        Self {
            cross: self.cross.scaled(1.0 / eps),
            z_min: self.z_min / eps,
            dz: self.dz / eps,
            nz: self.nz,
            z_shift: self.z_shift / eps,
        }
    }
}

// ---------------------------------------------------------------------------
// Fields and profiles
// ---------------------------------------------------------------------------

/// Scalar function `u(y_i, z_j)` on a cylinder grid. Storage is y-major with
/// contiguous z-lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: CylinderGrid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl Field {
    pub fn zeros(grid: CylinderGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
            time: 0.0,
        }
    }

    /// Samples `f(y, z)` at every node, `z` absolute.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: CylinderGrid, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.ny() {
            let y = grid.cross().y(i);
            for j in 0..grid.nz() {
                values.push(f(y, grid.z(j)));
            }
        }
        Self {
            grid,
            values,
            time: 0.0,
        }
    }

    pub fn from_values(grid: CylinderGrid, values: Vec<f64>) -> Result<Self, ModelError> {
        if values.len() != grid.len() {
            return Err(ModelError::Dimension {
                expected: grid.len(),
                got: values.len(),
            });
        }
        let field = Self {
            grid,
            values,
            time: 0.0,
        };
        field.check_finite()?;
        Ok(field)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.index(i, j);
        self.values[k] = v;
    }

    pub fn column(&self, i: usize) -> &[f64] {
        let nz = self.grid.nz();
        &self.values[i * nz..(i + 1) * nz]
    }

    /// Profile `y ↦ u(y, z_j)`.
    pub fn slice_z(&self, j: usize) -> Profile {
        Profile {
            cross: self.grid.cross().clone(),
            values: (0..self.grid.ny()).map(|i| self.at(i, j)).collect(),
        }
    }

    /// `max_y u(y, z_j)` for every `j`.
    pub fn max_over_y(&self) -> Vec<f64> {
        let mut m = vec![f64::NEG_INFINITY; self.grid.nz()];
        for i in 0..self.grid.ny() {
            for (mj, v) in m.iter_mut().zip(self.column(i)) {
                *mj = mj.max(*v);
            }
        }
        m
    }

    pub fn check_finite(&self) -> Result<(), ModelError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(ModelError::NonFinite(k)),
            None => Ok(()),
        }
    }

    /// Moves the window forward by `cells` whole cells: values slide toward
    /// lower indices and the vacated tail repeats the last column.
    pub fn advance_window(&mut self, cells: usize) {
        let nz = self.grid.nz();
        if cells == 0 {
            return;
        }
        for i in 0..self.grid.ny() {
            let col = &mut self.values[i * nz..(i + 1) * nz];
            let tail = col[nz - 1];
            if cells >= nz {
                col.iter_mut().for_each(|v| *v = tail);
                continue;
            }
            col.copy_within(cells.., 0);
            col[nz - cells..].iter_mut().for_each(|v| *v = tail);
        }
        let shift = self.grid.z_shift() + cells as f64 * self.grid.dz();
        self.grid.set_z_shift(shift);
    }

    /// Copy of the field with `u(y, z) -> u(y, z - a)` for a whole number of
    /// cells `a = k Δz`, extending by the boundary traces.
    pub fn translated_cells(&self, k: isize) -> Field {
        let nz = self.grid.nz() as isize;
        let mut out = self.clone();
        for i in 0..self.grid.ny() {
            let col = self.column(i);
            for j in 0..nz {
                let src = (j - k).clamp(0, nz - 1) as usize;
                out.values[self.grid.index(i, j as usize)] = col[src];
            }
        }
        out
    }

    /// Same values on the stretched grid (`x -> x / eps`).
    pub fn stretched(&self, eps: f64) -> Field {
        Field {
            grid: self.grid.stretched(eps),
            values: self.values.clone(),
            time: self.time,
        }
    }
}

/// Scalar function on the cross-section nodes. The sentinel `-∞` marks the
/// empty columns of a generalized profile (`ln 0 = -∞`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub cross: CrossSection,
    pub values: Vec<f64>,
}

impl Profile {
    pub fn new(cross: CrossSection, values: Vec<f64>) -> Result<Self, ModelError> {
        if values.len() != cross.len() {
            return Err(ModelError::Dimension {
                expected: cross.len(),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(ModelError::NonFinite(k));
        }
        Ok(Self { cross, values })
    }

    pub fn constant(cross: CrossSection, value: f64) -> Self {
        let n = cross.len();
        Self {
            cross,
            values: vec![value; n],
        }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(cross: CrossSection, f: F) -> Self {
        let values = cross.ys().into_iter().map(f).collect();
        Self { cross, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_masked(&self, i: usize) -> bool {
        self.values[i] == f64::NEG_INFINITY
    }

    pub fn mask(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.is_masked(i)).collect()
    }

    pub fn has_mask(&self) -> bool {
        self.values.iter().any(|v| *v == f64::NEG_INFINITY)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_finite(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min)
    }

    /// Shifted copy with `max = 0`.
    pub fn normalized_max_zero(&self) -> Profile {
        let m = self.max();
        Profile {
            cross: self.cross.clone(),
            values: self.values.iter().map(|v| v - m).collect(),
        }
    }

    /// Linear interpolation at `y` (masked neighbours yield `-∞`).
    pub fn interpolate(&self, y: f64) -> f64 {
        let dy = self.cross.dy();
        let x = (y / dy).clamp(0.0, (self.len() - 1) as f64);
        let k = (x.floor() as usize).min(self.len() - 2);
        let t = x - k as f64;
        let (a, b) = (self.values[k], self.values[k + 1]);
        if !a.is_finite() || !b.is_finite() {
            return f64::NEG_INFINITY;
        }
        a * (1.0 - t) + b * t
    }

    pub fn sup_distance(&self, other: &Profile) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| {
                if a == b {
                    0.0
                } else {
                    (a - b).abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Double well
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WellDescriptor {
    /// `W(u) = u²(1-u)²/4`.
    Quartic,
    /// `f(u) = u(1-u)(u-a)`, `W = -∫f`; balanced only for `a = 1/2`.
    Cubic { a: f64 },
}

impl WellDescriptor {
    pub fn build(&self) -> DoubleWell {
        match *self {
            WellDescriptor::Quartic => build_quartic_well(),
            WellDescriptor::Cubic { a } => build_cubic_well(a),
        }
    }
}

/// Record of the sampled checks of the double-well conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WellCertificate {
    pub u_min: f64,
    pub u_max: f64,
    pub samples: usize,
    pub roots_ok: bool,
    pub slope_at_zero: f64,
    pub slope_at_one: f64,
    pub balanced: bool,
    pub positive_off_wells: bool,
    pub min_w_off_wells: f64,
    pub c_w_quadrature: f64,
    pub valid: bool,
}

#[derive(Debug, Clone)]
pub struct DoubleWell {
    descriptor: WellDescriptor,
    c_w: f64,
    certificate: WellCertificate,
    phi_table: PhiTable,
}

pub fn build_quartic_well() -> DoubleWell {
    DoubleWell::from_descriptor(WellDescriptor::Quartic, Some(1.0 / (6.0 * SQRT_2)))
}

pub fn build_cubic_well(a: f64) -> DoubleWell {
    DoubleWell::from_descriptor(WellDescriptor::Cubic { a }, None)
}

impl DoubleWell {
    fn from_descriptor(descriptor: WellDescriptor, closed_form_cw: Option<f64>) -> Self {
        let mut well = Self {
            descriptor,
            c_w: 0.0,
            certificate: WellCertificate {
                u_min: -1.0,
                u_max: 2.0,
                samples: 3001,
                roots_ok: false,
                slope_at_zero: 0.0,
                slope_at_one: 0.0,
                balanced: false,
                positive_off_wells: false,
                min_w_off_wells: 0.0,
                c_w_quadrature: 0.0,
                valid: false,
            },
            phi_table: PhiTable::default(),
        };
        let quad = simpson(|u| (2.0 * well.w(u).max(0.0)).sqrt(), 0.0, 1.0, QUADRATURE_NODES);
        well.c_w = closed_form_cw.unwrap_or(quad);
        well.certificate = well.certify(quad);
        well.phi_table = PhiTable::build(&well);
        well
    }

    fn certify(&self, c_w_quadrature: f64) -> WellCertificate {
        let (u_min, u_max, samples) = (-1.0, 2.0, 3001usize);
        let h = 1e-5;
        let slope = |u: f64| (self.f(u + h) - self.f(u - h)) / (2.0 * h);
        let roots_ok = self.f(0.0).abs() < 1e-14 && self.f(1.0).abs() < 1e-14;
        let balanced = self.w(0.0).abs() < 1e-14 && self.w(1.0).abs() < 1e-14;
        let mut min_w = f64::INFINITY;
        for k in 0..samples {
            if k == 1000 || k == 2000 {
                continue;
            }
            let u = u_min + (u_max - u_min) * k as f64 / (samples - 1) as f64;
            min_w = min_w.min(self.w(u));
        }
        let (s0, s1) = (slope(0.0), slope(1.0));
        let positive = min_w > 0.0;
        WellCertificate {
            u_min,
            u_max,
            samples,
            roots_ok,
            slope_at_zero: s0,
            slope_at_one: s1,
            balanced,
            positive_off_wells: positive,
            min_w_off_wells: min_w,
            c_w_quadrature,
            valid: roots_ok && balanced && positive && s0 < 0.0 && s1 < 0.0,
        }
    }

    pub fn descriptor(&self) -> WellDescriptor {
        self.descriptor
    }

    pub fn c_w(&self) -> f64 {
        self.c_w
    }

    pub fn certificate(&self) -> &WellCertificate {
        &self.certificate
    }

    #[inline]
    pub fn w(&self, u: f64) -> f64 {
        match self.descriptor {
            WellDescriptor::Quartic => 0.25 * u * u * (1.0 - u) * (1.0 - u),
            WellDescriptor::Cubic { a } => {
                u * u * (0.25 * u * u - (1.0 + a) * u / 3.0 + 0.5 * a)
            }
        }
    }

    /// `f = -W'`.
    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        match self.descriptor {
            WellDescriptor::Quartic => u * (1.0 - u) * (u - 0.5),
            WellDescriptor::Cubic { a } => u * (1.0 - u) * (u - a),
        }
    }

    /// `W''`.
    #[inline]
    pub fn w2(&self, u: f64) -> f64 {
        match self.descriptor {
            WellDescriptor::Quartic => 0.5 * (1.0 - 6.0 * u + 6.0 * u * u),
            WellDescriptor::Cubic { a } => 3.0 * u * u - 2.0 * (1.0 + a) * u + a,
        }
    }

    /// `φ(u) = ∫_0^u √(2W(s)) ds` from the cached table.
    pub fn phi(&self, u: f64) -> f64 {
        self.phi_table.eval(self, u)
    }

    /// Heteroclinic profile `γ' = √(2W(γ))`, `γ(0) = 1/2`.
    pub fn gamma(&self, t: f64) -> f64 {
        self.phi_table.gamma(t)
    }
}

/// Tabulated primitive `φ` on `[-1, 2]` and the heteroclinic `γ` on `[-T, T]`.
#[derive(Debug, Clone, Default)]
struct PhiTable {
    u0: f64,
    du: f64,
    phi: Vec<f64>,
    t0: f64,
    dt: f64,
    gamma: Vec<f64>,
    gamma_slope: Vec<f64>,
}

impl PhiTable {
    const U_LO: f64 = -1.0;
    const U_HI: f64 = 2.0;
    const CELLS: usize = 3000;
    const T_HALF: f64 = 40.0;
    const T_CELLS: usize = 16000;

    fn build(well: &DoubleWell) -> Self {
        let rate = |u: f64| (2.0 * well.w(u).max(0.0)).sqrt();
        let du = (Self::U_HI - Self::U_LO) / Self::CELLS as f64;
        let zero = (-Self::U_LO / du).round() as usize;
        let mut phi = vec![0.0; Self::CELLS + 1];
        for k in zero + 1..=Self::CELLS {
            let a = Self::U_LO + (k - 1) as f64 * du;
            phi[k] = phi[k - 1] + simpson(rate, a, a + du, 9);
        }
        for k in (0..zero).rev() {
            let a = Self::U_LO + k as f64 * du;
            phi[k] = phi[k + 1] - simpson(rate, a, a + du, 9);
        }

        // RK4 from γ(0) = 1/2 in both directions.
        let dt = 2.0 * Self::T_HALF / Self::T_CELLS as f64;
        let mid = Self::T_CELLS / 2;
        let mut gamma = vec![0.0; Self::T_CELLS + 1];
        gamma[mid] = 0.5;
        let rk4 = |g: f64, h: f64| {
            let k1 = rate(g);
            let k2 = rate(g + 0.5 * h * k1);
            let k3 = rate(g + 0.5 * h * k2);
            let k4 = rate(g + h * k3);
            g + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        };
        for k in mid + 1..=Self::T_CELLS {
            gamma[k] = rk4(gamma[k - 1], dt);
        }
        for k in (0..mid).rev() {
            gamma[k] = rk4(gamma[k + 1], -dt);
        }
        let gamma_slope = gamma.iter().map(|g| rate(*g)).collect();
        Self {
            u0: Self::U_LO,
            du,
            phi,
            t0: -Self::T_HALF,
            dt,
            gamma,
            gamma_slope,
        }
    }

    fn eval(&self, well: &DoubleWell, u: f64) -> f64 {
        let rate = |s: f64| (2.0 * well.w(s).max(0.0)).sqrt();
        let last = self.phi.len() - 1;
        let hi = self.u0 + last as f64 * self.du;
        if u < self.u0 {
            return self.phi[0] - simpson(rate, u, self.u0, 65);
        }
        if u > hi {
            return self.phi[last] + simpson(rate, hi, u, 65);
        }
        let x = (u - self.u0) / self.du;
        let k = (x.floor() as usize).min(last - 1);
        let a = self.u0 + k as f64 * self.du;
        self.phi[k] + simpson(rate, a, u, 9)
    }

    fn gamma(&self, t: f64) -> f64 {
        let last = self.gamma.len() - 1;
        let x = (t - self.t0) / self.dt;
        if x <= 0.0 {
            return self.gamma[0];
        }
        if x >= last as f64 {
            return self.gamma[last];
        }
        let k = (x.floor() as usize).min(last - 1);
        let s = x - k as f64;
        // Cubic Hermite with the exact slopes √(2W(γ)).
        let (p0, p1) = (self.gamma[k], self.gamma[k + 1]);
        let (m0, m1) = (self.gamma_slope[k] * self.dt, self.gamma_slope[k + 1] * self.dt);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * p0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * p1
            + (s3 - s2) * m1
    }
}

// ---------------------------------------------------------------------------
// Forcing
// ---------------------------------------------------------------------------

/// Transverse shape `g₀(y)` of the product forcing `a(y,u) = 6 g₀(y)(u - u²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum G0Descriptor {
    Constant { value: f64 },
    /// `mean (1 + relative_amplitude cos(π y / L))`.
    Cosine { mean: f64, relative_amplitude: f64 },
    /// `inside` on `[start, end]`, `background` elsewhere.
    Step { background: f64, inside: f64, start: f64, end: f64 },
    /// Piecewise-linear table.
    Table { y: Vec<f64>, g: Vec<f64> },
}

impl G0Descriptor {
    pub fn eval(&self, y: f64, length: f64) -> f64 {
        match self {
            G0Descriptor::Constant { value } => *value,
            G0Descriptor::Cosine { mean, relative_amplitude } => {
                mean * (1.0 + relative_amplitude * (std::f64::consts::PI * y / length).cos())
            }
            G0Descriptor::Step { background, inside, start, end } => {
                if y >= *start && y <= *end {
                    *inside
                } else {
                    *background
                }
            }
            G0Descriptor::Table { y: ys, g } => interp_linear(ys, g, y),
        }
    }
}

/// General tabulated `a(y, u)` on a tensor grid (row-major in `y`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedA {
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub a: Vec<f64>,
}

impl TabulatedA {
    /// Reads CSV with header `y,u,a`. Rows may come in any order but must
    /// cover a full tensor grid.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, ModelError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| ModelError::InvalidTable(e.to_string()))?
            .clone();
        let cols: Vec<&str> = headers.iter().map(|h| h.trim()).collect();
        if cols != ["y", "u", "a"] {
            return Err(ModelError::InvalidTable(format!("header {cols:?}, expected y,u,a")));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| ModelError::InvalidTable(e.to_string()))?;
            let parse = |k: usize| -> Result<f64, ModelError> {
                rec[k]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| ModelError::InvalidTable(format!("{e} in {:?}", &rec[k])))
            };
            rows.push((parse(0)?, parse(1)?, parse(2)?));
        }
        let mut ys: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let mut us: Vec<f64> = rows.iter().map(|r| r.1).collect();
        for v in [&mut ys, &mut us] {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v.dedup();
        }
        if ys.len() * us.len() != rows.len() {
            return Err(ModelError::InvalidTable(format!(
                "{} rows do not form a {}x{} grid",
                rows.len(),
                ys.len(),
                us.len()
            )));
        }
        let mut a = vec![f64::NAN; ys.len() * us.len()];
        for (y, u, v) in rows {
            let i = ys.iter().position(|t| *t == y).unwrap();
            let k = us.iter().position(|t| *t == u).unwrap();
            a[i * us.len() + k] = v;
        }
        if a.iter().any(|v| v.is_nan()) {
            return Err(ModelError::InvalidTable("duplicate grid entries".into()));
        }
        Ok(Self { y: ys, u: us, a })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingDescriptor {
    /// `a(y,u) = 6 g₀(y)(u - u²)`; then `g = g₀` exactly.
    Product { g0: G0Descriptor },
    /// General tabulated `a(y,u)`.
    Tabulated { table: TabulatedA },
    /// The homogeneous unscaled cubic model with constant forcing `ε ḡ`,
    /// rewritten around its lower equilibrium `v₀(ε)`:
    /// `a_ε(u) = (3 v₀/ε) u (1 - v₀ - u)`. Tends to the product form with
    /// `g ≡ ḡ` as `ε → 0`.
    ShiftedCubic { g_bar: f64 },
}

impl ForcingDescriptor {
    pub fn is_eps_dependent(&self) -> bool {
        matches!(self, ForcingDescriptor::ShiftedCubic { .. })
    }

    /// The `ε → 0` forcing, i.e. the one seen by the sharp-interface model.
    pub fn build(&self, cross: &CrossSection) -> Result<Forcing, ModelError> {
        self.build_at(cross, None)
    }

    /// Forcing at interface width `eps` (only the shifted cubic depends on it).
    pub fn build_at(&self, cross: &CrossSection, eps: Option<f64>) -> Result<Forcing, ModelError> {
        let ys = cross.ys();
        let kind = match self {
            ForcingDescriptor::Product { g0 } => ForcingKind::Product {
                g0: ys.iter().map(|y| g0.eval(*y, cross.length())).collect(),
            },
            ForcingDescriptor::Tabulated { table } => ForcingKind::table(table, &ys)?,
            ForcingDescriptor::ShiftedCubic { g_bar } => match eps {
                None => ForcingKind::Product {
                    g0: vec![*g_bar; ys.len()],
                },
                Some(eps) => {
                    let [v0, _, _] = shifted_cubic_roots(*g_bar, eps)?;
                    ForcingKind::ShiftedCubic {
                        coef: 3.0 * v0 / eps,
                        shift: v0,
                    }
                }
            },
        };
        Forcing::new(cross.clone(), kind, eps)
    }
}

/// Roots `v₀ < v_m < v₁` of `φ(1-φ)(φ-1/2) + ε ḡ = 0`.
pub fn shifted_cubic_roots(g_bar: f64, eps: f64) -> Result<[f64; 3], ModelError> {
    let s = eps * g_bar;
    let p = |x: f64| x * (1.0 - x) * (x - 0.5) + s;
    let dp = |x: f64| -3.0 * x * x + 3.0 * x - 0.5;
    // Local extrema of the cubic sit at 1/2 ± 1/(2√3).
    let lo_ext = 0.5 - 0.5 / 3f64.sqrt();
    let hi_ext = 0.5 + 0.5 / 3f64.sqrt();
    if p(lo_ext) >= 0.0 || p(hi_ext) <= 0.0 {
        return Err(ModelError::NoBistableShift(s));
    }
    let bisect = |mut a: f64, mut b: f64| {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if p(a) * p(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        let mut x = 0.5 * (a + b);
        for _ in 0..3 {
            let d = dp(x);
            if d != 0.0 {
                x -= p(x) / d;
            }
        }
        x
    };
    Ok([
        bisect(-1.0, lo_ext),
        bisect(lo_ext, hi_ext),
        bisect(hi_ext, 2.0),
    ])
}

#[derive(Debug, Clone)]
enum ForcingKind {
    Product { g0: Vec<f64> },
    Table { u: Vec<f64>, a: Vec<Vec<f64>>, big_g: Vec<Vec<f64>> },
    ShiftedCubic { coef: f64, shift: f64 },
}

impl ForcingKind {
    fn table(t: &TabulatedA, ys: &[f64]) -> Result<Self, ModelError> {
        let nu = t.u.len();
        if t.y.len() < 2 || nu < 2 || t.a.len() != t.y.len() * nu {
            return Err(ModelError::InvalidTable("need at least a 2x2 grid".into()));
        }
        if !(t.u[0] <= 0.0 && *t.u.last().unwrap() >= 1.0) {
            return Err(ModelError::InvalidTable("u-range must cover [0, 1]".into()));
        }
        // Make u = 0 a table node so that a(y, 0) is read off, not interpolated.
        let mut u = t.u.clone();
        if !u.contains(&0.0) {
            u.push(0.0);
            u.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        let mut rows = Vec::with_capacity(ys.len());
        for &y in ys {
            let row: Vec<f64> = u
                .iter()
                .map(|&uu| {
                    let col: Vec<f64> = (0..t.y.len())
                        .map(|i| interp_linear(&t.u, &t.a[i * nu..(i + 1) * nu], uu))
                        .collect();
                    interp_linear(&t.y, &col, y)
                })
                .collect();
            let zero = u.iter().position(|v| *v == 0.0).unwrap();
            if row[zero].abs() > 1e-12 {
                return Err(ModelError::NonzeroAtOrigin { y, value: row[zero] });
            }
            rows.push(row);
        }
        // G(y, u_k) by exact integration of the piecewise-linear interpolant.
        let zero = u.iter().position(|v| *v == 0.0).unwrap();
        let big_g = rows
            .iter()
            .map(|row| {
                let mut g = vec![0.0; u.len()];
                for k in zero + 1..u.len() {
                    g[k] = g[k - 1] + 0.5 * (row[k] + row[k - 1]) * (u[k] - u[k - 1]);
                }
                for k in (0..zero).rev() {
                    g[k] = g[k + 1] - 0.5 * (row[k] + row[k + 1]) * (u[k + 1] - u[k]);
                }
                g
            })
            .collect();
        Ok(ForcingKind::Table { u, a: rows, big_g })
    }
}

/// The stratified reaction term `a(y,u)`, its primitive `G(y,u)` and the
/// curvature forcing `g(y) = G(y,1)`, all sampled on cross-section nodes.
#[derive(Debug, Clone)]
pub struct Forcing {
    cross: CrossSection,
    kind: ForcingKind,
    g: Vec<f64>,
    eps: Option<f64>,
}

pub fn build_forcing(desc: &ForcingDescriptor, cross: &CrossSection) -> Result<Forcing, ModelError> {
    desc.build(cross)
}

impl Forcing {
    fn new(cross: CrossSection, kind: ForcingKind, eps: Option<f64>) -> Result<Self, ModelError> {
        let mut f = Self {
            g: Vec::new(),
            cross,
            kind,
            eps,
        };
        for i in 0..f.cross.len() {
            let a0 = f.a(i, 0.0);
            if a0.abs() > 1e-12 {
                return Err(ModelError::NonzeroAtOrigin {
                    y: f.cross.y(i),
                    value: a0,
                });
            }
        }
        f.g = (0..f.cross.len())
            .map(|i| match &f.kind {
                ForcingKind::Product { g0 } => g0[i],
                _ => f.big_g(i, 1.0),
            })
            .collect();
        Ok(f)
    }

    /// Identically zero forcing.
    pub fn zero(cross: &CrossSection) -> Self {
        Self::new(
            cross.clone(),
            ForcingKind::Product {
                g0: vec![0.0; cross.len()],
            },
            None,
        )
        .expect("zero forcing is valid")
    }

    pub fn cross(&self) -> &CrossSection {
        &self.cross
    }

    pub fn eps(&self) -> Option<f64> {
        self.eps
    }

    /// `g(y_i) = G(y_i, 1)`.
    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn mean_g(&self) -> f64 {
        self.cross.integrate(&self.g) / self.cross.length()
    }

    pub fn sup_g(&self) -> f64 {
        self.g.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf_g(&self) -> f64 {
        self.g.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            ForcingKind::Product { g0 } => g0.iter().all(|v| *v == 0.0),
            ForcingKind::Table { a, .. } => a.iter().flatten().all(|v| *v == 0.0),
            ForcingKind::ShiftedCubic { coef, .. } => *coef == 0.0,
        }
    }

    /// Same forcing resampled onto another cross-section grid (product and
    /// shifted-cubic forcings only; tables are rebuilt from their descriptor).
    pub fn resampled(&self, cross: &CrossSection) -> Option<Forcing> {
        let kind = match &self.kind {
            ForcingKind::Product { g0 } => {
                let p = Profile {
                    cross: self.cross.clone(),
                    values: g0.clone(),
                };
                ForcingKind::Product {
                    g0: cross.ys().iter().map(|y| p.interpolate(*y)).collect(),
                }
            }
            ForcingKind::ShiftedCubic { coef, shift } => ForcingKind::ShiftedCubic {
                coef: *coef,
                shift: *shift,
            },
            ForcingKind::Table { .. } => return None,
        };
        Forcing::new(cross.clone(), kind, self.eps).ok()
    }

    #[inline]
    pub fn a(&self, i: usize, u: f64) -> f64 {
        match &self.kind {
            ForcingKind::Product { g0 } => 6.0 * g0[i] * (u - u * u),
            ForcingKind::ShiftedCubic { coef, shift } => coef * u * (1.0 - shift - u),
            ForcingKind::Table { u: us, a, .. } => interp_linear(us, &a[i], u),
        }
    }

    /// `∂a/∂u`.
    #[inline]
    pub fn a_u(&self, i: usize, u: f64) -> f64 {
        match &self.kind {
            ForcingKind::Product { g0 } => 6.0 * g0[i] * (1.0 - 2.0 * u),
            ForcingKind::ShiftedCubic { coef, shift } => coef * (1.0 - shift - 2.0 * u),
            ForcingKind::Table { u: us, a, .. } => {
                let k = segment(us, u);
                (a[i][k + 1] - a[i][k]) / (us[k + 1] - us[k])
            }
        }
    }

    /// `G(y_i, u) = ∫_0^u a(y_i, s) ds`.
    #[inline]
    pub fn big_g(&self, i: usize, u: f64) -> f64 {
        match &self.kind {
            ForcingKind::Product { g0 } => 6.0 * g0[i] * (0.5 * u * u - u * u * u / 3.0),
            ForcingKind::ShiftedCubic { coef, shift } => {
                coef * ((1.0 - shift) * 0.5 * u * u - u * u * u / 3.0)
            }
            ForcingKind::Table { u: us, a, big_g } => {
                let k = segment(us, u);
                let t = u - us[k];
                let slope = (a[i][k + 1] - a[i][k]) / (us[k + 1] - us[k]);
                big_g[i][k] + a[i][k] * t + 0.5 * slope * t * t
            }
        }
    }

    /// `sup |G|` over `u ∈ [lo, hi]` on the nodes (sampled).
    pub fn sup_abs_big_g(&self, lo: f64, hi: f64) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.cross.len() {
            for k in 0..=64 {
                let u = lo + (hi - lo) * k as f64 / 64.0;
                m = m.max(self.big_g(i, u).abs());
            }
        }
        m
    }

    /// Largest deviation between `g(y)` and an independent Simpson quadrature
    /// of `a(y, ·)` over `[0, 1]`.
    pub fn quadrature_defect(&self) -> f64 {
        (0..self.cross.len())
            .map(|i| {
                let q = match &self.kind {
                    ForcingKind::Table { u, .. } => {
                        // Integrate segment by segment so the kinks of the
                        // interpolant fall on quadrature breakpoints.
                        let mut acc = 0.0;
                        for k in 0..u.len() - 1 {
                            let (lo, hi) = (u[k].max(0.0), u[k + 1].min(1.0));
                            if hi > lo {
                                acc += simpson(|s| self.a(i, s), lo, hi, 5);
                            }
                        }
                        acc
                    }
                    _ => simpson(|s| self.a(i, s), 0.0, 1.0, QUADRATURE_NODES),
                };
                (q - self.g[i]).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn segment(xs: &[f64], x: f64) -> usize {
    match xs.iter().position(|v| *v > x) {
        Some(0) => 0,
        Some(k) => k - 1,
        None => xs.len() - 2,
    }
}

/// Piecewise-linear interpolation with linear extrapolation at the ends.
pub fn interp_linear(xs: &[f64], vs: &[f64], x: f64) -> f64 {
    if xs.len() == 1 {
        return vs[0];
    }
    let k = segment(xs, x);
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    vs[k] * (1.0 - t) + vs[k + 1] * t
}

// ---------------------------------------------------------------------------
// Constants of the potential
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WellConstantOptions {
    /// The constant `C` in the excluded band `(1 - C√ε, 1 + C√ε)`.
    pub c: f64,
    pub delta0: f64,
    /// Scan range in `u`.
    pub u_min: f64,
    pub u_max: f64,
    pub samples: usize,
}

impl Default for WellConstantOptions {
    fn default() -> Self {
        Self {
            c: 1.0,
            delta0: 0.2,
            u_min: -3.0,
            u_max: 5.0,
            samples: 4001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WellConstantsReport {
    pub eps: f64,
    pub nonnegative: bool,
    pub min_value_outside_band: f64,
    pub increasing: bool,
    /// The interval `[1 + Cε, 1 + δ₀]` was empty.
    pub increasing_vacuous: bool,
    pub pass: bool,
    pub largest_passing_eps: Option<f64>,
}

fn scan_well_constants(well: &DoubleWell, forcing: &Forcing, eps: f64, opts: &WellConstantOptions) -> WellConstantsReport {
    let band = opts.c * eps.sqrt();
    let mut min_val = f64::INFINITY;
    for i in 0..forcing.cross().len() {
        for k in 0..opts.samples {
            let u = opts.u_min + (opts.u_max - opts.u_min) * k as f64 / (opts.samples - 1) as f64;
            if u > 1.0 - band && u < 1.0 + band {
                continue;
            }
            min_val = min_val.min(well.w(u) / eps - forcing.big_g(i, u));
        }
    }
    let lo = 1.0 + opts.c * eps;
    let hi = 1.0 + opts.delta0;
    let vacuous = lo >= hi;
    let mut increasing = true;
    if !vacuous {
        let n = 401;
        for i in 0..forcing.cross().len() {
            let v = |u: f64| well.w(u) / eps - forcing.big_g(i, u);
            let mut prev = v(lo);
            for k in 1..n {
                let u = lo + (hi - lo) * k as f64 / (n - 1) as f64;
                let cur = v(u);
                if cur < prev - 1e-14 {
                    increasing = false;
                }
                prev = cur;
            }
        }
    }
    let nonnegative = min_val >= -1e-14 || min_val == f64::INFINITY;
    WellConstantsReport {
        eps,
        nonnegative,
        min_value_outside_band: min_val,
        increasing,
        increasing_vacuous: vacuous,
        pass: nonnegative && increasing,
        largest_passing_eps: None,
    }
}

/// Checks that `ε⁻¹W - G ≥ 0` outside `(1 - C√ε, 1 + C√ε)` and is increasing
/// on `[1 + Cε, 1 + δ₀]` on a sampled `(y, u)` grid; also reports the largest
/// value in `candidates` passing both.
pub fn check_well_constants(
    well: &DoubleWell,
    forcing: &Forcing,
    eps: f64,
    opts: &WellConstantOptions,
    candidates: &[f64],
) -> WellConstantsReport {
    let mut report = scan_well_constants(well, forcing, eps, opts);
    report.largest_passing_eps = candidates
        .iter()
        .cloned()
        .filter(|e| *e > 0.0 && scan_well_constants(well, forcing, *e, opts).pass)
        .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e))));
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cross() -> CrossSection {
        CrossSection::new(1.0, 41).unwrap()
    }

    #[test]
    fn quartic_well_constants() {
        let w = build_quartic_well();
        assert!((w.c_w() - 0.1178511302).abs() < 1e-10);
        assert_eq!(w.w(0.5), 1.0 / 64.0);
        assert_eq!(w.f(0.0), 0.0);
        assert_eq!(w.f(1.0), 0.0);
        assert_eq!(w.w(0.0), 0.0);
        assert_eq!(w.w(1.0), 0.0);
        let cert = w.certificate();
        assert!(cert.valid, "{cert:?}");
        assert!(((cert.c_w_quadrature - w.c_w()) / w.c_w()).abs() < 1e-8);
        assert!(cert.slope_at_zero < 0.0 && cert.slope_at_one < 0.0);
    }

    #[test]
    fn f_is_minus_w_prime() {
        for well in [build_quartic_well(), build_cubic_well(0.3)] {
            let h = 1e-4;
            let mut worst: f64 = 0.0;
            for k in 0..1000 {
                let u = -1.0 + 3.0 * k as f64 / 999.0;
                let fd = -(well.w(u + h) - well.w(u - h)) / (2.0 * h);
                worst = worst.max((fd - well.f(u)).abs());
                let fd2 = (well.w(u + h) - 2.0 * well.w(u) + well.w(u - h)) / (h * h);
                assert!((fd2 - well.w2(u)).abs() < 1e-5);
            }
            // Central differences of a quartic: error = h² |W'''| / 6.
            assert!(worst < 1e-7, "{worst}");
        }
    }

    #[test]
    fn unbalanced_cubic_is_flagged() {
        let w = build_cubic_well(0.4);
        assert!(!w.certificate().balanced);
        assert!(!w.certificate().valid);
        assert!(build_cubic_well(0.5).certificate().valid);
    }

    #[test]
    fn phi_primitive_and_gamma() {
        let w = build_quartic_well();
        assert!((w.phi(1.0) - w.c_w()).abs() < 1e-10);
        assert_eq!(w.phi(0.0), 0.0);
        // Closed form on [0,1]: (u²/2 - u³/3)/√2.
        for u in [0.1, 0.37, 0.5, 0.9] {
            let exact = (0.5 * u * u - u * u * u / 3.0) / SQRT_2;
            assert!((w.phi(u) - exact).abs() < 1e-12);
        }
        assert!(w.phi(-0.5) < 0.0 && w.phi(1.5) > w.c_w());
    }

    #[test]
    fn heteroclinic_matches_tanh() {
        // γ' = √(2W(γ)) = γ(1-γ)/√2 with γ(0)=1/2 is solved by
        // γ(t) = (1 + tanh(t / (2√2))) / 2; check the substitution first.
        let exact = |t: f64| 0.5 * (1.0 + (t / (2.0 * SQRT_2)).tanh());
        for t in [-3.0, 0.0, 1.3] {
            let h = 1e-5;
            let lhs = (exact(t + h) - exact(t - h)) / (2.0 * h);
            let g = exact(t);
            assert!((lhs - g * (1.0 - g) / SQRT_2).abs() < 1e-9);
        }
        let w = build_quartic_well();
        let mut worst: f64 = 0.0;
        for k in 0..=400 {
            let t = -20.0 + 40.0 * k as f64 / 400.0 + 0.0137;
            worst = worst.max((w.gamma(t) - exact(t)).abs());
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn product_forcing_constant_and_cosine() {
        let cross = unit_cross();
        let f = ForcingDescriptor::Product {
            g0: G0Descriptor::Constant { value: 0.1 },
        }
        .build(&cross)
        .unwrap();
        assert!(f.g().iter().all(|g| *g == 0.1));
        assert!(f.quadrature_defect() < 1e-8);
        let cos = ForcingDescriptor::Product {
            g0: G0Descriptor::Cosine {
                mean: 0.1,
                relative_amplitude: 0.5,
            },
        }
        .build(&cross)
        .unwrap();
        assert!((cos.mean_g() - 0.1).abs() < 1e-12);
        assert!((cos.sup_g() - 0.15).abs() < 1e-12);
        assert!(cos.quadrature_defect() < 1e-8);
        for i in 0..cross.len() {
            assert_eq!(cos.a(i, 0.0), 0.0);
        }
    }

    #[test]
    fn tabulated_forcing_rejects_nonzero_origin() {
        let csv = "y,u,a\n0,0,0.01\n0,1,0\n1,0,0.01\n1,1,0\n";
        let table = TabulatedA::from_csv(csv.as_bytes()).unwrap();
        let err = ForcingDescriptor::Tabulated { table }.build(&unit_cross()).unwrap_err();
        assert!(err.to_string().starts_with("nonzero-at-origin"), "{err}");
    }

    #[test]
    fn tabulated_forcing_integrates_exactly() {
        // a(y,u) = 6 y (u - u²) sampled on a coarse u-grid.
        let mut csv = String::from("y,u,a\n");
        for y in [0.0, 0.5, 1.0] {
            for k in 0..=20 {
                let u = -0.5 + 2.0 * k as f64 / 20.0;
                csv.push_str(&format!("{y},{u},{}\n", 6.0 * y * (u - u * u)));
            }
        }
        let table = TabulatedA::from_csv(csv.as_bytes()).unwrap();
        let f = ForcingDescriptor::Tabulated { table }.build(&unit_cross()).unwrap();
        assert!(f.quadrature_defect() < 1e-8);
        // Trapezoid rule on a quadratic: error h² |a''| / 12 = 0.01 at y = 1.
        let last = unit_cross().len() - 1;
        assert!((f.g()[last] - 0.99).abs() < 1e-12);
    }

    #[test]
    fn shifted_cubic_tends_to_product() {
        let cross = unit_cross();
        let desc = ForcingDescriptor::ShiftedCubic { g_bar: 0.1 };
        let lim = desc.build(&cross).unwrap();
        assert!(lim.g().iter().all(|g| *g == 0.1));
        let mut prev = f64::INFINITY;
        for eps in [0.1, 0.05, 0.025, 0.0125] {
            let f = desc.build_at(&cross, Some(eps)).unwrap();
            assert_eq!(f.a(3, 0.0), 0.0);
            assert!(f.quadrature_defect() < 1e-8);
            let d = (f.g()[0] - 0.1).abs();
            assert!(d < prev);
            prev = d;
        }
        let [v0, vm, v1] = shifted_cubic_roots(0.1, 0.05).unwrap();
        for v in [v0, vm, v1] {
            assert!((v * (1.0 - v) * (v - 0.5) + 0.005).abs() < 1e-15);
        }
        assert!(v0 < vm && vm < v1);
    }

    #[test]
    fn well_constant_scan() {
        let well = build_quartic_well();
        let cross = unit_cross();
        let f = ForcingDescriptor::Product {
            g0: G0Descriptor::Constant { value: 0.1 },
        }
        .build(&cross)
        .unwrap();
        let opts = WellConstantOptions::default();
        let r = check_well_constants(&well, &f, 0.01, &opts, &[0.001, 0.01, 0.05, 10.0]);
        assert!(r.pass, "{r:?}");
        let bad = check_well_constants(&well, &f, 10.0, &opts, &[]);
        assert!(!bad.pass);
        assert!(r.largest_passing_eps.unwrap() < 10.0);
        let zero = Forcing::zero(&cross);
        for eps in [0.001, 0.1, 10.0, 1e3] {
            assert!(check_well_constants(&well, &zero, eps, &opts, &[]).pass);
        }
    }

    #[test]
    fn grid_geometry() {
        let cross = CrossSection::with_max_spacing(1.0, 0.0125).unwrap();
        assert_eq!(cross.len(), 81);
        assert!((cross.dy() * 80.0 - 1.0).abs() < 1e-15);
        assert!(CrossSection::new(1.0, 2).is_err());
        let grid = CylinderGrid::new(cross, -1.0, 1.0, 0.01).unwrap();
        assert_eq!(grid.nz(), 201);
        assert!(grid.check_resolution(0.1).is_ok());
        assert!(grid.check_resolution(0.5).is_err());
    }

    #[test]
    fn window_advance_shifts_origin() {
        let cross = CrossSection::new(1.0, 3).unwrap();
        let grid = CylinderGrid::new(cross, 0.0, 4.0, 1.0).unwrap();
        let mut u = Field::from_fn(grid, |_, z| z);
        u.advance_window(2);
        assert_eq!(u.column(1), &[2.0, 3.0, 4.0, 4.0, 4.0]);
        assert_eq!(u.grid.z(0), 2.0);
    }
}
