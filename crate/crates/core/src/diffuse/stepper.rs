//! Semi-implicit time stepping of `u_t = Δu + c u_z + f(u)/ε² + a(y,u)/ε`
//! (the reaction-diffusion equation divided by `ε`, written in a frame moving
//! with speed `c`).
//!
//! The linear part is treated by approximate factorization in delta form,
//! `(I − Δt A_y)(I − Δt B_z) δ = Δt [(A_y + B_z) u + R(u)]`, so steady states
//! of the scheme are exactly the semi-discrete traveling waves.

use rayon::prelude::*;

use super::DiffuseError;
use crate::model::{CylinderGrid, DoubleWell, Field, Forcing};
use crate::numerics::Tridiagonal;

/// Values beyond this magnitude abort a run.
pub const BLOWUP_LIMIT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// `max |δ| / Δt`, the sup norm of the discrete time derivative.
    pub rate: f64,
    pub min: f64,
    pub max: f64,
}

pub struct RdStepper<'a> {
    grid: CylinderGrid,
    eps: f64,
    dt: f64,
    frame_speed: f64,
    well: &'a DoubleWell,
    forcing: &'a Forcing,
    ty: Tridiagonal,
    tz: Tridiagonal,
    work: Vec<f64>,
}

fn neumann_laplacian_rows(n: usize, h: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let k = 1.0 / (h * h);
    let mut lower = vec![k; n];
    let diag = vec![-2.0 * k; n];
    let mut upper = vec![k; n];
    lower[0] = 0.0;
    upper[0] = 2.0 * k;
    upper[n - 1] = 0.0;
    lower[n - 1] = 2.0 * k;
    (lower, diag, upper)
}

impl<'a> RdStepper<'a> {
    pub fn new(
        grid: &CylinderGrid,
        eps: f64,
        dt: f64,
        frame_speed: f64,
        well: &'a DoubleWell,
        forcing: &'a Forcing,
    ) -> Result<Self, DiffuseError> {
        if !(dt > 0.0 && eps > 0.0) {
            return Err(DiffuseError::Parameter(format!("dt = {dt}, eps = {eps}")));
        }
        if forcing.cross().len() != grid.ny() {
            return Err(DiffuseError::Parameter("forcing sampled on a different cross-section".into()));
        }
        let (ly, dy, uy) = neumann_laplacian_rows(grid.ny(), grid.dy());
        let ty = Tridiagonal::factor(
            &ly.iter().map(|v| -dt * v).collect::<Vec<_>>(),
            &dy.iter().map(|v| 1.0 - dt * v).collect::<Vec<_>>(),
            &uy.iter().map(|v| -dt * v).collect::<Vec<_>>(),
        );
        let (mut lz, dzz, mut uz) = neumann_laplacian_rows(grid.nz(), grid.dz());
        let adv = frame_speed / (2.0 * grid.dz());
        let nz = grid.nz();
        for j in 1..nz - 1 {
            lz[j] -= adv;
            uz[j] += adv;
        }
        let tz = Tridiagonal::factor(
            &lz.iter().map(|v| -dt * v).collect::<Vec<_>>(),
            &dzz.iter().map(|v| 1.0 - dt * v).collect::<Vec<_>>(),
            &uz.iter().map(|v| -dt * v).collect::<Vec<_>>(),
        );
        Ok(Self {
            grid: grid.clone(),
            eps,
            dt,
            frame_speed,
            well,
            forcing,
            ty,
            tz,
            work: vec![0.0; grid.len()],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn frame_speed(&self) -> f64 {
        self.frame_speed
    }

    /// Nodal right-hand side `(A_y + B_z) u + R(u)`.
    pub fn residual(&self, u: &Field, out: &mut [f64]) {
        let (ny, nz) = (self.grid.ny(), self.grid.nz());
        let (dy, dz) = (self.grid.dy(), self.grid.dz());
        let (ky, kz) = (1.0 / (dy * dy), 1.0 / (dz * dz));
        let adv = self.frame_speed / (2.0 * dz);
        let (e2, e1) = (1.0 / (self.eps * self.eps), 1.0 / self.eps);
        let vals = &u.values;
        out.par_chunks_mut(nz).enumerate().for_each(|(i, row)| {
            let here = &vals[i * nz..(i + 1) * nz];
            let below = if i == 0 { &vals[nz..2 * nz] } else { &vals[(i - 1) * nz..i * nz] };
            let above = if i + 1 == ny {
                &vals[(ny - 2) * nz..(ny - 1) * nz]
            } else {
                &vals[(i + 1) * nz..(i + 2) * nz]
            };
            for j in 0..nz {
                let c = here[j];
                let (l, r) = match j {
                    0 => (here[1], here[1]),
                    _ if j + 1 == nz => (here[nz - 2], here[nz - 2]),
                    _ => (here[j - 1], here[j + 1]),
                };
                let lap = ky * (below[j] - 2.0 * c + above[j]) + kz * (l - 2.0 * c + r);
                row[j] = lap + adv * (r - l) + e2 * self.well.f(c) + e1 * self.forcing.a(i, c);
            }
        });
    }

    pub fn step(&mut self, u: &mut Field) -> Result<StepInfo, DiffuseError> {
        let nz = self.grid.nz();
        let mut work = std::mem::take(&mut self.work);
        self.residual(u, &mut work);
        let dt = self.dt;
        work.iter_mut().for_each(|v| *v *= dt);
        self.ty.solve_batched(&mut work, nz);
        let tz = &self.tz;
        work.par_chunks_mut(nz).for_each(|row| tz.solve(row));
        let mut info = StepInfo {
            rate: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        };
        for (v, d) in u.values.iter_mut().zip(&work) {
            *v += d;
            info.rate = info.rate.max(d.abs());
            info.min = info.min.min(*v);
            info.max = info.max.max(*v);
        }
        self.work = work;
        info.rate /= dt;
        u.time += dt;
        if !(info.max <= BLOWUP_LIMIT && info.min >= -BLOWUP_LIMIT) {
            return Err(DiffuseError::BlowUp { time: u.time });
        }
        Ok(info)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_quartic_well, CrossSection, ForcingDescriptor, G0Descriptor};

    fn setup() -> (CylinderGrid, DoubleWell, Forcing) {
        let cross = CrossSection::new(0.2, 9).unwrap();
        let grid = CylinderGrid::new(cross.clone(), -0.5, 0.5, 0.0125).unwrap();
        let f = ForcingDescriptor::Product {
            g0: G0Descriptor::Constant { value: 0.1 },
        }
        .build(&cross)
        .unwrap();
        (grid, build_quartic_well(), f)
    }

    #[test]
    fn zero_is_stationary() {
        let (grid, well, f) = setup();
        let mut u = Field::zeros(grid.clone());
        let mut st = RdStepper::new(&grid, 0.05, 2.5e-4, 0.3, &well, &f).unwrap();
        for _ in 0..10 {
            st.step(&mut u).unwrap();
        }
        assert!(u.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn one_stays_in_band() {
        let (grid, well, f) = setup();
        let eps = 0.05;
        let mut u = Field::from_fn(grid.clone(), |_, _| 1.0);
        let mut st = RdStepper::new(&grid, eps, 0.1 * eps * eps, 0.0, &well, &f).unwrap();
        for _ in 0..1000 {
            let info = st.step(&mut u).unwrap();
            assert!(info.min >= 1.0 - 1e-12 && info.max <= 1.0 + 4.0 * eps);
        }
    }

    #[test]
    fn blowup_is_reported() {
        let (grid, well, f) = setup();
        // A reaction step far beyond the explicit stability limit overshoots.
        let mut u = Field::from_fn(grid.clone(), |_, _| 1.5);
        let mut st = RdStepper::new(&grid, 0.05, 0.05, 0.0, &well, &f).unwrap();
        let mut err = None;
        for _ in 0..100 {
            if let Err(e) = st.step(&mut u) {
                err = Some(e);
                break;
            }
        }
        assert!(matches!(err, Some(DiffuseError::BlowUp { .. })));
    }
}
