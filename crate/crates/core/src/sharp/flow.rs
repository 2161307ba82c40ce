//! Explicit time stepping of the forced curvature flow of a graph,
//! `h_t = h_yy/(1 + h_y²) + (g/c_W) √(1 + h_y²)`.

use serde::Serialize;

use super::{SharpError, SharpRunParams};
use crate::model::{DoubleWell, Forcing, Profile};
use crate::numerics::fit_line;
use crate::speed::{SpeedMethod, SpeedResult};

pub const GRADIENT_LIMIT: f64 = 1e3;

fn rhs(h: &[f64], dy: f64, normal_speed: &[f64], out: &mut [f64]) -> f64 {
    let n = h.len();
    let mut max_slope: f64 = 0.0;
    for i in 0..n {
        let (l, r) = match i {
            0 => (h[1], h[1]),
            _ if i == n - 1 => (h[n - 2], h[n - 2]),
            _ => (h[i - 1], h[i + 1]),
        };
        let p = (r - l) / (2.0 * dy);
        let q = 1.0 + p * p;
        out[i] = (l - 2.0 * h[i] + r) / (dy * dy) / q + normal_speed[i] * q.sqrt();
        max_slope = max_slope.max(p.abs());
    }
    max_slope
}

/// One explicit Euler step of length `dt`.
pub fn step_fmc(h: &Profile, dt: f64, well: &DoubleWell, forcing: &Forcing) -> Result<Profile, SharpError> {
    if h.values.iter().any(|v| !v.is_finite()) {
        return Err(SharpError::Parameter("h must be finite".into()));
    }
    let speed: Vec<f64> = forcing.g().iter().map(|g| g / well.c_w()).collect();
    let mut out = vec![0.0; h.len()];
    let slope = rhs(&h.values, h.cross.dy(), &speed, &mut out);
    if slope > GRADIENT_LIMIT {
        return Err(SharpError::GradientBlowUp {
            limit: GRADIENT_LIMIT,
            time: 0.0,
        });
    }
    let values = h.values.iter().zip(&out).map(|(a, b)| a + dt * b).collect();
    Ok(Profile {
        cross: h.cross.clone(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FmcOutcome {
    pub speed: SpeedResult,
    /// Stationary shape normalized to `max ψ = 0`; absent when the shape
    /// never became stationary.
    pub psi: Option<Profile>,
    pub shape_drift: f64,
    pub time: f64,
    pub steps: usize,
    /// `(t, max_y h)` samples.
    pub trace: Vec<(f64, f64)>,
    #[serde(skip)]
    pub h: Profile,
}

fn shape(h: &[f64]) -> Vec<f64> {
    let m = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    h.iter().map(|v| v - m).collect()
}

/// Evolves until `h − max h` changes by less than `shape_tol` per unit time
/// over a check interval; the speed is the slope of `max_y h` over the last
/// interval.
pub fn measure_speed_fmc(initial: &Profile, params: &SharpRunParams, well: &DoubleWell, forcing: &Forcing) -> Result<FmcOutcome, SharpError> {
    params.validate()?;
    if initial.values.iter().any(|v| !v.is_finite()) {
        return Err(SharpError::Parameter("initial graph must be finite".into()));
    }
    if initial.cross != *forcing.cross() {
        return Err(SharpError::Parameter("initial graph and forcing use different cross-sections".into()));
    }
    let dy = initial.cross.dy();
    let dt = params.dt_factor * dy * dy;
    let per_check = ((params.check_interval / dt).ceil() as usize).max(1);
    let interval = per_check as f64 * dt;
    let speed: Vec<f64> = forcing.g().iter().map(|g| g / well.c_w()).collect();
    let mut h = initial.values.clone();
    let mut k = vec![0.0; h.len()];
    let (mut t, mut steps) = (0.0, 0usize);
    let mut prev_shape = shape(&h);
    let mut trace = vec![(0.0, h.iter().cloned().fold(f64::NEG_INFINITY, f64::max))];
    let mut drift = f64::INFINITY;
    let mut window: Vec<(f64, f64)> = Vec::new();
    while t < params.max_time {
        window.clear();
        for n in 0..per_check {
            let slope = rhs(&h, dy, &speed, &mut k);
            if !(slope <= GRADIENT_LIMIT) {
                return Err(SharpError::GradientBlowUp {
                    limit: GRADIENT_LIMIT,
                    time: t,
                });
            }
            for (a, b) in h.iter_mut().zip(&k) {
                *a += dt * b;
            }
            steps += 1;
            t = steps as f64 * dt;
            if n % (per_check / 16).max(1) == 0 || n + 1 == per_check {
                window.push((t, h.iter().cloned().fold(f64::NEG_INFINITY, f64::max)));
            }
        }
        trace.push(*window.last().unwrap());
        let s = shape(&h);
        drift = s.iter().zip(&prev_shape).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / interval;
        prev_shape = s;
        if drift < params.shape_tol {
            break;
        }
    }
    let (ts, ms): (Vec<f64>, Vec<f64>) = window.iter().cloned().unzip();
    let fit = fit_line(&ts, &ms).ok_or_else(|| SharpError::NonConvergence("too few samples".into()))?;
    let stationary = drift < params.shape_tol;
    let result = SpeedResult::new(fit.slope, SpeedMethod::SharpDynamic, fit.slope_stderr)
        .with("shape_drift", drift)
        .with("time", t)
        .with("stationary", if stationary { 1.0 } else { 0.0 });
    let h = Profile {
        cross: initial.cross.clone(),
        values: h,
    };
    let psi = stationary.then(|| h.normalized_max_zero());
    Ok(FmcOutcome {
        speed: result,
        psi,
        shape_drift: drift,
        time: t,
        steps,
        trace,
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_quartic_well, CrossSection, ForcingDescriptor, G0Descriptor};

    fn forcing(cross: &CrossSection, g0: G0Descriptor) -> Forcing {
        ForcingDescriptor::Product { g0 }.build(cross).unwrap()
    }

    #[test]
    fn flat_graph_advances_uniformly() {
        let cross = CrossSection::new(1.0, 21).unwrap();
        let well = build_quartic_well();
        let f = forcing(&cross, G0Descriptor::Constant { value: 0.1 });
        let h = Profile::constant(cross, 2.0);
        let dt = 1e-4;
        let next = step_fmc(&h, dt, &well, &f).unwrap();
        for v in &next.values {
            assert!((v - (2.0 + dt * 0.1 / well.c_w())).abs() < 1e-15);
        }
    }

    #[test]
    fn unforced_bump_decays() {
        let cross = CrossSection::new(1.0, 41).unwrap();
        let well = build_quartic_well();
        let f = Forcing::zero(&cross);
        let mut h = Profile::from_fn(cross.clone(), |y| 0.1 * (std::f64::consts::PI * y).cos());
        let osc = |p: &Profile| p.max() - p.min_finite();
        let start = osc(&h);
        let dt = 0.4 * cross.dy() * cross.dy();
        for _ in 0..2000 {
            let next = step_fmc(&h, dt, &well, &f).unwrap();
            assert!(osc(&next) <= osc(&h) + 1e-15);
            h = next;
        }
        assert!(osc(&h) < 0.5 * start);
    }

    #[test]
    fn homogeneous_speed_and_flat_shape() {
        let cross = CrossSection::new(1.0, 41).unwrap();
        let well = build_quartic_well();
        let f = forcing(&cross, G0Descriptor::Constant { value: 0.1 });
        let h0 = Profile::from_fn(cross, |y| 0.05 * (3.0 * y).sin());
        let out = measure_speed_fmc(&h0, &SharpRunParams::default(), &well, &f).unwrap();
        assert!((out.speed.c - 0.1 / well.c_w()).abs() < 1e-6 * out.speed.c);
        let psi = out.psi.unwrap();
        assert!(psi.values.iter().all(|p| p.abs() < 1e-5));
    }

    #[test]
    fn rejects_mismatched_grids() {
        let well = build_quartic_well();
        let f = forcing(&CrossSection::new(1.0, 21).unwrap(), G0Descriptor::Constant { value: 0.1 });
        let h = Profile::constant(CrossSection::new(1.0, 11).unwrap(), 0.0);
        assert!(measure_speed_fmc(&h, &SharpRunParams::default(), &well, &f).is_err());
    }
}
