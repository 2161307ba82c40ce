//! Minimization of `G_c(ζ) = ∫ c_W √(c²ζ² + ζ'²) − gζ` over nonnegative `ζ`
//! of unit mass, and bisection for `c†` on the sign of the minimum.

use rayon::prelude::*;
use serde::Serialize;

use super::{profile_from_zeta, SharpError, SharpRunParams};
use crate::conditions::{check_h4, Verdict};
use crate::model::{DoubleWell, Forcing, Profile};
use crate::speed::{SpeedMethod, SpeedResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GcMinimizerResult {
    pub c: f64,
    /// Minimizer with `Σ w_i ζ_i = 1` (trapezoid weights).
    pub zeta: Profile,
    /// `m(c)` extrapolated to zero smoothing.
    pub m: f64,
    /// `(δ, min G_c^δ)` along the continuation schedule.
    pub m_by_delta: Vec<(f64, f64)>,
    /// Nodes where `ζ` stayed below `finger_tol · max ζ` for every `δ`.
    pub outside_support: Vec<bool>,
    pub fingers: bool,
    pub iterations: usize,
    /// Norm of the projected gradient mapping at the last iterate.
    pub stationarity: f64,
}

/// Euclidean projection in the metric `Σ w_i x_i²` onto
/// `{ζ ≥ 0, Σ w_i ζ_i = 1}`: `ζ_i = max(x_i − τ, 0)`.
pub fn project_weighted_simplex(x: &[f64], w: &[f64], out: &mut [f64]) {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|a, b| x[*b].total_cmp(&x[*a]));
    let (mut sw, mut swx) = (0.0, 0.0);
    let mut tau = f64::NAN;
    for (k, &i) in order.iter().enumerate() {
        sw += w[i];
        swx += w[i] * x[i];
        let t = (swx - 1.0) / sw;
        let next = order.get(k + 1).map(|j| x[*j]).unwrap_or(f64::NEG_INFINITY);
        if t < x[i] && t >= next {
            tau = t;
            break;
        }
    }
    for (o, v) in out.iter_mut().zip(x) {
        *o = (v - tau).max(0.0);
    }
}

struct Problem<'a> {
    c: f64,
    delta: f64,
    cw: f64,
    dy: f64,
    w: &'a [f64],
    g: &'a [f64],
}

impl Problem<'_> {
    fn value(&self, z: &[f64]) -> f64 {
        let d2 = self.delta * self.delta;
        let surface: f64 = z
            .windows(2)
            .map(|p| {
                let (m, d) = (0.5 * (p[0] + p[1]), (p[1] - p[0]) / self.dy);
                (d2 + self.c * self.c * m * m + d * d).sqrt()
            })
            .sum();
        let bulk: f64 = z.iter().zip(self.w).zip(self.g).map(|((z, w), g)| z * w * g).sum();
        self.cw * self.dy * surface - bulk
    }

    fn value_grad(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let d2 = self.delta * self.delta;
        let c2 = self.c * self.c;
        for ((gr, w), g) in grad.iter_mut().zip(self.w).zip(self.g) {
            *gr = -w * g;
        }
        let mut surface = 0.0;
        for k in 0..z.len() - 1 {
            let (m, d) = (0.5 * (z[k] + z[k + 1]), (z[k + 1] - z[k]) / self.dy);
            let r = (d2 + c2 * m * m + d * d).sqrt();
            surface += r;
            if r > 0.0 {
                let s = self.cw * self.dy / r;
                grad[k] += s * (0.5 * c2 * m - d / self.dy);
                grad[k + 1] += s * (0.5 * c2 * m + d / self.dy);
            }
        }
        let bulk: f64 = z.iter().zip(self.w).zip(self.g).map(|((z, w), g)| z * w * g).sum();
        self.cw * self.dy * surface - bulk
    }
}

/// Accelerated projected gradient with backtracking and adaptive restart.
fn fista(p: &Problem, z: &mut Vec<f64>, max_iter: usize, tol: f64) -> (f64, usize, f64) {
    let n = z.len();
    let w = p.w;
    let (mut y, mut x, mut grad, mut trial) = (z.clone(), vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut step = 1e-3;
    let mut theta: f64 = 1.0;
    let mut fz = p.value(z);
    let mut mapping = f64::INFINITY;
    let mut stall = 0;
    for it in 1..=max_iter {
        let fy = p.value_grad(&y, &mut grad);
        let fx = loop {
            for i in 0..n {
                trial[i] = y[i] - step * grad[i] / w[i];
            }
            project_weighted_simplex(&trial, w, &mut x);
            let fx = p.value(&x);
            let (mut lin, mut quad) = (0.0, 0.0);
            for i in 0..n {
                let d = x[i] - y[i];
                lin += grad[i] * d;
                quad += w[i] * d * d;
            }
            if fx <= fy + lin + quad / (2.0 * step) + 1e-15 * fy.abs().max(1.0) || step < 1e-16 {
                mapping = quad.sqrt() / step;
                break fx;
            }
            step *= 0.5;
        };
        if mapping < tol {
            z.copy_from_slice(&x);
            return (fx, it, mapping);
        }
        // Decreases at rounding level, and restarts, count towards a stall.
        stall = if fz - fx <= 1e-14 * fz.abs().max(1.0) { stall + 1 } else { 0 };
        if stall >= 50 {
            if fx <= fz {
                z.copy_from_slice(&x);
            }
            return (fz.min(fx), it, mapping);
        }
        if fx > fz {
            // Restart momentum from the last accepted iterate.
            theta = 1.0;
            y.copy_from_slice(z);
            continue;
        }
        let next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let beta = (theta - 1.0) / next;
        for i in 0..n {
            y[i] = x[i] + beta * (x[i] - z[i]);
        }
        theta = next;
        z.copy_from_slice(&x);
        fz = fx;
        step *= 1.1;
    }
    (fz, max_iter, mapping)
}

/// `m(c) = min{G_c(ζ) : ζ ≥ 0, ∫ζ = 1}` through the smoothing schedule,
/// extrapolated linearly in `δ` from its last two entries.
#[allow(non_snake_case)]
pub fn minimize_G_c(
    c: f64,
    params: &SharpRunParams,
    well: &DoubleWell,
    forcing: &Forcing,
    warm: Option<&Profile>,
) -> Result<GcMinimizerResult, SharpError> {
    params.validate()?;
    if !(c > 0.0) {
        return Err(SharpError::Parameter(format!("c = {c} must be positive")));
    }
    let cross = forcing.cross();
    let w = cross.weights();
    let mut z = match warm {
        Some(p) if p.cross == *cross && p.values.iter().all(|v| v.is_finite() && *v >= 0.0) => p.values.clone(),
        _ => vec![1.0 / cross.length(); cross.len()],
    };
    let mut tmp = z.clone();
    project_weighted_simplex(&tmp, &w, &mut z);
    let mut m_by_delta = Vec::new();
    let mut outside = vec![true; z.len()];
    let mut iterations = 0;
    let mut stationarity = 0.0;
    for &delta in &params.smoothing {
        let p = Problem {
            c,
            delta,
            cw: well.c_w(),
            dy: cross.dy(),
            w: &w,
            g: forcing.g(),
        };
        let (m, it, mapping) = fista(&p, &mut z, params.max_iter, params.grad_tol);
        iterations += it;
        stationarity = mapping;
        m_by_delta.push((delta, m));
        let zmax = z.iter().cloned().fold(0.0, f64::max);
        for (o, v) in outside.iter_mut().zip(&z) {
            *o &= *v < params.finger_tol * zmax;
        }
    }
    if !(stationarity < 1e-5) {
        return Err(SharpError::NonConvergence(format!(
            "projected gradient mapping {stationarity:e} after {iterations} iterations at c = {c}"
        )));
    }
    let m = match m_by_delta.as_slice() {
        [.., (d2, m2), (d3, m3)] => m3 - (m2 - m3) * d3 / (d2 - d3),
        [(_, m)] => *m,
        [] => unreachable!(),
    };
    for (v, o) in z.iter_mut().zip(&outside) {
        if *o {
            *v = 0.0;
        }
    }
    tmp.copy_from_slice(&z);
    let norm: f64 = tmp.iter().zip(&w).map(|(a, b)| a * b).sum();
    tmp.iter_mut().for_each(|v| *v /= norm);
    Ok(GcMinimizerResult {
        c,
        zeta: Profile {
            cross: cross.clone(),
            values: tmp,
        },
        m,
        m_by_delta,
        fingers: outside.iter().any(|o| *o),
        outside_support: outside,
        iterations,
        stationarity,
    })
}

/// `m(c)` at each `c`, evaluated in parallel.
pub fn m_of_c_scan(cs: &[f64], params: &SharpRunParams, well: &DoubleWell, forcing: &Forcing) -> Result<Vec<(f64, f64)>, SharpError> {
    cs.par_iter()
        .map(|c| minimize_G_c(*c, params, well, forcing, None).map(|r| (*c, r.m)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpSpeed {
    pub speed: SpeedResult,
    pub minimizer: GcMinimizerResult,
    /// `(1/c) ln(cζ)` normalized to `max ψ = 0`.
    pub psi: Profile,
}

/// Bisection on the sign of `m(c)`.
pub fn find_c_dagger(params: &SharpRunParams, well: &DoubleWell, forcing: &Forcing) -> Result<SharpSpeed, SharpError> {
    params.validate()?;
    if check_h4(well, forcing).verdict != Verdict::Holds {
        return Err(SharpError::Parameter(
            "no set of negative sharp energy exists; the maximal speed is not positive".into(),
        ));
    }
    let cw = well.c_w();
    let hi0 = (1.0 + params.bracket_margin) * forcing.sup_g() / cw;
    let lo0 = ((1.0 - params.bracket_margin) * forcing.mean_g() / cw).max(1e-3 * hi0);
    let at_lo = minimize_G_c(lo0, params, well, forcing, None)?;
    let at_hi = minimize_G_c(hi0, params, well, forcing, None)?;
    if !(at_lo.m < 0.0 && at_hi.m > 0.0) {
        return Err(SharpError::Bracket {
            lo: lo0,
            hi: hi0,
            m_lo: at_lo.m,
            m_hi: at_hi.m,
        });
    }
    let (mut lo, mut hi) = (lo0, hi0);
    let mut warm = at_lo.zeta;
    let mut evaluations = 2;
    while hi - lo > params.tol_c {
        let c = 0.5 * (lo + hi);
        let r = minimize_G_c(c, params, well, forcing, Some(&warm))?;
        evaluations += 1;
        if r.m < 0.0 {
            lo = c;
        } else {
            hi = c;
        }
        warm = r.zeta;
    }
    let c = 0.5 * (lo + hi);
    let minimizer = minimize_G_c(c, params, well, forcing, Some(&warm))?;
    let psi = profile_from_zeta(&minimizer.zeta, c).normalized_max_zero();
    let mut speed = SpeedResult::new(c, SpeedMethod::SharpVariational, 0.5 * (hi - lo))
        .with("m_at_c", minimizer.m)
        .with("evaluations", evaluations as f64)
        .with("fingers", if minimizer.fingers { 1.0 } else { 0.0 });
    speed.bracket = Some((lo, hi));
    Ok(SharpSpeed { speed, minimizer, psi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::energy_G_c_smoothed;
    use crate::model::{build_quartic_well, CrossSection, ForcingDescriptor, G0Descriptor};

    fn forcing(nodes: usize, g0: G0Descriptor) -> Forcing {
        let cross = CrossSection::new(1.0, nodes).unwrap();
        ForcingDescriptor::Product { g0 }.build(&cross).unwrap()
    }

    fn cosine() -> G0Descriptor {
        G0Descriptor::Cosine {
            mean: 0.1,
            relative_amplitude: 0.5,
        }
    }

    #[test]
    fn projection_properties() {
        let w = [0.5, 1.0, 1.0, 0.5];
        let mut out = [0.0; 4];
        project_weighted_simplex(&[3.0, -1.0, 0.2, 0.4], &w, &mut out);
        let mass: f64 = out.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!((mass - 1.0).abs() < 1e-14);
        assert!(out.iter().all(|v| *v >= 0.0));
        // A feasible point is its own projection.
        let x = [0.4, 0.3, 0.2, 0.6];
        project_weighted_simplex(&x, &w, &mut out);
        for (a, b) in out.iter().zip(&x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn objective_matches_functional() {
        let f = forcing(11, cosine());
        let well = build_quartic_well();
        let z = Profile::from_fn(f.cross().clone(), |y| 1.0 + y * y);
        let w = f.cross().weights();
        let p = Problem {
            c: 0.9,
            delta: 1e-3,
            cw: well.c_w(),
            dy: f.cross().dy(),
            w: &w,
            g: f.g(),
        };
        let expected = energy_G_c_smoothed(&z, 0.9, 1e-3, &well, &f).unwrap();
        assert!((p.value(&z.values) - expected).abs() < 1e-14);
        // Gradient against central differences.
        let mut grad = vec![0.0; z.len()];
        p.value_grad(&z.values, &mut grad);
        for i in 0..z.len() {
            let mut a = z.values.clone();
            let mut b = z.values.clone();
            a[i] += 1e-6;
            b[i] -= 1e-6;
            let fd = (p.value(&a) - p.value(&b)) / 2e-6;
            assert!((fd - grad[i]).abs() < 1e-7, "node {i}: {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn constant_forcing_minimizer_is_flat() {
        let f = forcing(51, G0Descriptor::Constant { value: 0.1 });
        let well = build_quartic_well();
        let params = SharpRunParams::default();
        for c in [0.5, 0.8485, 1.2] {
            let r = minimize_G_c(c, &params, &well, &f, None).unwrap();
            assert!((r.m - (well.c_w() * c - 0.1)).abs() < 1e-9, "c = {c}: {}", r.m);
            assert!(r.zeta.values.iter().all(|z| (z - 1.0).abs() < 1e-6));
        }
        let r = minimize_G_c(0.1 / well.c_w(), &params, &well, &f, None).unwrap();
        assert!(r.m.abs() < 1e-6);
    }

    #[test]
    fn m_is_increasing_on_cosine_forcing() {
        let f = forcing(51, cosine());
        let well = build_quartic_well();
        let scan = m_of_c_scan(&[0.8, 0.9, 1.0, 1.1, 1.2], &SharpRunParams::default(), &well, &f).unwrap();
        assert!(scan.windows(2).all(|w| w[0].1 < w[1].1));
    }

    #[test]
    fn flat_front_speed() {
        let f = forcing(51, G0Descriptor::Constant { value: 0.1 });
        let well = build_quartic_well();
        let r = find_c_dagger(&SharpRunParams::default(), &well, &f).unwrap();
        assert!((r.speed.c - 0.1 / well.c_w()).abs() < 2e-6);
        assert!(r.psi.values.iter().all(|p| p.abs() < 1e-5));
    }

    #[test]
    fn negative_forcing_is_rejected() {
        let f = forcing(21, G0Descriptor::Constant { value: -0.1 });
        let well = build_quartic_well();
        assert!(matches!(
            find_c_dagger(&SharpRunParams::default(), &well, &f),
            Err(SharpError::Parameter(_))
        ));
    }
}
