//! Critical points of the cross-section energy `E^ε` and the lowest
//! eigenvalue of its second variation.

use serde::Serialize;

use super::DiffuseError;
use crate::functionals::energy_E_eps;
use crate::model::{CrossSection, DoubleWell, Forcing, Profile};
use crate::numerics::Tridiagonal;

/// Target sup norm of `ε v'' + f(v)/ε + a(y, v)`.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub v: Profile,
    pub energy: f64,
    /// Smallest eigenvalue of the second variation at `v`.
    pub nu: f64,
    pub residual: f64,
    pub flow_steps: usize,
    pub newton_steps: usize,
    /// The iteration ended at `v ≡ 0`.
    pub trivial: bool,
}

/// Rows of the Neumann Laplacian (ghost mirror), which is also the weighted
/// gradient of the discrete Dirichlet energy with trapezoid weights.
fn laplacian(cross: &CrossSection) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = cross.len();
    let k = 1.0 / (cross.dy() * cross.dy());
    let mut lower = vec![k; n];
    let diag = vec![-2.0 * k; n];
    let mut upper = vec![k; n];
    lower[0] = 0.0;
    upper[0] = 2.0 * k;
    lower[n - 1] = 2.0 * k;
    upper[n - 1] = 0.0;
    (lower, diag, upper)
}

fn apply(l: &[f64], d: &[f64], u: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let mut s = d[i] * v[i];
            if i > 0 {
                s += l[i] * v[i - 1];
            }
            if i + 1 < n {
                s += u[i] * v[i + 1];
            }
            s
        })
        .collect()
}

fn el_residual(v: &[f64], eps: f64, lap: &(Vec<f64>, Vec<f64>, Vec<f64>), well: &DoubleWell, forcing: &Forcing) -> Vec<f64> {
    let av = apply(&lap.0, &lap.1, &lap.2, v);
    v.iter()
        .enumerate()
        .map(|(i, x)| eps * av[i] + well.f(*x) / eps + forcing.a(i, *x))
        .collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Gradient flow of `E^ε` from `seed`, polished by Newton's method.
pub fn find_equilibrium_v(eps: f64, well: &DoubleWell, forcing: &Forcing, seed: &Profile) -> Result<EquilibriumResult, DiffuseError> {
    let cross = forcing.cross().clone();
    if seed.cross != cross {
        return Err(DiffuseError::Parameter("seed and forcing use different cross-sections".into()));
    }
    if seed.has_mask() || seed.values.iter().any(|v| !v.is_finite()) {
        return Err(DiffuseError::Parameter("seed must be finite".into()));
    }
    let lap = laplacian(&cross);
    let n = cross.len();
    let mut v = seed.values.clone();

    // v_t = ε v'' + f/ε + a, with the diffusion implicit.
    let dt = 0.5 * eps;
    let flow = Tridiagonal::factor(
        &lap.0.iter().map(|x| -dt * eps * x).collect::<Vec<_>>(),
        &lap.1.iter().map(|x| 1.0 - dt * eps * x).collect::<Vec<_>>(),
        &lap.2.iter().map(|x| -dt * eps * x).collect::<Vec<_>>(),
    );
    let mut flow_steps = 0;
    let mut res = sup(&el_residual(&v, eps, &lap, well, forcing));
    while res > 1e-4 && flow_steps < 200_000 {
        for (i, x) in v.iter_mut().enumerate() {
            *x += dt * (well.f(*x) / eps + forcing.a(i, *x));
        }
        flow.solve(&mut v);
        flow_steps += 1;
        if flow_steps % 50 == 0 {
            res = sup(&el_residual(&v, eps, &lap, well, forcing));
            if !res.is_finite() || sup(&v) > 10.0 {
                return Err(DiffuseError::Divergence(format!("gradient flow left the admissible range after {flow_steps} steps")));
            }
        }
    }

    let mut newton_steps = 0;
    res = sup(&el_residual(&v, eps, &lap, well, forcing));
    while res > 0.01 * EQUILIBRIUM_TOL && newton_steps < 50 {
        let r = el_residual(&v, eps, &lap, well, forcing);
        let diag: Vec<f64> = (0..n)
            .map(|i| eps * lap.1[i] - well.w2(v[i]) / eps + forcing.a_u(i, v[i]))
            .collect();
        let jac = Tridiagonal::factor(
            &lap.0.iter().map(|x| eps * x).collect::<Vec<_>>(),
            &diag,
            &lap.2.iter().map(|x| eps * x).collect::<Vec<_>>(),
        );
        let mut delta: Vec<f64> = r.iter().map(|x| -x).collect();
        jac.solve(&mut delta);
        if delta.iter().any(|d| !d.is_finite()) {
            break;
        }
        for (x, d) in v.iter_mut().zip(&delta) {
            *x += d;
        }
        newton_steps += 1;
        let next = sup(&el_residual(&v, eps, &lap, well, forcing));
        if !(next < 1e3 * res.max(1e-12)) {
            return Err(DiffuseError::Divergence(format!("Newton residual grew from {res:e} to {next:e}")));
        }
        res = next;
    }
    if res > EQUILIBRIUM_TOL {
        return Err(DiffuseError::Divergence(format!("residual {res:e} above {EQUILIBRIUM_TOL:e}")));
    }
    let v = Profile { cross, values: v };
    let energy = energy_E_eps(&v, eps, well, forcing);
    let nu = second_variation_min(&v, eps, well, forcing);
    let trivial = sup(&v.values) < 1e-6;
    Ok(EquilibriumResult {
        v,
        energy,
        nu,
        residual: res,
        flow_steps,
        newton_steps,
        trivial,
    })
}

/// Smallest eigenvalue of `φ ↦ −ε φ'' + (W''(v)/ε − a_u(y, v)) φ` with Neumann
/// conditions, by inverse iteration shifted below the Gershgorin bound.
pub fn second_variation_min(v: &Profile, eps: f64, well: &DoubleWell, forcing: &Forcing) -> f64 {
    let cross = &v.cross;
    let n = cross.len();
    let lap = laplacian(cross);
    let q: Vec<f64> = (0..n)
        .map(|i| well.w2(v.values[i]) / eps - forcing.a_u(i, v.values[i]))
        .collect();
    let lower: Vec<f64> = lap.0.iter().map(|x| -eps * x).collect();
    let upper: Vec<f64> = lap.2.iter().map(|x| -eps * x).collect();
    let diag: Vec<f64> = (0..n).map(|i| -eps * lap.1[i] + q[i]).collect();
    // Row sums of the Laplacian vanish, so the Gershgorin bound is min q.
    let qmin = q.iter().cloned().fold(f64::INFINITY, f64::min);
    let shift = qmin - 1e-2 * qmin.abs().max(1.0);
    let shifted = Tridiagonal::factor(&lower, &diag.iter().map(|d| d - shift).collect::<Vec<_>>(), &upper);
    let w = cross.weights();
    let norm = |x: &[f64]| x.iter().zip(&w).map(|(a, b)| b * a * a).sum::<f64>().sqrt();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * (i as f64 / n as f64)).collect();
    let mut rq = f64::NAN;
    for _ in 0..5000 {
        shifted.solve(&mut x);
        let nx = norm(&x);
        x.iter_mut().for_each(|a| *a /= nx);
        let lx = apply(&lower, &diag, &upper, &x);
        let next: f64 = x.iter().zip(&lx).zip(&w).map(|((a, b), c)| a * b * c).sum();
        if (next - rq).abs() <= 1e-13 * next.abs().max(1.0) {
            return next;
        }
        rq = next;
    }
    rq
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_quartic_well, ForcingDescriptor, G0Descriptor};

    fn setup(g: f64) -> (CrossSection, DoubleWell, Forcing) {
        let cross = CrossSection::new(1.0, 81).unwrap();
        let f = ForcingDescriptor::Product {
            g0: G0Descriptor::Constant { value: g },
        }
        .build(&cross)
        .unwrap();
        (cross, build_quartic_well(), f)
    }

    #[test]
    fn seed_one_with_constant_forcing() {
        let (cross, well, f) = setup(0.1);
        let eps = 0.05;
        let r = find_equilibrium_v(eps, &well, &f, &Profile::constant(cross, 1.0)).unwrap();
        assert!(r.v.values.iter().all(|v| (v - 1.0).abs() < 1e-9));
        assert!(r.energy < 0.0 && r.nu > 0.0);
        // At v ≡ 1: W''(1)/ε − a_u(1) = 0.5/ε + 6 ḡ.
        assert!((r.nu - (0.5 / eps + 0.6)).abs() < 1e-8);
    }

    #[test]
    fn seed_zero_gives_nu_zero() {
        let (cross, well, f) = setup(0.1);
        let eps = 0.05;
        let r = find_equilibrium_v(eps, &well, &f, &Profile::constant(cross, 0.0)).unwrap();
        assert!(r.trivial);
        assert!((r.nu - (0.5 / eps - 0.6)).abs() < 1e-8);
    }

    #[test]
    fn unforced_one_has_zero_energy() {
        let (cross, well, _) = setup(0.0);
        let f = Forcing::zero(&cross);
        let r = find_equilibrium_v(0.05, &well, &f, &Profile::constant(cross, 1.0)).unwrap();
        assert_eq!(r.energy, 0.0);
        assert!(r.v.values.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn perturbed_seed_relaxes() {
        let (cross, well, f) = setup(0.1);
        let seed = Profile::from_fn(cross, |y| 0.8 + 0.3 * (6.0 * y).cos());
        let r = find_equilibrium_v(0.05, &well, &f, &seed).unwrap();
        assert!(r.residual <= EQUILIBRIUM_TOL);
        assert!(r.v.values.iter().all(|v| (v - 1.0).abs() < 1e-8));
    }

    #[test]
    fn lowest_mode_of_a_varying_potential() {
        // Eigenvalues of −ε φ'' on [0,1] with Neumann conditions are ε (kπ)²;
        // a constant potential q shifts them by q, and the lowest is q.
        let cross = CrossSection::new(1.0, 101).unwrap();
        let well = build_quartic_well();
        let f = Forcing::zero(&cross);
        let v = Profile::constant(cross, 0.0);
        let nu = second_variation_min(&v, 0.1, &well, &f);
        assert!((nu - 0.5 / 0.1).abs() < 1e-9);
    }
}
