//! Speed selection for the diffuse model.
//!
//! A pinned relaxation runs the moving-frame equation at a trial speed `c`
//! and translates the field back after every step so that its leading
//! `θ`-crossing stays at `z = 0`. The translation rate converges to
//! `c†_ε − c`, whose sign classifies `c` for the bisection.

use serde::Serialize;

use super::{DiffuseError, DiffuseRunParams, EquilibriumResult, RdStepper, WindowShift};
use crate::conditions::{check_h4, Verdict};
use crate::functionals::{phi_c_eps, weighted_z_dirichlet, EnergyReport};
use crate::model::{CylinderGrid, DoubleWell, Field, Forcing, Profile};
use crate::numerics::{fit_line, shift_linear};
use crate::speed::{SpeedMethod, SpeedResult};

/// Leading edge `R_θ = sup{z : max_y u(y, z) > θ}`, linearly interpolated
/// inside the crossing cell; absolute coordinates.
pub fn leading_edge(u: &Field, theta: f64) -> Result<f64, DiffuseError> {
    let m = u.max_over_y();
    let nz = m.len();
    if m[nz - 1] > theta {
        return Err(DiffuseError::NoCrossing(format!("u > {theta} at the right end of the window")));
    }
    let j = m
        .iter()
        .rposition(|v| *v > theta)
        .ok_or_else(|| DiffuseError::NoCrossing(format!("u <= {theta} everywhere")))?;
    let t = (m[j] - theta) / (m[j] - m[j + 1]);
    Ok(u.grid.z(j) + t * u.grid.dz())
}

/// `u(y, z) = v(y) γ(−(z − center)/ε)`.
pub fn front_seed(grid: &CylinderGrid, eps: f64, well: &DoubleWell, v: &Profile, center: f64) -> Field {
    let mut u = Field::from_fn(grid.clone(), |_, z| well.gamma(-(z - center) / eps));
    for i in 0..grid.ny() {
        for j in 0..grid.nz() {
            let k = grid.index(i, j);
            u.values[k] *= v.values[i];
        }
    }
    u
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicTrace {
    pub thetas: Vec<f64>,
    pub times: Vec<f64>,
    /// `edges[k][s]` is `R_{θ_k}` at `times[s]`.
    pub edges: Vec<Vec<f64>>,
}

/// Lab-frame evolution from `initial`; the speed is the least-squares slope
/// of `R_θ(t)` over the trailing `fit_fraction` of the run.
pub fn measure_speed_dynamic(
    initial: &Field,
    params: &DiffuseRunParams,
    well: &DoubleWell,
    forcing: &Forcing,
    thetas: &[f64],
) -> Result<(SpeedResult, DynamicTrace, Field), DiffuseError> {
    params.validate(&initial.grid)?;
    let pin = thetas
        .iter()
        .position(|t| *t == params.theta_pin)
        .ok_or_else(|| DiffuseError::Parameter("thetas must contain theta_pin".into()))?;
    let mut u = initial.clone();
    let mut stepper = RdStepper::new(&u.grid, params.eps, params.dt, 0.0, well, forcing)?;
    let mut trace = DynamicTrace {
        thetas: thetas.to_vec(),
        times: Vec::new(),
        edges: vec![Vec::new(); thetas.len()],
    };
    let steps = (params.max_time / params.dt).ceil() as usize;
    let t0 = u.time;
    for n in 1..=steps {
        stepper.step(&mut u)?;
        if let WindowShift::FollowFront { fraction } = params.window_shift {
            let r = leading_edge(&u, params.theta_pin)?;
            let target = u.grid.z(0) + fraction * (u.grid.z_max() - u.grid.z_min());
            let k = ((r - target) / u.grid.dz()).floor();
            if k >= 1.0 {
                u.advance_window(k as usize);
            }
        }
        if n % params.sample_every == 0 {
            trace.times.push(u.time - t0);
            for (k, th) in thetas.iter().enumerate() {
                trace.edges[k].push(leading_edge(&u, *th)?);
            }
        }
    }
    let total = trace.times.len();
    let first = ((1.0 - params.fit_fraction) * total as f64).floor() as usize;
    if total - first < 6 {
        return Err(DiffuseError::Parameter("too few samples in the fit window".into()));
    }
    let fit = |k: usize, a: usize, b: usize| fit_line(&trace.times[a..b], &trace.edges[k][a..b]).expect("distinct sample times");
    let main = fit(pin, first, total);
    let mid = (first + total) / 2;
    let (s1, s2) = (fit(pin, first, mid).slope, fit(pin, mid, total).slope);
    if (s1 - s2).abs() > params.slope_tol {
        return Err(DiffuseError::NonConvergentDrift {
            first: s1,
            second: s2,
            tol: params.slope_tol,
        });
    }
    let mut result = SpeedResult::new(main.slope, SpeedMethod::DiffuseDynamic, main.slope_stderr)
        .with("slope_first_half", s1)
        .with("slope_second_half", s2);
    let mut spread: f64 = 0.0;
    for (k, th) in thetas.iter().enumerate() {
        let s = fit(k, first, total).slope;
        spread = spread.max((s - main.slope).abs());
        result = result.with(&format!("slope_theta_{th}"), s);
    }
    result = result.with("theta_spread", spread);
    Ok((result, trace, u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PinnedClass {
    /// The front outruns the frame: `c < c†_ε` (energy unbounded below).
    TooSlow,
    /// The front falls behind the frame: `c > c†_ε` (only the zero state
    /// has nonpositive energy).
    TooFast,
    Critical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinnedOutcome {
    #[serde(skip)]
    pub field: Field,
    pub c: f64,
    pub class: PinnedClass,
    /// Pinning translation rate, an estimate of `c†_ε − c`.
    pub drift: f64,
    /// Change of the drift between the last two blocks.
    pub drift_change: f64,
    pub converged: bool,
    pub energy: Option<EnergyReport>,
    /// `|{u > 1/2}|` inside the window.
    pub mass_above_half: f64,
    /// Sup norm of the discrete time derivative at the last step.
    pub rate: f64,
    pub time: f64,
}

const BLOCK_STEPS: usize = 20;

/// Weighted gradient flow of `Φ_c^ε` (the moving-frame equation) with the
/// leading `θ_pin`-crossing re-pinned to `z = 0` after every step.
pub fn minimize_phi_pinned(
    c: f64,
    params: &DiffuseRunParams,
    well: &DoubleWell,
    forcing: &Forcing,
    seed: &Field,
    max_time: f64,
) -> Result<PinnedOutcome, DiffuseError> {
    params.validate(&seed.grid)?;
    let mut u = seed.clone();
    let grid = u.grid.clone();
    let (nz, dz) = (grid.nz(), grid.dz());
    let mut stepper = RdStepper::new(&grid, params.eps, params.dt, c, well, forcing)?;
    let mut row = vec![0.0; nz];
    let mut prev: Option<f64> = None;
    let mut elapsed = 0.0;
    let mut rate = 0.0;
    let (drift, change, converged) = loop {
        let mut moved = 0.0;
        for _ in 0..BLOCK_STEPS {
            rate = stepper.step(&mut u)?.rate;
            let r = match leading_edge(&u, params.theta_pin) {
                Ok(r) => r - grid.z_shift(),
                Err(_) if u.values.iter().all(|v| *v <= params.theta_pin) => {
                    return Err(DiffuseError::EscapeToZero { time: u.time })
                }
                Err(e) => return Err(e),
            };
            if r != 0.0 {
                for i in 0..grid.ny() {
                    row.copy_from_slice(u.column(i));
                    shift_linear(&row, r / dz, &mut u.values[i * nz..(i + 1) * nz]);
                }
            }
            moved += r;
        }
        elapsed += BLOCK_STEPS as f64 * params.dt;
        let sigma = moved / (BLOCK_STEPS as f64 * params.dt);
        if let Some(p) = prev {
            let change = (sigma - p).abs();
            if change < 0.5 * params.drift_tol {
                break (sigma, change, true);
            }
            if sigma.abs() > 50.0 * change + params.drift_tol {
                break (sigma, change, false);
            }
            if elapsed >= max_time {
                break (sigma, change, false);
            }
        }
        prev = Some(sigma);
    };
    let class = if drift.abs() <= params.drift_tol {
        PinnedClass::Critical
    } else if drift > 0.0 {
        PinnedClass::TooSlow
    } else {
        PinnedClass::TooFast
    };
    let cross = grid.cross();
    let mass_above_half = (0..grid.ny())
        .map(|i| cross.weight(i) * dz * u.column(i).iter().filter(|v| **v > 0.5).count() as f64)
        .sum();
    let energy = phi_c_eps(&u, c, params.eps, well, forcing).ok();
    Ok(PinnedOutcome {
        field: u,
        c,
        class,
        drift,
        drift_change: change,
        converged,
        energy,
        mass_above_half,
        rate,
        time: elapsed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DiffuseSpeed {
    pub speed: SpeedResult,
    #[serde(skip)]
    pub profile: Field,
    pub energy: Option<EnergyReport>,
    pub equilibrium: EquilibriumResult,
    pub dynamic: Option<SpeedResult>,
    /// `(c, class, drift)` for every trial speed, in evaluation order.
    pub trials: Vec<(f64, PinnedClass, f64)>,
}

/// Bisection on `c` using the pinned-relaxation classification.
pub fn find_c_dagger_eps(
    grid: &CylinderGrid,
    params: &DiffuseRunParams,
    well: &DoubleWell,
    forcing: &Forcing,
    cross_check: bool,
) -> Result<DiffuseSpeed, DiffuseError> {
    params.validate(grid)?;
    let h4 = check_h4(well, forcing);
    if h4.verdict != Verdict::Holds {
        return Err(DiffuseError::Parameter(
            "the forcing admits no set of negative sharp energy; no positive wave speed exists".into(),
        ));
    }
    let eps = params.eps;
    let seed_v = Profile::constant(grid.cross().clone(), 1.0);
    let equilibrium = super::find_equilibrium_v(eps, well, forcing, &seed_v)?;
    if equilibrium.trivial {
        return Err(DiffuseError::Divergence("the transverse equilibrium collapsed to zero".into()));
    }
    let seed = front_seed(grid, eps, well, &equilibrium.v, 0.0);

    let (lo0, hi0) = (
        (1.0 - params.bracket_margin) * forcing.mean_g() / well.c_w(),
        (1.0 + params.bracket_margin) * forcing.sup_g() / well.c_w(),
    );
    let (mut lo, mut hi) = (lo0, hi0);
    let mut field = seed;
    let mut trials = Vec::new();
    let mut first = true;
    let mut last_energy = None;
    while hi - lo > params.tol_c {
        let c = 0.5 * (lo + hi);
        let horizon = if first { params.max_time } else { params.warm_time };
        first = false;
        let out = minimize_phi_pinned(c, params, well, forcing, &field, horizon)?;
        trials.push((c, out.class, out.drift));
        match out.class {
            PinnedClass::TooSlow => lo = c,
            PinnedClass::TooFast => hi = c,
            PinnedClass::Critical => {
                // Within drift tolerance; shrink towards the drift estimate.
                let est = c + out.drift;
                lo = lo.max(est - 0.5 * params.tol_c);
                hi = hi.min(est + 0.5 * params.tol_c);
            }
        }
        field = out.field;
        last_energy = out.energy;
    }
    if lo == lo0 || hi == hi0 {
        return Err(DiffuseError::Unclassified(format!(
            "bisection never left the bracket end: final [{lo}, {hi}] within [{lo0}, {hi0}]"
        )));
    }
    let c = 0.5 * (lo + hi);
    let energy = phi_c_eps(&field, c, eps, well, forcing).ok().or(last_energy);
    let mut speed = SpeedResult::new(c, SpeedMethod::DiffuseVariational, 0.5 * (hi - lo));
    speed.bracket = Some((lo, hi));
    speed = speed.with("trials", trials.len() as f64);
    if let Some(e) = &energy {
        speed = speed.with("phi", e.value).with("phi_tail_bound", e.tail_bound);
        let h = 1e-3 * c;
        if let (Ok(a), Ok(b)) = (
            phi_c_eps(&field, c + h, eps, well, forcing),
            phi_c_eps(&field, c - h, eps, well, forcing),
        ) {
            speed = speed.with("dphi_dc", (a.value - b.value) / (2.0 * h));
        }
    }
    let dynamic = if cross_check {
        let lab_seed = front_seed(grid, eps, well, &equilibrium.v, grid.z_min() + 0.25 * (grid.z_max() - grid.z_min()));
        let (d, _, _) = measure_speed_dynamic(&lab_seed, params, well, forcing, &[0.25, 0.5, 0.75])?;
        speed = speed.with("dynamic_speed", d.c).with("dynamic_rel_gap", (d.c - c).abs() / c);
        Some(d)
    } else {
        None
    };
    Ok(DiffuseSpeed {
        speed,
        profile: field,
        energy,
        equilibrium,
        dynamic,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvarReport {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `Φ_c^ε(u) ≥ ((c² − c†_ε²)/c²) ∫ e^{cz} ε/2 u_z²`.
pub fn verify_cvar(
    u: &Field,
    c: f64,
    eps: f64,
    c_dag_eps: f64,
    well: &DoubleWell,
    forcing: &Forcing,
) -> Result<CvarReport, DiffuseError> {
    let phi = phi_c_eps(u, c, eps, well, forcing)?;
    let rhs = (c * c - c_dag_eps * c_dag_eps) / (c * c) * weighted_z_dirichlet(u, c, eps);
    let tolerance = phi.tail_bound + 1e-12 * (phi.value.abs() + rhs.abs());
    let margin = phi.value - rhs;
    Ok(CvarReport {
        lhs: phi.value,
        rhs,
        margin,
        tolerance,
        pass: margin >= -tolerance,
    })
}
