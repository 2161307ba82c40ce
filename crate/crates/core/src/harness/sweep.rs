//! The ε-sweep: diffuse maximal speeds and minimizers against the sharp limit.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{hausdorff_level_set, DiffuseScaling, HarnessError};
use crate::conditions::{check_h4, check_h6_sufficient, Verdict};
use crate::diffuse::{find_c_dagger_eps, DiffuseSpeed};
use crate::model::{shifted_cubic_roots, CrossSection, Field, ForcingDescriptor, Profile, WellDescriptor};
use crate::numerics::fit_power_law;
use crate::sharp::{find_c_dagger, SharpRunParams};
use crate::speed::SpeedResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub well: WellDescriptor,
    pub forcing: ForcingDescriptor,
    pub length: f64,
    /// Cross-section nodes of the sharp computation.
    pub sharp_nodes: usize,
    /// Strictly decreasing.
    pub eps: Vec<f64>,
    #[serde(default)]
    pub diffuse: DiffuseScaling,
    #[serde(default)]
    pub sharp: SharpRunParams,
    /// Half-height `M` of the comparison window; defaults to
    /// `2 + sup ψ − inf ψ`.
    #[serde(default)]
    pub window: Option<f64>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_true")]
    pub cross_check: bool,
    #[serde(default = "default_c_omega")]
    pub c_omega: f64,
}

fn default_workers() -> usize {
    1
}

fn default_true() -> bool {
    true
}

fn default_c_omega() -> f64 {
    1.0
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Parameter(m.into()));
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0)) {
            return bad("eps values must be positive");
        }
        if self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps values must decrease strictly");
        }
        if !(self.length > 0.0) || self.sharp_nodes < 3 || self.workers == 0 {
            return bad("length, sharp_nodes and workers must be positive");
        }
        if matches!(self.window, Some(m) if !(m > 0.0)) {
            return bad("window must be positive");
        }
        self.sharp.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub c_dagger_eps: Option<f64>,
    pub dynamic_speed: Option<f64>,
    pub error: Option<f64>,
    pub hausdorff: Option<f64>,
    /// Mesh size bounding the level-set extraction error.
    pub hausdorff_resolution: Option<f64>,
    pub sup_v_minus_one: Option<f64>,
    /// Seconds; not serialized so the artifacts stay reproducible.
    #[serde(skip)]
    pub wall_clock: f64,
    /// `ok` or the error of the failed sub-run.
    pub status: String,
}

impl SweepRow {
    pub const CSV_HEADER: [&'static str; 7] = [
        "eps",
        "c_dagger_eps",
        "dynamic_speed",
        "error",
        "hausdorff",
        "sup_v_minus_one",
        "status",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        vec![
            format!("{:.12e}", self.eps),
            opt(self.c_dagger_eps),
            opt(self.dynamic_speed),
            opt(self.error),
            opt(self.hausdorff),
            opt(self.sup_v_minus_one),
            self.status.clone(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    /// Errors strictly decreasing over the successful rows (all rows must
    /// have succeeded).
    pub monotone_error: bool,
    /// Fitted order of `|c†_ε − c†|` over the last three ε.
    pub order: Option<f64>,
    pub order_constant: Option<f64>,
    /// Richardson extrapolation of the last two speeds with the fitted order.
    pub extrapolated_limit: Option<f64>,
    pub extrapolated_rel_error: Option<f64>,
    /// Least-squares `k` in `c†_ε − c† ≈ k ε²` over the last three ε.
    pub eps2_coefficient: Option<f64>,
    /// Same coefficient from the closed-form speed, when the forcing has one.
    pub closed_form_eps2_coefficient: Option<f64>,
    pub hausdorff_within_5eps: bool,
    pub sup_v_decreasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub sharp: SpeedResult,
    pub c_dagger: f64,
    pub psi: Profile,
    pub window: f64,
    /// Verdict of the sufficient uniqueness conditions; when undetermined the
    /// per-ε level sets are reported without asserting a single limit.
    pub uniqueness: Verdict,
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
    #[serde(skip)]
    pub profiles: Vec<Option<Field>>,
}

/// `M = 2 + sup ψ − inf ψ` over the unmasked nodes.
pub fn default_window(psi: &Profile) -> f64 {
    2.0 + psi.max() - psi.min_finite()
}

fn run_row(cfg: &SweepConfig, eps: f64, c_dagger: f64, psi: &Profile, window: f64) -> (SweepRow, Option<Field>) {
    let start = Instant::now();
    let mut row = SweepRow {
        eps,
        c_dagger_eps: None,
        dynamic_speed: None,
        error: None,
        hausdorff: None,
        hausdorff_resolution: None,
        sup_v_minus_one: None,
        wall_clock: 0.0,
        status: "ok".into(),
    };
    let result = (|| -> Result<DiffuseSpeed, HarnessError> {
        let well = cfg.well.build();
        let grid = cfg.diffuse.grid(eps, cfg.length)?;
        let forcing = cfg.forcing.build_at(grid.cross(), Some(eps))?;
        let params = cfg.diffuse.params(eps);
        Ok(find_c_dagger_eps(&grid, &params, &well, &forcing, cfg.cross_check)?)
    })();
    let profile = match result {
        Ok(d) => {
            row.c_dagger_eps = Some(d.speed.c);
            row.dynamic_speed = d.dynamic.as_ref().map(|s| s.c);
            row.error = Some((d.speed.c - c_dagger).abs());
            row.sup_v_minus_one = Some(d.equilibrium.v.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max));
            let psi_here = if psi.cross == *d.profile.grid.cross() {
                psi.clone()
            } else {
                Profile::from_fn(d.profile.grid.cross().clone(), |y| psi.interpolate(y))
            };
            match hausdorff_level_set(&d.profile, 0.5, &psi_here, window) {
                Ok(h) => {
                    row.hausdorff = Some(h.distance);
                    row.hausdorff_resolution = Some(h.resolution);
                }
                Err(e) => row.status = e.to_string(),
            }
            Some(d.profile)
        }
        Err(e) => {
            row.status = e.to_string();
            None
        }
    };
    row.wall_clock = start.elapsed().as_secs_f64();
    (row, profile)
}

fn summarize(cfg: &SweepConfig, rows: &[SweepRow], c_dagger: f64) -> SweepSummary {
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.error.is_some()).collect();
    let all_ok = ok.len() == rows.len();
    let monotone_error = all_ok && ok.windows(2).all(|w| w[1].error.unwrap() < w[0].error.unwrap());
    let tail: Vec<&SweepRow> = ok.iter().rev().take(3).rev().cloned().collect();
    let (order, order_constant) = if tail.len() >= 2 {
        let xs: Vec<f64> = tail.iter().map(|r| r.eps).collect();
        let ys: Vec<f64> = tail.iter().map(|r| r.error.unwrap()).collect();
        fit_power_law(&xs, &ys).map_or((None, None), |(p, c)| (Some(p), Some(c)))
    } else {
        (None, None)
    };
    let extrapolated_limit = match (order, tail.len()) {
        (Some(p), n) if n >= 2 && p > 0.0 => {
            let (a, b) = (tail[n - 2], tail[n - 1]);
            let (ca, cb) = (a.c_dagger_eps.unwrap(), b.c_dagger_eps.unwrap());
            Some(cb + (cb - ca) / ((a.eps / b.eps).powf(p) - 1.0))
        }
        _ => None,
    };
    let eps2_coefficient = (!tail.is_empty()).then(|| {
        let num: f64 = tail.iter().map(|r| (r.c_dagger_eps.unwrap() - c_dagger) * r.eps * r.eps).sum();
        let den: f64 = tail.iter().map(|r| r.eps.powi(4)).sum();
        num / den
    });
    let closed_form_eps2_coefficient = match (&cfg.forcing, rows.last()) {
        (ForcingDescriptor::ShiftedCubic { g_bar }, Some(last)) => shifted_cubic_roots(*g_bar, last.eps)
            .ok()
            .map(|[v0, vm, v1]| ((v0 + v1 - 2.0 * vm) / (2f64.sqrt() * last.eps) - c_dagger) / (last.eps * last.eps)),
        _ => None,
    };
    let hausdorff_within_5eps = all_ok && rows.iter().all(|r| matches!(r.hausdorff, Some(h) if h <= 5.0 * r.eps));
    let sup_v_decreasing = all_ok && rows.windows(2).all(|w| w[1].sup_v_minus_one <= w[0].sup_v_minus_one);
    SweepSummary {
        monotone_error,
        order,
        order_constant,
        extrapolated_limit,
        extrapolated_rel_error: extrapolated_limit.map(|l| (l - c_dagger).abs() / c_dagger),
        eps2_coefficient,
        closed_form_eps2_coefficient,
        hausdorff_within_5eps,
        sup_v_decreasing,
    }
}

/// Computes `c†` and `ψ` once, then each row in parallel on a pool of
/// `cfg.workers` threads. Rows come back in ε order whatever the completion
/// order; a failed row records its error and the sweep continues.
pub fn run_eps_sweep(cfg: &SweepConfig) -> Result<SweepReport, HarnessError> {
    cfg.validate()?;
    let well = cfg.well.build();
    let cross = CrossSection::new(cfg.length, cfg.sharp_nodes)?;
    let limit = cfg.forcing.build_at(&cross, None)?;
    let h4 = check_h4(&well, &limit);
    if h4.verdict != Verdict::Holds {
        return Err(HarnessError::Precondition(format!(
            "the existence condition is {:?}; no positive maximal speed",
            h4.verdict
        )));
    }
    let uniqueness = check_h6_sufficient(&well, &limit, cfg.c_omega).map_or(Verdict::Undetermined, |r| r.verdict);
    let sharp = find_c_dagger(&cfg.sharp, &well, &limit)?;
    let c_dagger = sharp.speed.c;
    let psi = sharp.psi.clone();
    let window = cfg.window.unwrap_or_else(|| default_window(&psi));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| HarnessError::Parameter(e.to_string()))?;
    let results: Vec<(SweepRow, Option<Field>)> =
        pool.install(|| cfg.eps.par_iter().map(|&eps| run_row(cfg, eps, c_dagger, &psi, window)).collect());
    let (rows, profiles): (Vec<SweepRow>, Vec<Option<Field>>) = results.into_iter().unzip();
    let summary = summarize(cfg, &rows, c_dagger);
    Ok(SweepReport {
        sharp: sharp.speed,
        c_dagger,
        psi,
        window,
        uniqueness,
        rows,
        summary,
        profiles,
    })
}
