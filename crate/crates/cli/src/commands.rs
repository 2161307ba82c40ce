use std::path::Path;

use frontlab::conditions::{check_h4, check_h6_sufficient};
use frontlab::diffuse::{find_c_dagger_eps, DiffuseSpeed};
use frontlab::harness::{
    density_audit_L2, density_audit_levelset, interface_centers, run_eps_sweep, stability_experiment, StabilityConfig,
    SweepConfig, SweepRow,
};
use frontlab::model::{check_well_constants, CrossSection, DoubleWell, Field, Forcing, Profile};
use frontlab::sharp::{find_c_dagger, m_of_c_scan, measure_speed_fmc};
use frontlab_report::{loglog_slope, profile_csv, read_table, Chart, Series};
use serde_json::json;

use crate::artifacts::{num, Artifacts};
use crate::config::ExperimentConfig;
use crate::{numerical, CliError};

/// Trial speeds of the written `m(c)` curve.
const M_OF_C_POINTS: usize = 21;

fn sharp_setup(cfg: &ExperimentConfig, eps: Option<f64>) -> Result<(DoubleWell, Forcing), CliError> {
    let cross = CrossSection::new(cfg.grid.length, cfg.grid.sharp_nodes).map_err(|e| CliError::Config(e.to_string()))?;
    let forcing = cfg
        .forcing
        .build_at(&cross, eps)
        .map_err(|e| CliError::Config(format!("forcing: {e}")))?;
    Ok((cfg.well.build(), forcing))
}

fn profile_points(p: &Profile) -> Vec<(f64, f64)> {
    (0..p.len())
        .filter(|&i| !p.is_masked(i))
        .map(|i| (p.cross.y(i), p.values[i]))
        .collect()
}

fn profile_chart(title: &str, name: &str, p: &Profile) -> Chart {
    Chart {
        title: title.into(),
        x_label: "y".into(),
        y_label: name.into(),
        series: vec![Series {
            name: name.into(),
            points: profile_points(p),
        }],
        ..Chart::default()
    }
}

pub fn speed_sharp(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let (well, forcing) = sharp_setup(cfg, None)?;
    let sharp = find_c_dagger(&cfg.sharp, &well, &forcing).map_err(numerical)?;
    let flat = Profile::constant(forcing.cross().clone(), 0.0);
    let fmc = measure_speed_fmc(&flat, &cfg.sharp, &well, &forcing).map_err(numerical)?;
    let c = sharp.speed.c;
    let gap = (fmc.speed.c - c).abs() / c;
    let cw = well.c_w();

    let hi = (1.0 + cfg.sharp.bracket_margin) * forcing.sup_g() / cw;
    let lo = ((1.0 - cfg.sharp.bracket_margin) * forcing.mean_g() / cw).max(1e-3 * hi);
    let cs: Vec<f64> = (0..M_OF_C_POINTS)
        .map(|k| lo + (hi - lo) * k as f64 / (M_OF_C_POINTS - 1) as f64)
        .collect();
    let curve = m_of_c_scan(&cs, &cfg.sharp, &well, &forcing).map_err(numerical)?;

    out.json(
        "c_dagger.json",
        &json!({
            "c_dagger": c,
            "variational": sharp.speed,
            "dynamic": fmc.speed,
            "relative_gap": gap,
            "mean_speed_bound": forcing.mean_g() / cw,
            "sup_speed_bound": forcing.sup_g() / cw,
            "fingers": sharp.minimizer.fingers,
            "stationary_shape": fmc.psi.is_some(),
            "shape_drift": fmc.shape_drift,
        }),
    )?;
    out.csv(
        "m_of_c.csv",
        &["c", "m"],
        curve.iter().map(|(c, m)| [num(*c), num(*m)]),
    )?;
    out.chart(
        "m_of_c.svg",
        &Chart {
            title: "minimum of the weighted sharp functional".into(),
            x_label: "c".into(),
            y_label: "m(c)".into(),
            series: vec![Series {
                name: "m".into(),
                points: curve,
            }],
            annotation: Some(format!("c† = {c:.6}")),
            ..Chart::default()
        },
    )?;
    out.bytes("psi.csv", profile_csv(&sharp.psi)?.as_bytes())?;
    out.chart("psi.svg", &profile_chart("sharp traveling wave profile", "psi", &sharp.psi))?;
    println!("c† = {c:.8} (dynamic {:.8}, relative gap {gap:.2e})", fmc.speed.c);
    Ok(())
}

fn diffuse_speed(cfg: &ExperimentConfig, eps: f64, cross_check: bool) -> Result<DiffuseSpeed, CliError> {
    let grid = cfg.diffuse.grid(eps, cfg.grid.length).map_err(|e| CliError::Config(e.to_string()))?;
    let forcing = cfg
        .forcing
        .build_at(grid.cross(), Some(eps))
        .map_err(|e| CliError::Config(format!("forcing: {e}")))?;
    find_c_dagger_eps(&grid, &cfg.diffuse.params(eps), &cfg.well.build(), &forcing, cross_check).map_err(numerical)
}

fn field_rows(u: &Field) -> impl Iterator<Item = [String; 3]> + '_ {
    let g = &u.grid;
    (0..g.ny()).flat_map(move |i| (0..g.nz()).map(move |j| [num(g.cross().y(i)), num(g.z(j)), num(u.at(i, j))]))
}

pub fn speed_diffuse(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let eps = cfg.eps_list()?[0];
    let d = diffuse_speed(cfg, eps, cfg.sweep.cross_check)?;
    out.json("c_dagger_eps.json", &json!({ "eps": eps, "result": d }))?;
    out.csv(
        "trials.csv",
        &["c", "class", "drift"],
        d.trials.iter().map(|(c, class, drift)| {
            let class = serde_json::to_value(class).ok().and_then(|v| v.as_str().map(str::to_string));
            [num(*c), class.unwrap_or_default(), num(*drift)]
        }),
    )?;
    out.bytes("v.csv", profile_csv(&d.equilibrium.v)?.as_bytes())?;
    out.csv("profile.csv", &["y", "z", "u"], field_rows(&d.profile))?;
    let g = &d.profile.grid;
    let series = [0, g.ny() / 2, g.ny() - 1]
        .iter()
        .map(|&i| Series {
            name: format!("y = {:.3}", g.cross().y(i)),
            points: (0..g.nz()).map(|j| (g.z(j), d.profile.at(i, j))).collect(),
        })
        .collect();
    out.chart(
        "profile.svg",
        &Chart {
            title: format!("diffuse wave profile, eps = {eps}"),
            x_label: "z".into(),
            y_label: "u".into(),
            series,
            ..Chart::default()
        },
    )?;
    println!("c†_ε = {:.8} at ε = {eps}", d.speed.c);
    Ok(())
}

pub fn sweep(cfg: &ExperimentConfig, workers: usize, out: &mut Artifacts) -> Result<(), CliError> {
    let sc = SweepConfig {
        well: cfg.well,
        forcing: cfg.forcing.clone(),
        length: cfg.grid.length,
        sharp_nodes: cfg.grid.sharp_nodes,
        eps: cfg.eps_list()?.to_vec(),
        diffuse: cfg.diffuse.clone(),
        sharp: cfg.sharp.clone(),
        window: cfg.sweep.window,
        workers,
        cross_check: cfg.sweep.cross_check,
        c_omega: cfg.assumptions.c_omega,
    };
    sc.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let r = run_eps_sweep(&sc).map_err(numerical)?;
    out.csv("sweep.csv", &SweepRow::CSV_HEADER, r.rows.iter().map(SweepRow::csv_record))?;
    out.json("sweep.json", &r)?;
    out.bytes("psi.csv", profile_csv(&r.psi)?.as_bytes())?;
    let points: Vec<(f64, f64)> = r
        .rows
        .iter()
        .filter_map(|row| row.error.filter(|e| *e > 0.0).map(|e| (row.eps, e)))
        .collect();
    out.chart("sweep_error.svg", &loglog_chart("speed error against eps", "eps", "error", points))?;
    for row in &r.rows {
        eprintln!("eps {:.4}: {} in {:.1} s", row.eps, row.status, row.wall_clock);
    }
    match r.summary.order {
        Some(p) => println!("c† = {:.8}, fitted order {p:.3}", r.c_dagger),
        None => println!("c† = {:.8}, order not fitted", r.c_dagger),
    }
    Ok(())
}

/// Log-log chart annotated with the slope over the last three points.
fn loglog_chart(title: &str, x: &str, y: &str, points: Vec<(f64, f64)>) -> Chart {
    let tail = &points[points.len().saturating_sub(3)..];
    Chart {
        title: title.into(),
        x_label: x.into(),
        y_label: y.into(),
        log_x: true,
        log_y: true,
        annotation: loglog_slope(tail).map(|s| format!("slope = {s:.3}")),
        series: vec![Series {
            name: y.into(),
            points,
        }],
    }
}

pub fn check_assumptions(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let (well, forcing) = sharp_setup(cfg, None)?;
    let h4 = check_h4(&well, &forcing);
    let h6 = match check_h6_sufficient(&well, &forcing, cfg.assumptions.c_omega) {
        Ok(r) => json!(r),
        Err(e) => json!({ "verdict": "undetermined", "error": e.to_string() }),
    };
    let mut wells = Vec::new();
    for &eps in &cfg.eps {
        let (_, f) = sharp_setup(cfg, Some(eps))?;
        wells.push(check_well_constants(&well, &f, eps, &cfg.assumptions.well, &cfg.eps));
    }
    out.json(
        "assumptions.json",
        &json!({
            "well_certificate": well.certificate(),
            "negative_energy_set": h4,
            "uniqueness": h6,
            "well_constants": wells,
        }),
    )?;
    println!(
        "negative-energy set: {}; uniqueness: {}",
        json!(h4.verdict).as_str().unwrap_or("?"),
        h6["verdict"].as_str().unwrap_or("?")
    );
    Ok(())
}

pub fn simulate(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let opts = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| CliError::Config("simulate needs a [simulate] table".into()))?;
    let sc = StabilityConfig {
        well: cfg.well,
        forcing: cfg.forcing.clone(),
        length: cfg.grid.length,
        eps: opts.eps,
        diffuse: cfg.diffuse.clone(),
        sharp: cfg.sharp.clone(),
        sharp_nodes: cfg.grid.sharp_nodes,
        window: opts.window,
        pad: opts.pad,
        max_time: opts.max_time,
        checkpoints: opts.checkpoints,
        plateau_tol: opts.plateau_tol,
        c_dagger_eps: opts.c_dagger_eps,
        admissibility_delta: opts.admissibility_delta,
    };
    sc.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let r = stability_experiment(&sc, &opts.initial).map_err(numerical)?;
    out.json("stability.json", &r)?;
    let points: Vec<(f64, f64)> = r.times.iter().cloned().zip(r.distances.iter().cloned()).collect();
    out.csv("stability.csv", &["t", "distance"], points.iter().map(|(t, d)| [num(*t), num(*d)]))?;
    out.csv("final_field.csv", &["y", "z", "u"], field_rows(&r.final_field))?;
    out.chart(
        "stability.svg",
        &Chart {
            title: format!("aligned L1 distance to the sharp subgraph, eps = {}", r.eps),
            x_label: "t".into(),
            y_label: "distance".into(),
            log_y: true,
            annotation: Some(format!("plateau {:.4e}", r.plateau)),
            series: vec![Series {
                name: "distance".into(),
                points,
            }],
            ..Chart::default()
        },
    )?;
    println!(
        "initial distance {:.4e}, plateau {:.4e} ({})",
        r.initial_distance,
        r.plateau,
        if r.plateau_reached { "reached" } else { "not reached" }
    );
    Ok(())
}

pub fn density_audit(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let opts = cfg
        .density
        .as_ref()
        .ok_or_else(|| CliError::Config("density-audit needs a [density] table".into()))?;
    let d = diffuse_speed(cfg, opts.eps, false)?;
    let u = d.profile.stretched(opts.eps);
    let centers = interface_centers(&u, 0.5, opts.stride);
    let ls = density_audit_levelset(&u, opts.beta, &opts.radii, &centers).map_err(numerical)?;
    let l2 = density_audit_L2(&u, &centers, opts.alpha, opts.r0, opts.r1).map_err(numerical)?;
    out.json(
        "density.json",
        &json!({
            "eps": opts.eps,
            "c_dagger_eps": d.speed.c,
            "levelset": ls,
            "l2": l2,
            "pass": ls.pass && l2.pass,
        }),
    )?;
    out.csv(
        "density_levelset.csv",
        &["center_y", "center_z", "R", "mu"],
        ls.rows.iter().flat_map(|row| {
            ls.radii
                .iter()
                .zip(&row.mu)
                .map(|(r, m)| [num(row.center.0), num(row.center.1), num(*r), num(*m)])
        }),
    )?;
    out.csv(
        "density_l2.csv",
        &["center_y", "center_z", "R", "mean_u2", "mean_complement"],
        l2.rows.iter().flat_map(|row| {
            l2.radii.iter().enumerate().map(|(k, r)| {
                [
                    num(row.center.0),
                    num(row.center.1),
                    num(*r),
                    num(row.mean_u2[k]),
                    num(row.mean_complement[k]),
                ]
            })
        }),
    )?;
    let n = ls.rows.len().max(1) as f64;
    let mean_mu: Vec<(f64, f64)> = ls
        .radii
        .iter()
        .enumerate()
        .map(|(k, r)| (*r, ls.rows.iter().map(|row| row.mu[k]).sum::<f64>() / n))
        .collect();
    out.chart("density_mu.svg", &loglog_chart("mean level-set measure in balls", "R", "mu", mean_mu))?;
    println!(
        "level-set exponent {:.3} ({}), L2 alpha {:.4} ({})",
        ls.exponent,
        if ls.pass { "pass" } else { "fail" },
        l2.alpha,
        if l2.pass { "pass" } else { "fail" }
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    /// Log-log axes with the slope over the last three points.
    Loglog,
    Line,
    /// A `y,value,masked` profile.
    Profile,
}

pub fn plot(input: &Path, kind: PlotKind, x: Option<&str>, ys: &[String], out: &mut Artifacts) -> Result<(), CliError> {
    let table = read_table(input).map_err(|e| CliError::Config(format!("plot input: {e}")))?;
    let (default_x, default_y): (&str, Vec<String>) = match kind {
        PlotKind::Loglog if table.header.iter().any(|h| h == "eps") => ("eps", vec!["error".into()]),
        PlotKind::Profile => ("y", vec!["value".into()]),
        _ => (
            table.header[0].as_str(),
            table.header.get(1).cloned().into_iter().collect(),
        ),
    };
    let x = x.unwrap_or(default_x);
    let ys = if ys.is_empty() { default_y } else { ys.to_vec() };
    let column = |name: &str| {
        table
            .column(name)
            .ok_or_else(|| CliError::Config(format!("plot input has no column `{name}` (header {:?})", table.header)))
    };
    let xs = column(x)?;
    let mut series = Vec::new();
    for y in &ys {
        let points: Vec<(f64, f64)> = xs
            .iter()
            .zip(column(y)?)
            .filter(|(a, b)| a.is_finite() && b.is_finite() && (kind != PlotKind::Loglog || (**a > 0.0 && *b > 0.0)))
            .map(|(a, b)| (*a, b))
            .collect();
        series.push(Series {
            name: y.clone(),
            points,
        });
    }
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "plot".into());
    let name = format!("{stem}_{}.svg", format!("{kind:?}").to_lowercase());
    let mut chart = Chart {
        title: stem,
        x_label: x.into(),
        y_label: ys.join(", "),
        log_x: kind == PlotKind::Loglog,
        log_y: kind == PlotKind::Loglog,
        series,
        annotation: None,
    };
    if kind == PlotKind::Loglog {
        let pts = &chart.series[0].points;
        let mut sorted = pts.clone();
        sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
        chart.annotation = loglog_slope(&sorted[sorted.len().saturating_sub(3)..]).map(|s| format!("slope = {s:.3}"));
        if let Some(a) = &chart.annotation {
            println!("{a}");
        }
    }
    out.chart(&name, &chart)
}
