use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use frontlab_report::read_table;
use serde_json::Value;

const HEADER: &str = r#"
schema_version = 1

[well]
kind = "quartic"

[grid]
length = 1.0
sharp_nodes = 41
"#;

/// Lines of `body` before its first table go to the top level.
fn config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let split = body
        .match_indices('[')
        .map(|(k, _)| k)
        .find(|k| *k == 0 || body[..*k].ends_with('\n'))
        .unwrap_or(body.len());
    let (top, tables) = body.split_at(split);
    let path = dir.join(name);
    fs::write(&path, format!("{top}\n{HEADER}\n{tables}")).unwrap();
    path
}

fn constant(g: f64) -> String {
    format!("[forcing]\nkind = \"product\"\ng0 = {{ kind = \"constant\", value = {g} }}\n")
}

fn run(args: &[&str], cfg: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_frontlab"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = cfg {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
}

#[test]
fn speed_sharp_on_constant_forcing_gives_the_flat_front_speed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", &constant(0.1));
    let out = dir.path().join("out");
    ok(&run(&["speed-sharp"], Some(&cfg), &out));
    let c = json(&out.join("c_dagger.json"))["c_dagger"].as_f64().unwrap();
    let exact = 6.0 * 2f64.sqrt() * 0.1;
    assert!((c - exact).abs() <= 1e-6, "c† = {c}");

    let manifest = json(&out.join("manifest.json"));
    let files: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|o| o["file"].as_str().unwrap()).collect();
    for f in ["c_dagger.json", "m_of_c.csv", "psi.csv", "psi.svg", "psi.plot.csv", "m_of_c.svg"] {
        assert!(files.contains(&f), "{f} missing from {files:?}");
    }
    for o in manifest["outputs"].as_array().unwrap() {
        let bytes = fs::read(out.join(o["file"].as_str().unwrap())).unwrap();
        use sha2::Digest;
        assert_eq!(o["sha256"].as_str().unwrap(), hex::encode(sha2::Sha256::digest(&bytes)));
    }
    assert_eq!(manifest["inputs"][0]["role"], "config");

    // m(c) changes sign across the computed speed.
    let t = read_table(&out.join("m_of_c.csv")).unwrap();
    let (cs, ms) = (t.column("c").unwrap(), t.column("m").unwrap());
    for (c_k, m_k) in cs.iter().zip(&ms) {
        if (c_k - c).abs() > 1e-3 {
            assert_eq!(*m_k > 0.0, *c_k > c, "m({c_k}) = {m_k}");
        }
    }
}

#[test]
fn cosine_profile_is_curved_with_maximum_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "c.toml",
        "[forcing]\nkind = \"product\"\ng0 = { kind = \"cosine\", mean = 0.1, relative_amplitude = 0.5 }\n",
    );
    let out = dir.path().join("out");
    ok(&run(&["speed-sharp"], Some(&cfg), &out));
    let psi = read_table(&out.join("psi.csv")).unwrap().column("value").unwrap();
    let max = psi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = psi.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(max, 0.0);
    assert!(min < -0.05, "min ψ = {min}");
    let sidecar = read_table(&out.join("psi.plot.csv")).unwrap();
    assert_eq!(sidecar.column("y").unwrap(), psi);
}

#[test]
fn missing_forcing_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", "");
    let out = dir.path().join("out");
    let o = run(&["speed-sharp"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(2));
    let e = json(&out.join("error.json"));
    assert_eq!(e["kind"], "config");
    assert!(e["message"].as_str().unwrap().contains("forcing"));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn misspelled_tolerance_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", &format!("{}\n[sharp]\ntolc = 1e-6\n", constant(0.1)));
    let o = run(&["speed-sharp"], Some(&cfg), &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn negative_forcing_is_a_verdict_for_check_but_a_failure_for_speed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", &constant(-0.1));
    let out = dir.path().join("check");
    ok(&run(&["check-assumptions"], Some(&cfg), &out));
    let a = json(&out.join("assumptions.json"));
    assert_eq!(a["negative_energy_set"]["verdict"], "fails");

    let out = dir.path().join("speed");
    let o = run(&["speed-sharp"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(json(&out.join("error.json"))["kind"], "numerical");
}

#[test]
fn sweep_errors_decrease_and_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let body = "eps = [0.1, 0.05, 0.025]\n[forcing]\nkind = \"shifted_cubic\"\ng_bar = 0.1\n";
    let cfg = config(dir.path(), "c.toml", body);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&run(&["sweep", "--workers", "1"], Some(&cfg), &a));
    ok(&run(&["sweep", "--workers", "3"], Some(&cfg), &b));
    for f in ["sweep.csv", "sweep.json", "sweep_error.svg", "psi.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let errors = read_table(&a.join("sweep.csv")).unwrap().column("error").unwrap();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");

    let o = run(&["plot", "--input", a.join("sweep.csv").to_str().unwrap(), "--kind", "loglog"], None, &a);
    ok(&o);
    let svg = fs::read_to_string(a.join("sweep_loglog.svg")).unwrap();
    let slope: f64 = svg.split("slope = ").nth(1).unwrap()[..5].parse().unwrap();
    assert!((1.5..=2.5).contains(&slope), "slope {slope}");
    let sidecar = read_table(&a.join("sweep_loglog.plot.csv")).unwrap();
    assert_eq!(sidecar.column("y").unwrap(), errors);
    assert!(a.join("manifest.json").exists() && a.join("plot.manifest.json").exists());
}

#[test]
fn plot_of_a_missing_column_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.csv");
    fs::write(&t, "x,y\n1,2\n2,3\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["plot", "--input", t.to_str().unwrap(), "--y", "z"], None, &out);
    assert_eq!(o.status.code(), Some(2));
    ok(&run(&["plot", "--input", t.to_str().unwrap()], None, &out));
    assert!(out.join("t_line.svg").exists());
    assert!(!out.join("error.json").exists());
}

#[test]
fn simulate_relaxes_toward_the_wave() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "{}\n[simulate]\neps = 0.1\nmax_time = 1.0\ninitial = {{ kind = \"step\", amplitude = 1.0, offset = 0.0 }}\n",
        constant(0.1)
    );
    let cfg = config(dir.path(), "c.toml", &body);
    let out = dir.path().join("out");
    ok(&run(&["simulate"], Some(&cfg), &out));
    let r = json(&out.join("stability.json"));
    let (first, plateau) = (r["initial_distance"].as_f64().unwrap(), r["plateau"].as_f64().unwrap());
    assert!(plateau < 0.5 * first, "initial {first}, plateau {plateau}");
    // The tanh layer of the wave alone is at L¹ distance 2√2 ln 2 · ε · |Ω| from a step.
    let width = 2.0 * 2f64.sqrt() * 2f64.ln() * 0.1;
    assert!((plateau - width).abs() < 0.1 * width, "plateau {plateau}, wave width {width}");
    let d = read_table(&out.join("stability.csv")).unwrap().column("distance").unwrap();
    assert!((d.last().unwrap() - plateau).abs() <= 1e-11 * plateau);
}

#[test]
fn simulate_without_its_table_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", &constant(0.1));
    let o = run(&["simulate"], Some(&cfg), &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn density_audit_passes_on_the_constant_forcing_wave() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", &format!("{}\n[density]\neps = 0.05\n", constant(0.1)));
    let out = dir.path().join("out");
    ok(&run(&["density-audit"], Some(&cfg), &out));
    let d = json(&out.join("density.json"));
    assert_eq!(d["pass"], true, "{d}");
    assert!(d["levelset"]["exponent"].as_f64().unwrap() >= 1.8);
}
