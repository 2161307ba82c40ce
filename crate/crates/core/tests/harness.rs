use frontlab::harness::{run_eps_sweep, DiffuseScaling, SweepConfig, SweepRow};
use frontlab::model::{ForcingDescriptor, G0Descriptor, WellDescriptor};
use frontlab::sharp::SharpRunParams;

fn cosine_sweep(eps: Vec<f64>, workers: usize) -> SweepConfig {
    SweepConfig {
        well: WellDescriptor::Quartic,
        forcing: ForcingDescriptor::Product {
            g0: G0Descriptor::Cosine {
                mean: 0.1,
                relative_amplitude: 0.5,
            },
        },
        length: 1.0,
        sharp_nodes: 81,
        eps,
        diffuse: DiffuseScaling::default(),
        sharp: SharpRunParams::default(),
        window: None,
        workers,
        cross_check: false,
        c_omega: 1.0,
    }
}

#[test]
fn curved_front_level_set_tracks_the_sharp_profile() {
    let r = run_eps_sweep(&cosine_sweep(vec![0.1, 0.05], 2)).unwrap();
    let osc = r.psi.max() - r.psi.min_finite();
    assert!(osc > 0.05, "profile is not curved: oscillation {osc}");
    for row in &r.rows {
        assert_eq!(row.status, "ok");
        let d = row.hausdorff.unwrap();
        assert!(d <= 5.0 * row.eps, "eps {}: d_H = {d}", row.eps);
        assert!(row.sup_v_minus_one.unwrap() < 0.1);
    }
    assert!(r.rows[1].hausdorff < r.rows[0].hausdorff);
}

#[test]
fn sweep_table_is_reproducible_across_worker_counts() {
    let records = |workers| -> Vec<Vec<String>> {
        run_eps_sweep(&cosine_sweep(vec![0.2, 0.1], workers))
            .unwrap()
            .rows
            .iter()
            .map(SweepRow::csv_record)
            .collect()
    };
    assert_eq!(records(1), records(2));
}
