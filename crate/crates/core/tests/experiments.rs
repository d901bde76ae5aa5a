use std::path::PathBuf;

use ehsim::experiments::{run_experiment, write_csv, CsvRow, ExperimentId, RowMode, SweepSpec};

fn config_path(id: ExperimentId) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../configs/{id}.toml"))
}

/// EH, non-EH and reference rows of each grid point, in output order.
fn triples(rows: &[CsvRow]) -> impl Iterator<Item = (&CsvRow, &CsvRow, &CsvRow)> {
    rows.chunks(3).map(|c| {
        assert_eq!(
            [c[0].mode, c[1].mode, c[2].mode],
            [RowMode::Eh, RowMode::NonEh, RowMode::ClosedForm]
        );
        (&c[0], &c[1], &c[2])
    })
}

#[test]
fn shipped_configs_match_builtins() {
    for id in ExperimentId::ALL {
        let spec = SweepSpec::from_path(&config_path(id)).unwrap();
        assert_eq!(spec, SweepSpec::builtin(id), "{id}");
    }
}

#[test]
fn non_eh_rows_track_the_reference() {
    for id in [ExperimentId::Fig1, ExperimentId::Fig2, ExperimentId::Fig4] {
        let rows = run_experiment(&SweepSpec::builtin(id)).unwrap();
        for (_, ne, cf) in triples(&rows) {
            let z = (ne.u_mean - cf.u_mean) / ne.u_std_err;
            assert!(
                z.abs() < 3.0,
                "{id} {} dB N={} M={}: z = {z}",
                ne.p_in_db,
                ne.n,
                ne.m
            );
        }
    }
}

fn assert_eh_close(spec: &SweepSpec) {
    let rows = run_experiment(spec).unwrap();
    for (eh, ne, _) in triples(&rows).filter(|(eh, _, _)| eh.n == 10_000) {
        let gap = (eh.u_mean - ne.u_mean).abs() / ne.u_mean.max(1e-6);
        assert!(
            gap < 0.05,
            "{} {} dB B={} M={}: {gap}",
            spec.experiment,
            eh.p_in_db,
            eh.b_max_ratio,
            eh.m
        );
    }
}

#[test]
fn eh_rows_converge_at_long_horizons() {
    assert_eh_close(&SweepSpec::builtin(ExperimentId::Fig2));
    assert_eh_close(&SweepSpec {
        b_max_ratio: vec![200.0],
        ..SweepSpec::builtin(ExperimentId::Fig3)
    });
    assert_eh_close(&SweepSpec {
        n: vec![10_000],
        ..SweepSpec::builtin(ExperimentId::Fig4)
    });
    assert_eh_close(&SweepSpec {
        n: vec![10_000],
        m: vec![3],
        closed_form_slots: 10_000,
        ..SweepSpec::builtin(ExperimentId::Fig6)
    });
}

#[test]
fn reference_outage_falls_with_power() {
    let rows = run_experiment(&SweepSpec {
        n: vec![100],
        trials: 2,
        ..SweepSpec::builtin(ExperimentId::Fig1)
    })
    .unwrap();
    let cf: Vec<f64> = triples(&rows).map(|(_, _, c)| c.u_mean).collect();
    assert!(cf.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn rows_do_not_depend_on_thread_count() {
    let spec = SweepSpec {
        p_in_db: vec![0.0, 10.0],
        n: vec![200],
        m: vec![2, 4],
        trials: 7,
        closed_form_slots: 5000,
        seed: 99,
        ..SweepSpec::builtin(ExperimentId::Fig6)
    };
    let csv = |threads| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let mut buf = Vec::new();
        write_csv(&pool.install(|| run_experiment(&spec)).unwrap(), &mut buf).unwrap();
        buf
    };
    let one = csv(1);
    assert_eq!(one, csv(3));
    assert_eq!(one, csv(1));
}

#[test]
fn seed_changes_simulated_rows_only() {
    let spec = SweepSpec {
        p_in_db: vec![5.0],
        n: vec![300],
        trials: 4,
        ..SweepSpec::builtin(ExperimentId::Fig5)
    };
    let a = run_experiment(&spec).unwrap();
    let b = run_experiment(&SweepSpec { seed: 1, ..spec }).unwrap();
    for (x, y) in a.iter().zip(&b) {
        match x.mode {
            RowMode::ClosedForm => assert_eq!(x, y),
            _ => assert_ne!(x.u_mean, y.u_mean),
        }
    }
}
