use lpi_isac::harness::{
    run_experiment, sweep_csv, trials_csv, ExperimentSpec, Scheme, Sweep, SweepAxis, TrialSeeds,
};
use lpi_isac::Error;

fn small_spec() -> ExperimentSpec {
    let mut spec = ExperimentSpec {
        trials: 3,
        seed: 17,
        schemes: vec![Scheme::Proposed, Scheme::TsHbf],
        sweep: Some(Sweep {
            axis: SweepAxis::ZetaDbm,
            values: vec![-5.0, 5.0],
        }),
        ..Default::default()
    };
    spec.solver.max_iters = 40;
    spec
}

fn run_on(threads: usize, spec: &ExperimentSpec) -> lpi_isac::harness::RunRecord {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| run_experiment(spec).unwrap())
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let spec = small_spec();
    let a = run_on(1, &spec);
    let b = run_on(3, &spec);
    assert_eq!(a.trials, b.trials);
    assert_eq!(a.aggregates, b.aggregates);
    assert_eq!(sweep_csv(&a), sweep_csv(&b));
    assert_eq!(trials_csv(&a), trials_csv(&b));
}

#[test]
fn seeds_change_the_draws() {
    let mut spec = small_spec();
    let a = run_experiment(&spec).unwrap();
    spec.seed += 1;
    let b = run_experiment(&spec).unwrap();
    assert_ne!(a.trials, b.trials);
    assert_ne!(TrialSeeds::derive(1, 0), TrialSeeds::derive(1, 1));
}

#[test]
fn spec_survives_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spec.toml");
    let spec = small_spec();
    spec.save(&path).unwrap();
    assert_eq!(ExperimentSpec::load(&path).unwrap(), spec);
}

#[test]
fn failed_trials_carry_their_coordinates() {
    let mut spec = small_spec();
    spec.sweep = Some(Sweep {
        axis: SweepAxis::EtaDbm,
        values: vec![60.0],
    });
    match run_experiment(&spec) {
        Err(Error::TrialFailed {
            seed,
            point,
            source,
            ..
        }) => {
            assert_eq!(seed, 17);
            assert_eq!(point, 60.0);
            assert!(source.is_infeasible());
        }
        other => panic!("expected a failed trial, got {other:?}"),
    }
}
