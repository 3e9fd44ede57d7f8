//! Benchmark schemes, Monte-Carlo experiments and figure-data emission.

mod experiment;
mod figures;
pub mod plot;
mod schemes;

pub use experiment::{
    instance, run_experiment, ExperimentSpec, PointAggregate, RunRecord, Stat, Sweep, SweepAxis,
    TraceRecord, TrialInstance, TrialMetrics, TrialSeeds, METRIC_NAMES,
};
pub use figures::{
    convergence_experiment, cyclic_experiment, emit_convergence, emit_cyclic, emit_figures,
    emit_spectra, fig3a_csv, fig3b_csv, spectra_experiment, sweep_csv, trials_csv, CyclicEntry,
    CyclicRecord,
};
pub use schemes::{
    factorize, normalize_power, run_scheme, scheme_fd_isac, scheme_ts_hbf, Scheme, SchemeOutput,
};
