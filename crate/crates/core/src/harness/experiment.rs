//! Experiment description, per-trial execution and aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::schemes::{run_scheme, Scheme, SchemeOutput};
use crate::metrics::MetricsReport;
use crate::numeric::mean_std;
use crate::signal_model::{
    ConstraintSpec, DesignConstraints, OfdmSystemConfig, Profile, Scenario, ScenarioSpec,
};
use crate::solver::{ConvergenceTrace, SolverConfig};
use crate::{Error, Result};

/// Parameter varied across sweep points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Per-subcarrier transmit power budget, dBm.
    PowerDbm,
    /// Nulling threshold, dBm.
    ZetaDbm,
    /// Weighted mainlobe level, dBm.
    EtaDbm,
    RfChains,
    Subcarriers,
    /// CSI error variance relative to the channel path gain.
    CsiError,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 6] = [
        SweepAxis::PowerDbm,
        SweepAxis::ZetaDbm,
        SweepAxis::EtaDbm,
        SweepAxis::RfChains,
        SweepAxis::Subcarriers,
        SweepAxis::CsiError,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::PowerDbm => "power_dbm",
            SweepAxis::ZetaDbm => "zeta_dbm",
            SweepAxis::EtaDbm => "eta_dbm",
            SweepAxis::RfChains => "rf_chains",
            SweepAxis::Subcarriers => "subcarriers",
            SweepAxis::CsiError => "csi_error",
        }
    }

    fn integral(self) -> bool {
        matches!(self, SweepAxis::RfChains | SweepAxis::Subcarriers)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let alias = match key.as_str() {
            "power" | "p" => "power_dbm",
            "zeta" | "null" | "nulling" => "zeta_dbm",
            "eta" | "mainlobe" => "eta_dbm",
            "n_rf" | "rf" => "rf_chains",
            "k" => "subcarriers",
            "csi" | "sigma2_csi" => "csi_error",
            other => other,
        };
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == alias)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown sweep axis `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// Everything needed to replay an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub name: String,
    pub trials: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub output_dir: PathBuf,
    /// Also write one CSV row per trial.
    pub dump_trials: bool,
    pub sweep: Option<Sweep>,
    pub system: OfdmSystemConfig,
    pub scenario: ScenarioSpec,
    pub constraints: ConstraintSpec,
    pub solver: SolverConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec::for_profile(Profile::Desk)
    }
}

impl ExperimentSpec {
    pub fn for_profile(profile: Profile) -> Self {
        let (scenario, constraints) = match profile {
            Profile::Desk => (ScenarioSpec::desk(), ConstraintSpec::desk()),
            Profile::Paper => (ScenarioSpec::paper(), ConstraintSpec::paper()),
        };
        ExperimentSpec {
            name: "experiment".into(),
            trials: profile.default_trials(),
            seed: 0,
            schemes: vec![Scheme::Proposed],
            output_dir: PathBuf::from("out"),
            dump_trials: false,
            sweep: None,
            system: profile.system(),
            scenario,
            constraints,
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one scheme is required".into(),
            ));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::InvalidArgument("sweep has no values".into()));
            }
            if sweep.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("sweep values must be finite".into()));
            }
            if sweep.values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(
                    "sweep values must be strictly increasing".into(),
                ));
            }
            if sweep.axis.integral() && sweep.values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "{} values must be positive integers",
                    sweep.axis
                )));
            }
        }
        self.system.validate()?;
        self.scenario.validate()?;
        self.solver.validate()
    }

    /// Sweep values, or a single unnamed point.
    pub fn points(&self) -> Vec<f64> {
        self.sweep
            .as_ref()
            .map(|s| s.values.clone())
            .unwrap_or_else(|| vec![f64::NAN])
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }
}

/// Seeds of one Monte-Carlo trial, drawn from stream `trial` of the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSeeds {
    pub scenario: u64,
    pub solver: u64,
    pub csi: u64,
}

impl TrialSeeds {
    pub fn derive(master: u64, trial: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master);
        rng.set_stream(trial as u64);
        TrialSeeds {
            scenario: rng.next_u64(),
            solver: rng.next_u64(),
            csi: rng.next_u64(),
        }
    }
}

/// Scenario and constraints of one (point, trial).
#[derive(Debug, Clone)]
pub struct TrialInstance {
    pub scenario: Scenario,
    pub constraints: DesignConstraints,
    pub solver: SolverConfig,
}

/// Build the instance seen by every scheme at one sweep point.
pub fn instance(spec: &ExperimentSpec, value: f64, seeds: TrialSeeds) -> Result<TrialInstance> {
    let mut system = spec.system.clone();
    let scenario_spec = spec.scenario.clone();
    let mut cons = spec.constraints.clone();
    let mut csi = 0.0;
    if let Some(sweep) = &spec.sweep {
        match sweep.axis {
            SweepAxis::PowerDbm => cons.power_dbm = value,
            SweepAxis::ZetaDbm => cons.zeta_dbm = value,
            SweepAxis::EtaDbm => cons.eta_dbm = value,
            SweepAxis::RfChains => system.rf_chains = value as usize,
            SweepAxis::Subcarriers => system.subcarriers = value as usize,
            SweepAxis::CsiError => csi = value,
        }
    }
    system.validate()?;
    let mut scenario = Scenario::generate(&scenario_spec, &system, seeds.scenario)?;
    if csi > 0.0 {
        scenario = scenario.perturb_csi(csi * scenario.path_gain, seeds.csi)?;
    }
    let constraints = cons.build(&scenario)?;
    let solver = SolverConfig {
        seed: seeds.solver,
        ..spec.solver.clone()
    };
    Ok(TrialInstance {
        scenario,
        constraints,
        solver,
    })
}

/// Scalar metrics of one designed beamformer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub point: usize,
    pub value: f64,
    pub scheme: Scheme,
    pub trial: usize,
    pub seed: u64,
    pub se: f64,
    pub radar_sinr_db: f64,
    pub iml_dbm: f64,
    pub intercepted_power_w: f64,
    pub flatness: f64,
    pub mainlobe_dev_db: f64,
    pub max_null_dbm: f64,
    pub converged: bool,
    pub restored: bool,
    pub iterations: usize,
    pub factorization_residual: Option<f64>,
}

/// Names of the aggregated metrics, in column order.
pub const METRIC_NAMES: [&str; 7] = [
    "se",
    "radar_sinr_db",
    "iml_dbm",
    "intercepted_power_w",
    "flatness",
    "mainlobe_dev_db",
    "max_null_dbm",
];

impl TrialMetrics {
    pub fn values(&self) -> [f64; 7] {
        [
            self.se,
            self.radar_sinr_db,
            self.iml_dbm,
            self.intercepted_power_w,
            self.flatness,
            self.mainlobe_dev_db,
            self.max_null_dbm,
        ]
    }

    fn from_report(
        report: &MetricsReport,
        out: &SchemeOutput,
        head: (usize, f64, Scheme, usize, u64),
    ) -> Self {
        let (point, value, scheme, trial, seed) = head;
        TrialMetrics {
            point,
            value,
            scheme,
            trial,
            seed,
            se: report.se,
            radar_sinr_db: report.radar_sinr_db(),
            iml_dbm: report.iml,
            intercepted_power_w: report.p_intercept_inputs.0,
            flatness: report.p_intercept_inputs.1,
            mainlobe_dev_db: report.mainlobe_dev_db,
            max_null_dbm: report.max_null_dbm,
            converged: out.converged,
            restored: out.restored,
            iterations: out.trace.len(),
            factorization_residual: out.factorization_residual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

/// Trial aggregate of one (point, scheme).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointAggregate {
    pub point: usize,
    pub value: f64,
    pub scheme: Scheme,
    pub count: usize,
    pub metrics: BTreeMap<String, Stat>,
}

/// Solver log of trial 0 at one (point, scheme).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub point: usize,
    pub scheme: Scheme,
    pub trace: ConvergenceTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub spec: ExperimentSpec,
    pub aggregates: Vec<PointAggregate>,
    /// Ordered by (point, trial, scheme).
    pub trials: Vec<TrialMetrics>,
    pub traces: Vec<TraceRecord>,
    /// Not part of any CSV output.
    pub wall_clock_s: f64,
}

impl RunRecord {
    pub fn aggregate(&self, point: usize, scheme: Scheme) -> Option<&PointAggregate> {
        self.aggregates
            .iter()
            .find(|a| a.point == point && a.scheme == scheme)
    }

    /// Per-trial values of one metric at one (point, scheme), in trial order.
    pub fn series(&self, point: usize, scheme: Scheme, metric: &str) -> Vec<f64> {
        let idx = METRIC_NAMES
            .iter()
            .position(|m| *m == metric)
            .expect("known metric name");
        self.trials
            .iter()
            .filter(|t| t.point == point && t.scheme == scheme)
            .map(|t| t.values()[idx])
            .collect()
    }
}

struct TrialResult {
    metrics: Vec<TrialMetrics>,
    traces: Vec<ConvergenceTrace>,
}

fn run_trial(spec: &ExperimentSpec, point: usize, value: f64, trial: usize) -> Result<TrialResult> {
    let seeds = TrialSeeds::derive(spec.seed, trial);
    let wrap = |e: Error| Error::TrialFailed {
        trial,
        seed: spec.seed,
        point: value,
        source: Box::new(e),
    };
    let inst = instance(spec, value, seeds).map_err(wrap)?;
    let mut metrics = Vec::with_capacity(spec.schemes.len());
    let mut traces = Vec::with_capacity(spec.schemes.len());
    for &scheme in &spec.schemes {
        let out =
            run_scheme(scheme, &inst.scenario, &inst.constraints, &inst.solver).map_err(wrap)?;
        let report =
            MetricsReport::evaluate(&out.bf, &inst.scenario, &inst.constraints).map_err(wrap)?;
        metrics.push(TrialMetrics::from_report(
            &report,
            &out,
            (point, value, scheme, trial, seeds.scenario),
        ));
        traces.push(out.trace);
    }
    Ok(TrialResult { metrics, traces })
}

/// Run every (point, trial) in parallel and reduce in trial order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunRecord> {
    spec.validate()?;
    let start = Instant::now();
    let points = spec.points();
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let results: Vec<Result<TrialResult>> = jobs
        .par_iter()
        .map(|&(p, t)| run_trial(spec, p, points[p], t))
        .collect();

    let mut trials = Vec::with_capacity(jobs.len() * spec.schemes.len());
    let mut traces = Vec::new();
    for (&(p, t), res) in jobs.iter().zip(results) {
        let res = res?;
        if t == 0 {
            for (&scheme, trace) in spec.schemes.iter().zip(res.traces) {
                traces.push(TraceRecord {
                    point: p,
                    scheme,
                    trace,
                });
            }
        }
        trials.extend(res.metrics);
    }

    let mut aggregates = Vec::new();
    for (p, &value) in points.iter().enumerate() {
        for &scheme in &spec.schemes {
            let rows: Vec<&TrialMetrics> = trials
                .iter()
                .filter(|t| t.point == p && t.scheme == scheme)
                .collect();
            let mut metrics = BTreeMap::new();
            for (i, name) in METRIC_NAMES.iter().enumerate() {
                let xs: Vec<f64> = rows.iter().map(|r| r.values()[i]).collect();
                let (mean, std) = mean_std(&xs);
                metrics.insert((*name).to_string(), Stat { mean, std });
            }
            aggregates.push(PointAggregate {
                point: p,
                value,
                scheme,
                count: rows.len(),
                metrics,
            });
        }
    }
    Ok(RunRecord {
        spec: spec.clone(),
        aggregates,
        trials,
        traces,
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aliases_parse() {
        assert_eq!("power".parse::<SweepAxis>().unwrap(), SweepAxis::PowerDbm);
        assert_eq!("N_RF".parse::<SweepAxis>().unwrap(), SweepAxis::RfChains);
        assert_eq!(
            "csi-error".parse::<SweepAxis>().unwrap(),
            SweepAxis::CsiError
        );
        assert!("bogus".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn trial_seeds_are_distinct_and_stable() {
        let a = TrialSeeds::derive(7, 0);
        assert_eq!(a, TrialSeeds::derive(7, 0));
        assert_ne!(a, TrialSeeds::derive(7, 1));
        assert_ne!(a, TrialSeeds::derive(8, 0));
        assert_ne!(a.scenario, a.solver);
    }

    #[test]
    fn validation_rejects_bad_sweeps() {
        let mut spec = ExperimentSpec {
            sweep: Some(Sweep {
                axis: SweepAxis::PowerDbm,
                values: vec![30.0, 26.0],
            }),
            ..Default::default()
        };
        assert!(spec.validate().is_err());
        spec.sweep = Some(Sweep {
            axis: SweepAxis::RfChains,
            values: vec![1.5],
        });
        assert!(spec.validate().is_err());
        spec.sweep = Some(Sweep {
            axis: SweepAxis::ZetaDbm,
            values: vec![f64::NAN],
        });
        assert!(spec.validate().is_err());
        spec.sweep = None;
        spec.trials = 0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn toml_round_trip_is_exact() {
        let mut spec = ExperimentSpec {
            sweep: Some(Sweep {
                axis: SweepAxis::EtaDbm,
                values: vec![18.0, 22.1, 26.000000000000004],
            }),
            ..Default::default()
        };
        spec.solver.rho = [0.1, 0.2, 0.30000000000000004, 1e-7];
        spec.schemes = vec![Scheme::Proposed, Scheme::TsHbf];
        let text = spec.to_toml_string().unwrap();
        let back = ExperimentSpec::from_toml_str(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.to_toml_string().unwrap(), text);
    }

    #[test]
    fn sweep_point_reaches_the_instance() {
        let mut spec = ExperimentSpec {
            sweep: Some(Sweep {
                axis: SweepAxis::RfChains,
                values: vec![3.0],
            }),
            ..Default::default()
        };
        let inst = instance(&spec, 3.0, TrialSeeds::derive(0, 0)).unwrap();
        assert_eq!(inst.scenario.system.rf_chains, 3);
        spec.sweep = Some(Sweep {
            axis: SweepAxis::PowerDbm,
            values: vec![27.0],
        });
        let inst = instance(&spec, 27.0, TrialSeeds::derive(0, 0)).unwrap();
        assert!(inst
            .constraints
            .power_k
            .iter()
            .all(|p| (p - 0.501187).abs() < 1e-6));
    }

    #[test]
    fn csi_error_keeps_the_truth() {
        let spec = ExperimentSpec {
            sweep: Some(Sweep {
                axis: SweepAxis::CsiError,
                values: vec![0.1],
            }),
            ..Default::default()
        };
        let inst = instance(&spec, 0.1, TrialSeeds::derive(0, 0)).unwrap();
        let clean = instance(
            &ExperimentSpec::default(),
            f64::NAN,
            TrialSeeds::derive(0, 0),
        )
        .unwrap();
        assert_eq!(inst.scenario.ground_truth(), &clean.scenario.channels);
        assert_ne!(inst.scenario.channels, clean.scenario.channels);
    }
}
