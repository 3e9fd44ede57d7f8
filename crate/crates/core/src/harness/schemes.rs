//! Benchmark beamforming schemes built on the common solver.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::metrics::{AnalogBeamformer, BeamformerPair};
use crate::numeric::{cis, fro2};
use crate::signal_model::{DesignConstraints, Scenario};
use crate::solver::blocks::{ccd_phases, factorization_objective, least_squares_digital};
use crate::solver::{initial_beamformer, solve_from, ConvergenceTrace, ProblemSpec, SolverConfig};
use crate::{CMatrix, Error, Result, C64};

/// Alternations of the two-stage factorization.
const TS_MAX_ROUNDS: usize = 500;
/// Relative objective change that ends the factorization.
const TS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "proposed-hbf")]
    Proposed,
    #[serde(rename = "comm-only-hbf")]
    CommOnly,
    #[serde(rename = "radar-only-hbf")]
    RadarOnly,
    #[serde(rename = "fd-isac")]
    FdIsac,
    #[serde(rename = "ts-hbf")]
    TsHbf,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Proposed,
        Scheme::CommOnly,
        Scheme::RadarOnly,
        Scheme::FdIsac,
        Scheme::TsHbf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed-hbf",
            Scheme::CommOnly => "comm-only-hbf",
            Scheme::RadarOnly => "radar-only-hbf",
            Scheme::FdIsac => "fd-isac",
            Scheme::TsHbf => "ts-hbf",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == key || sc.name().trim_end_matches("-hbf") == key)
            .ok_or_else(|| {
                let names: Vec<_> = Scheme::ALL.iter().map(|s| s.name()).collect();
                Error::InvalidArgument(format!(
                    "unknown scheme `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// A designed beamformer plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct SchemeOutput {
    pub bf: BeamformerPair,
    pub trace: ConvergenceTrace,
    pub converged: bool,
    pub restored: bool,
    /// Relative residual `sum ||X_fd - F F_k||^2 / sum ||X_fd||^2` of the
    /// two-stage factorization, before power normalization.
    pub factorization_residual: Option<f64>,
}

/// Design a beamformer with the chosen scheme.
pub fn run_scheme(
    scheme: Scheme,
    scenario: &Scenario,
    constraints: &DesignConstraints,
    cfg: &SolverConfig,
) -> Result<SchemeOutput> {
    match scheme {
        Scheme::Proposed => hybrid(scenario, constraints, cfg, &ProblemSpec::sensing_secure()),
        Scheme::CommOnly => hybrid(scenario, constraints, cfg, &ProblemSpec::comm_only()),
        Scheme::RadarOnly => hybrid(scenario, constraints, cfg, &ProblemSpec::radar_only()),
        Scheme::FdIsac => scheme_fd_isac(scenario, constraints, cfg),
        Scheme::TsHbf => scheme_ts_hbf(scenario, constraints, cfg),
    }
}

fn hybrid(
    scenario: &Scenario,
    constraints: &DesignConstraints,
    cfg: &SolverConfig,
    problem: &ProblemSpec,
) -> Result<SchemeOutput> {
    let sys = &scenario.system;
    let analog = AnalogBeamformer::random_phases(sys.tx_antennas, sys.rf_chains, cfg.seed);
    let start = initial_beamformer(analog, scenario, &constraints.power_k)?;
    let sol = solve_from(scenario, constraints, cfg, problem, start)?;
    Ok(SchemeOutput {
        bf: sol.bf,
        trace: sol.trace,
        converged: sol.converged,
        restored: sol.restored,
        factorization_residual: None,
    })
}

/// Fully digital upper bound: identity analog stage, no constant-modulus constraint.
pub fn scheme_fd_isac(
    scenario: &Scenario,
    constraints: &DesignConstraints,
    cfg: &SolverConfig,
) -> Result<SchemeOutput> {
    let analog = AnalogBeamformer::identity(scenario.system.tx_antennas);
    let start = initial_beamformer(analog, scenario, &constraints.power_k)?;
    let sol = solve_from(
        scenario,
        constraints,
        cfg,
        &ProblemSpec::sensing_secure(),
        start,
    )?;
    Ok(SchemeOutput {
        bf: sol.bf,
        trace: sol.trace,
        converged: sol.converged,
        restored: sol.restored,
        factorization_residual: None,
    })
}

/// Two-stage design: fully digital solve, then a phase-only factorization
/// with each subcarrier rescaled to its power budget. No constraint is
/// re-enforced after the factorization.
pub fn scheme_ts_hbf(
    scenario: &Scenario,
    constraints: &DesignConstraints,
    cfg: &SolverConfig,
) -> Result<SchemeOutput> {
    let fd = scheme_fd_isac(scenario, constraints, cfg)?;
    let targets = fd.bf.precoders();
    let sys = &scenario.system;
    let (bf, residual) = factorize(&targets, sys.rf_chains, cfg.seed, cfg.ccd_sweeps)?;
    let bf = normalize_power(bf, &constraints.power_k)?;
    Ok(SchemeOutput {
        bf,
        trace: fd.trace,
        converged: fd.converged,
        restored: fd.restored,
        factorization_residual: Some(residual),
    })
}

/// Alternate least squares on `F_k` and phase descent on `F` to minimise
/// `sum_k ||X_k - F F_k||^2`; returns the pair and the relative residual.
pub fn factorize(
    targets: &[CMatrix],
    rf_chains: usize,
    seed: u64,
    sweeps: usize,
) -> Result<(BeamformerPair, f64)> {
    let Some(first) = targets.first() else {
        return Err(Error::InvalidArgument("no precoders to factorize".into()));
    };
    let AnalogBeamformer::Phases(mut phases) =
        AnalogBeamformer::random_phases(first.nrows(), rf_chains, seed)
    else {
        return Err(Error::Internal(
            "random analog start is not phase-parametrized".into(),
        ));
    };
    let total: f64 = targets.iter().map(fro2).sum();
    let mut prev = f64::INFINITY;
    for _ in 0..TS_MAX_ROUNDS {
        let f = phases.map(cis);
        let digital: Vec<CMatrix> = targets
            .iter()
            .map(|x| least_squares_digital(&f, x))
            .collect();
        ccd_phases(&mut phases, targets, &digital, sweeps.max(1));
        let obj = factorization_objective(&phases.map(cis), targets, &digital);
        if (prev - obj).abs() <= TS_TOL * prev.max(f64::MIN_POSITIVE) {
            break;
        }
        prev = obj;
    }
    let f = phases.map(cis);
    let digital: Vec<CMatrix> = targets
        .iter()
        .map(|x| least_squares_digital(&f, x))
        .collect();
    let obj = factorization_objective(&f, targets, &digital);
    let residual = if total > 0.0 { obj / total } else { 0.0 };
    Ok((
        BeamformerPair::new(AnalogBeamformer::Phases(phases), digital)?,
        residual,
    ))
}

/// Scale every `F_k` so that `||F F_k||^2 = P_k`.
pub fn normalize_power(mut bf: BeamformerPair, power_k: &[f64]) -> Result<BeamformerPair> {
    if power_k.len() != bf.subcarriers() {
        return Err(Error::DimensionMismatch(format!(
            "{} power budgets for {} subcarriers",
            power_k.len(),
            bf.subcarriers()
        )));
    }
    let f = bf.analog.matrix();
    for (fk, p) in bf.digital.iter_mut().zip(power_k) {
        let e = fro2(&(&f * &*fk));
        if e > 0.0 {
            *fk *= C64::new((p / e).sqrt(), 0.0);
        }
    }
    Ok(bf)
}
