//! WMMSE reformulation and augmented-Lagrangian alternating optimisation of
//! the hybrid precoder.

pub mod blocks;
mod restore;
mod trace;

pub use blocks::{
    advance_penalties, residuals, update_duals, update_fk, update_frf, update_g, update_t,
    update_v, update_y,
};
pub use restore::restore_feasibility;
pub use trace::{ConvergenceTrace, TraceRow};

use serde::{Deserialize, Serialize};

use crate::metrics::{null_levels, weighted_mainlobe_levels, AnalogBeamformer, BeamformerPair};
use crate::numeric::{fro2, proj_norm2};
use crate::signal_model::{steering_unchecked, DesignConstraints, Scenario};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Iteration parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Initial penalties `rho_1..rho_4`.
    pub rho: [f64; 4],
    /// Per-iteration penalty growth factor (1 keeps the penalties fixed).
    pub rho_growth: f64,
    /// Penalty cap.
    pub rho_max: f64,
    pub max_iters: usize,
    pub tol_residual: f64,
    pub tol_objective: f64,
    pub bisection_tol: f64,
    pub ccd_sweeps: usize,
    /// Least-squares / phase-descent alternations per outer iteration.
    pub analog_rounds: usize,
    /// Finish with a feasibility restoration of the analog phases and
    /// digital precoders.
    pub restore: bool,
    /// Seed of the random analog initialisation.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: [2.0, 5.0, 5.0, 2.0],
            rho_growth: 1.02,
            rho_max: 1e8,
            max_iters: 1000,
            tol_residual: 1e-5,
            tol_objective: 1e-6,
            bisection_tol: 1e-10,
            ccd_sweeps: 5,
            analog_rounds: 1,
            restore: true,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rho.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidArgument("penalties must be positive".into()));
        }
        if !(self.rho_growth >= 1.0) || !(self.rho_max > 0.0) {
            return Err(Error::InvalidArgument(
                "rho_growth must be >= 1 and rho_max > 0".into(),
            ));
        }
        if self.max_iters == 0 || self.ccd_sweeps == 0 || self.analog_rounds == 0 {
            return Err(Error::InvalidArgument(
                "max_iters, ccd_sweeps and analog_rounds must be >= 1".into(),
            ));
        }
        for t in [self.tol_residual, self.tol_objective, self.bisection_tol] {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument("tolerances must be positive".into()));
            }
        }
        Ok(())
    }
}

/// MMSE equalisers and weights, indexed `[subcarrier][user]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WmmseAux {
    pub kappa: Vec<Vec<C64>>,
    pub omega: Vec<Vec<f64>>,
}

/// MSE of user `u` for equaliser `kappa`.
pub fn mse(h: &CVector, x: &CMatrix, u: usize, kappa: C64, sigma2: f64) -> f64 {
    let row = h.adjoint() * x;
    let mut e = (C64::new(1.0, 0.0) - kappa * row[u]).norm_sqr() + kappa.norm_sqr() * sigma2;
    for (i, z) in row.iter().enumerate() {
        if i != u {
            e += kappa.norm_sqr() * z.norm_sqr();
        }
    }
    e
}

fn wmmse_from_precoders(
    xs: &[CMatrix],
    channels: &[Vec<CVector>],
    sigma2: f64,
) -> Result<WmmseAux> {
    let mut kappa = Vec::with_capacity(xs.len());
    let mut omega = Vec::with_capacity(xs.len());
    for (x, hs) in xs.iter().zip(channels) {
        let mut kk = Vec::with_capacity(hs.len());
        let mut ww = Vec::with_capacity(hs.len());
        for (u, h) in hs.iter().enumerate() {
            let row = h.adjoint() * x;
            let q: f64 = row.iter().map(|z| z.norm_sqr()).sum::<f64>() + sigma2;
            if !(q > 0.0) {
                return Err(Error::DivideByZero(
                    "received power and noise are both zero".into(),
                ));
            }
            let k = row[u].conj() / q;
            let e = 1.0 - row[u].norm_sqr() / q;
            // e = (interference + noise) / q, computed directly when it would cancel
            let e = if e > 1e-12 {
                e
            } else {
                (q - row[u].norm_sqr()).max(f64::MIN_POSITIVE) / q
            };
            kk.push(k);
            ww.push(1.0 / e);
        }
        kappa.push(kk);
        omega.push(ww);
    }
    Ok(WmmseAux { kappa, omega })
}

/// Optimal equalisers and weights for the current precoders (design CSI).
pub fn wmmse_aux_update(bf: &BeamformerPair, scenario: &Scenario) -> Result<WmmseAux> {
    bf.check_against(
        scenario.system.tx_antennas,
        scenario.subcarriers(),
        scenario.users,
    )?;
    wmmse_from_precoders(&bf.precoders(), &scenario.channels, scenario.sigma2_c)
}

/// `(1/K) sum (log2 omega - omega E + 1)` at the given auxiliaries.
pub fn surrogate_se(aux: &WmmseAux, xs: &[CMatrix], channels: &[Vec<CVector>], sigma2: f64) -> f64 {
    let mut total = 0.0;
    for (k, x) in xs.iter().enumerate() {
        for (u, h) in channels[k].iter().enumerate() {
            let w = aux.omega[k][u];
            total += w.log2() - w * mse(h, x, u, aux.kappa[k][u], sigma2) + 1.0;
        }
    }
    total / xs.len() as f64
}

/// Objective of the T block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    /// Weighted sum MSE (sum-rate surrogate).
    SumRate,
    /// Mainlobe energy reward; ignores the channels.
    MainlobeGain,
}

/// How the mainlobe constraint is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MainlobeRule {
    Equality,
    Floor,
    Off,
}

/// Which terms and constraints a solve carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub objective: Objective,
    pub mainlobe: MainlobeRule,
    pub nulling: bool,
}

impl ProblemSpec {
    /// Sum rate under mainlobe equality, nulling and power constraints.
    pub fn sensing_secure() -> Self {
        ProblemSpec {
            objective: Objective::SumRate,
            mainlobe: MainlobeRule::Equality,
            nulling: true,
        }
    }

    pub fn comm_only() -> Self {
        ProblemSpec {
            objective: Objective::SumRate,
            mainlobe: MainlobeRule::Off,
            nulling: false,
        }
    }

    pub fn radar_only() -> Self {
        ProblemSpec {
            objective: Objective::MainlobeGain,
            mainlobe: MainlobeRule::Floor,
            nulling: true,
        }
    }
}

/// Unit-norm steering vectors on the constraint grids, `[k][m]` / `[k][s]`.
#[derive(Debug, Clone)]
pub struct SteeringBank {
    pub mainlobe: Vec<Vec<CVector>>,
    pub nulls: Vec<Vec<CVector>>,
}

impl SteeringBank {
    pub fn new(scenario: &Scenario, constraints: &DesignConstraints) -> Self {
        let sys = &scenario.system;
        let build = |grid: &[f64]| -> Vec<Vec<CVector>> {
            sys.subcarrier_freqs()
                .iter()
                .map(|f| {
                    grid.iter()
                        .map(|t| steering_unchecked(*t, *f, sys.tx_antennas, sys))
                        .collect()
                })
                .collect()
        };
        SteeringBank {
            mainlobe: build(&constraints.mainlobe_grid),
            nulls: build(&constraints.clutter_grid),
        }
    }
}

/// Primal copies, scaled duals, penalties and the current beamformer.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub y: Vec<CMatrix>,
    pub v: Vec<Vec<CMatrix>>,
    pub g: Vec<Vec<CMatrix>>,
    pub t: Vec<Vec<CMatrix>>,
    pub d1: Vec<CMatrix>,
    pub d2: Vec<Vec<CMatrix>>,
    pub d3: Vec<Vec<CMatrix>>,
    pub d4: Vec<Vec<CMatrix>>,
    pub rho: [f64; 4],
    pub bf: BeamformerPair,
    pub iteration: usize,
}

impl SolverState {
    /// Copies initialised at `X_k = F_RF F_k`, duals at zero. `mainlobe` and
    /// `nulls` are the number of copies per subcarrier.
    pub fn from_beamformer(
        bf: BeamformerPair,
        mainlobe: usize,
        nulls: usize,
        rho: [f64; 4],
    ) -> Self {
        let xs = bf.precoders();
        let users = bf.users();
        let zero = |x: &CMatrix| CMatrix::zeros(x.nrows(), x.ncols());
        SolverState {
            y: xs.clone(),
            v: xs.iter().map(|x| vec![x.clone(); mainlobe]).collect(),
            g: xs.iter().map(|x| vec![x.clone(); nulls]).collect(),
            t: xs.iter().map(|x| vec![x.clone(); users]).collect(),
            d1: xs.iter().map(zero).collect(),
            d2: xs.iter().map(|x| vec![zero(x); mainlobe]).collect(),
            d3: xs.iter().map(|x| vec![zero(x); nulls]).collect(),
            d4: xs.iter().map(|x| vec![zero(x); users]).collect(),
            rho,
            bf,
            iteration: 0,
        }
    }

    fn all_finite(&self) -> bool {
        let ok = |m: &CMatrix| m.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        self.y.iter().all(ok)
            && self.v.iter().flatten().all(ok)
            && self.g.iter().flatten().all(ok)
            && self.t.iter().flatten().all(ok)
            && self.bf.digital.iter().all(ok)
            && match &self.bf.analog {
                AnalogBeamformer::Phases(p) => p.iter().all(|x| x.is_finite()),
                AnalogBeamformer::Unconstrained(m) => ok(m),
            }
    }
}

/// Matched-filter start: `F_k = F_RF^H H_k^H`, scaled to the power budget.
pub fn initial_beamformer(
    analog: AnalogBeamformer,
    scenario: &Scenario,
    power_k: &[f64],
) -> Result<BeamformerPair> {
    let f = analog.matrix();
    let mt = scenario.system.tx_antennas;
    let digital = scenario
        .channels
        .iter()
        .enumerate()
        .map(|(k, hs)| {
            let h = CMatrix::from_fn(mt, hs.len(), |i, u| hs[u][i]);
            let fk = f.adjoint() * h;
            let x2 = fro2(&(&f * &fk));
            if x2 > 0.0 {
                fk * C64::new((power_k[k] / x2).sqrt(), 0.0)
            } else {
                fk
            }
        })
        .collect();
    BeamformerPair::new(analog, digital)
}

/// `sum_k sum_u omega E(T) + sum rho/2 ||copy - Y + D||^2` (scaled form,
/// without the constant dual-norm terms), the function every block
/// minimises over its own variables.
pub fn augmented_lagrangian(
    state: &SolverState,
    aux: &WmmseAux,
    scenario: &Scenario,
    objective: Objective,
    bank: &SteeringBank,
) -> f64 {
    let xs = state.bf.precoders();
    let [r1, r2, r3, r4] = state.rho;
    let mut total = 0.0;
    for k in 0..state.y.len() {
        let y = &state.y[k];
        total += 0.5 * r1 * fro2(&(y - &xs[k] + &state.d1[k]));
        for (v, d) in state.v[k].iter().zip(&state.d2[k]) {
            total += 0.5 * r2 * fro2(&(v - y + d));
        }
        for (g, d) in state.g[k].iter().zip(&state.d3[k]) {
            total += 0.5 * r3 * fro2(&(g - y + d));
        }
        for (u, (t, d)) in state.t[k].iter().zip(&state.d4[k]).enumerate() {
            total += 0.5 * r4 * fro2(&(t - y + d));
            total += match objective {
                Objective::SumRate => {
                    aux.omega[k][u]
                        * mse(
                            &scenario.channels[k][u],
                            t,
                            u,
                            aux.kappa[k][u],
                            scenario.sigma2_c,
                        )
                }
                Objective::MainlobeGain => {
                    let lmax = gain_lambda_max(&bank.mainlobe[k]);
                    let gamma_over_u = r4 / (4.0 * lmax);
                    -gamma_over_u
                        * bank.mainlobe[k]
                            .iter()
                            .map(|a| proj_norm2(a, t))
                            .sum::<f64>()
                }
            };
        }
    }
    total
}

fn gain_lambda_max(vs: &[CVector]) -> f64 {
    let mt = vs.first().map(|a| a.len()).unwrap_or(0);
    let mut r = CMatrix::zeros(mt, mt);
    for a in vs {
        r += a * a.adjoint();
    }
    r.symmetric_eigenvalues().max()
}

/// Designed beamformer and its iteration log.
#[derive(Debug, Clone)]
pub struct Solution {
    pub bf: BeamformerPair,
    pub trace: ConvergenceTrace,
    /// Both stopping tests were met before `max_iters`.
    pub converged: bool,
    /// The final feasibility restoration converged on every subcarrier.
    pub restored: bool,
}

/// Reject constraint sets that no precoder can meet.
pub fn feasibility_check(constraints: &DesignConstraints, problem: &ProblemSpec) -> Result<()> {
    if problem.mainlobe != MainlobeRule::Off {
        for (k, (w, p)) in constraints
            .varpi_k
            .iter()
            .zip(&constraints.power_k)
            .enumerate()
        {
            if constraints.eta / w > *p {
                return Err(Error::Infeasible(format!(
                    "subcarrier {k}: mainlobe level eta/varpi = {:.3e} W exceeds the power budget {:.3e} W",
                    constraints.eta / w,
                    p
                )));
            }
        }
    }
    Ok(())
}

/// Run the alternating optimisation from a given beamformer.
pub fn solve_from(
    scenario: &Scenario,
    constraints: &DesignConstraints,
    cfg: &SolverConfig,
    problem: &ProblemSpec,
    start: BeamformerPair,
) -> Result<Solution> {
    scenario.validate()?;
    constraints.validate(scenario.subcarriers())?;
    cfg.validate()?;
    feasibility_check(constraints, problem)?;
    let sys = &scenario.system;
    start.check_against(sys.tx_antennas, sys.subcarriers, scenario.users)?;

    let bank = SteeringBank::new(scenario, constraints);
    let m_copies = if problem.mainlobe == MainlobeRule::Off {
        0
    } else {
        constraints.mainlobe_count()
    };
    let s_copies = if problem.nulling {
        constraints.null_count()
    } else {
        0
    };
    let mut state = SolverState::from_beamformer(start, m_copies, s_copies, cfg.rho);
    let mut trace = ConvergenceTrace::default();
    let mut converged = false;

    for it in 1..=cfg.max_iters {
        state.iteration = it;
        let aux = wmmse_aux_update(&state.bf, scenario)?;
        update_y(&mut state, constraints, cfg.bisection_tol)?;
        update_v(&mut state, &bank, constraints, problem.mainlobe);
        update_g(&mut state, &bank, constraints, cfg.bisection_tol)?;
        match problem.objective {
            Objective::SumRate => update_t(&mut state, &aux, scenario),
            Objective::MainlobeGain => blocks::update_t_gain(&mut state, &bank)?,
        }
        for _ in 0..cfg.analog_rounds {
            update_fk(&mut state);
            update_frf(&mut state, cfg.ccd_sweeps);
        }
        if !state.all_finite() {
            return Err(Error::NonFinite {
                iteration: it,
                block: "primal update",
            });
        }
        update_duals(&mut state);
        let res = residuals(&state);

        let xs = state.bf.precoders();
        let objective = match problem.objective {
            Objective::SumRate => {
                let aux_now = wmmse_from_precoders(&xs, &scenario.channels, scenario.sigma2_c)?;
                surrogate_se(&aux_now, &xs, &scenario.channels, scenario.sigma2_c)
            }
            Objective::MainlobeGain => crate::metrics::iml_linear(&xs, constraints, sys),
        };
        let ml = weighted_mainlobe_levels(&xs, constraints, sys);
        let nl = null_levels(&xs, constraints, sys);
        let row = TraceRow::new(it, objective, res, &ml, &nl, state.rho);
        if !row.is_finite() {
            return Err(Error::NonFinite {
                iteration: it,
                block: "trace",
            });
        }
        trace.rows.push(row);

        if res.iter().all(|r| *r < cfg.tol_residual) && trace.objective_stable(5, cfg.tol_objective)
        {
            converged = true;
            break;
        }
        advance_penalties(&mut state, cfg.rho_growth, cfg.rho_max);
    }
    let mut bf = state.bf;
    let restored = !cfg.restore
        || restore_feasibility(
            &mut bf,
            &bank,
            constraints,
            problem.mainlobe,
            problem.nulling,
        );
    Ok(Solution {
        bf,
        trace,
        converged,
        restored,
    })
}

/// Sensing-secure hybrid design from the matched-filter start.
pub fn solve(
    scenario: &Scenario,
    constraints: &DesignConstraints,
    cfg: &SolverConfig,
) -> Result<Solution> {
    solve_problem(scenario, constraints, cfg, &ProblemSpec::sensing_secure())
}

/// Hybrid design of an arbitrary problem variant from a random-phase analog start.
pub fn solve_problem(
    scenario: &Scenario,
    constraints: &DesignConstraints,
    cfg: &SolverConfig,
    problem: &ProblemSpec,
) -> Result<Solution> {
    scenario.validate()?;
    let sys = &scenario.system;
    let analog = AnalogBeamformer::random_phases(sys.tx_antennas, sys.rf_chains, cfg.seed);
    let start = initial_beamformer(analog, scenario, &constraints.power_k)?;
    solve_from(scenario, constraints, cfg, problem, start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{instance, ExperimentSpec, TrialSeeds};
    use crate::signal_model::Profile;

    #[test]
    fn config_validation_rejects_bad_values() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = [
            SolverConfig {
                rho: [1.0, 0.0, 1.0, 1.0],
                ..Default::default()
            },
            SolverConfig {
                rho_growth: 0.9,
                ..Default::default()
            },
            SolverConfig {
                max_iters: 0,
                ..Default::default()
            },
            SolverConfig {
                tol_residual: 0.0,
                ..Default::default()
            },
            SolverConfig {
                bisection_tol: f64::NAN,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn matched_filter_start_meets_the_budget() {
        let spec = ExperimentSpec::for_profile(Profile::Desk);
        let inst = instance(&spec, f64::NAN, TrialSeeds::derive(0, 0)).unwrap();
        let analog = AnalogBeamformer::random_phases(8, 2, 1);
        let bf = initial_beamformer(analog, &inst.scenario, &inst.constraints.power_k).unwrap();
        for (x, p) in bf.precoders().iter().zip(&inst.constraints.power_k) {
            assert!((fro2(x) - p).abs() < 1e-12 * p);
        }
    }

    #[test]
    fn feasibility_check_ignores_mainlobe_when_off() {
        let spec = ExperimentSpec::for_profile(Profile::Desk);
        let inst = instance(&spec, f64::NAN, TrialSeeds::derive(0, 0)).unwrap();
        let mut c = inst.constraints.clone();
        c.eta = 10.0 * c.power_k[0];
        assert!(feasibility_check(&c, &ProblemSpec::sensing_secure())
            .unwrap_err()
            .is_infeasible());
        assert!(feasibility_check(&c, &ProblemSpec::comm_only()).is_ok());
    }

    #[test]
    fn mse_at_the_mmse_equalizer_is_one_over_one_plus_sinr() {
        let spec = ExperimentSpec::for_profile(Profile::Desk);
        let inst = instance(&spec, f64::NAN, TrialSeeds::derive(0, 2)).unwrap();
        let sc = &inst.scenario;
        let bf = initial_beamformer(
            AnalogBeamformer::random_phases(8, 2, 2),
            sc,
            &inst.constraints.power_k,
        )
        .unwrap();
        let aux = wmmse_aux_update(&bf, sc).unwrap();
        let x = bf.precoder(0);
        let e = mse(&sc.channels[0][1], &x, 1, aux.kappa[0][1], sc.sigma2_c);
        let sinr = crate::metrics::comm_sinr(&bf, sc, 0, 1).unwrap();
        assert!((e * (1.0 + sinr) - 1.0).abs() < 1e-10);
        assert!((aux.omega[0][1] - 1.0 / e).abs() < 1e-9 * aux.omega[0][1]);
    }
}
