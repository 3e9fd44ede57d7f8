#![allow(dead_code)]

use lpi_isac::harness::{instance, ExperimentSpec, TrialInstance, TrialSeeds};
use lpi_isac::signal_model::Profile;
use lpi_isac::solver::{initial_beamformer, SolverState, SteeringBank};
use lpi_isac::{AnalogBeamformer, CMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn desk_spec() -> ExperimentSpec {
    ExperimentSpec::for_profile(Profile::Desk)
}

pub fn desk_instance(trial: usize) -> TrialInstance {
    let spec = desk_spec();
    instance(&spec, f64::NAN, TrialSeeds::derive(spec.seed, trial)).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
        )
    })
}

/// Solver state of a desk instance with every copy and dual drawn at random.
pub fn random_state(inst: &TrialInstance, seed: u64) -> (SolverState, SteeringBank) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sys = &inst.scenario.system;
    let analog = AnalogBeamformer::random_phases(sys.tx_antennas, sys.rf_chains, seed);
    let bf = initial_beamformer(analog, &inst.scenario, &inst.constraints.power_k).unwrap();
    let c = &inst.constraints;
    let rho = [
        rng.random_range(0.5..5.0),
        rng.random_range(0.5..5.0),
        rng.random_range(0.5..5.0),
        rng.random_range(0.5..5.0),
    ];
    let mut state = SolverState::from_beamformer(bf, c.mainlobe_count(), c.null_count(), rho);
    let (mt, u) = (sys.tx_antennas, inst.scenario.users);
    let mut draw = |m: &mut CMatrix, scale: f64| *m = random_matrix(mt, u, scale, &mut rng);
    for k in 0..state.y.len() {
        draw(&mut state.y[k], 0.5);
        draw(&mut state.d1[k], 0.1);
        for m in state.v[k]
            .iter_mut()
            .chain(state.g[k].iter_mut())
            .chain(state.t[k].iter_mut())
        {
            draw(m, 0.5);
        }
        for m in state.d2[k]
            .iter_mut()
            .chain(state.d3[k].iter_mut())
            .chain(state.d4[k].iter_mut())
        {
            draw(m, 0.1);
        }
    }
    let bank = SteeringBank::new(&inst.scenario, &inst.constraints);
    (state, bank)
}
