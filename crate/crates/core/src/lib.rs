//! Sensing-security-aware hybrid beamforming for wideband OFDM integrated
//! sensing and communication.
//!
//! The crate is organised in five layers:
//!
//! * [`signal_model`]: system configuration, steering vectors, FFT/tone
//!   matrices and random scenario generation.
//! * [`cyclo`]: cyclostationary analysis of the signal collected by a
//!   passive reconnaissance receiver.
//! * [`metrics`]: spectral efficiency, radar SINR, transmit spectrum and
//!   integrated mainlobe level.
//! * [`solver`]: WMMSE + augmented-Lagrangian alternating optimisation of
//!   the hybrid precoder.
//! * [`harness`]: benchmark schemes, Monte-Carlo experiments and figure data.

// `!(x > 0.0)` rejects NaN on purpose; index loops walk parallel per-subcarrier arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cyclo;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod numeric;
pub mod signal_model;
pub mod solver;

pub use error::{Error, Result};
pub use metrics::{AnalogBeamformer, BeamformerPair, MetricsReport};
pub use signal_model::{DesignConstraints, OfdmSystemConfig, Profile, Scenario, ScenarioSpec};
pub use solver::{ConvergenceTrace, Solution, SolverConfig, SolverState, WmmseAux};

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
