//! Physical-layer model: system scalars, array/sampling constructions and
//! random scenario generation.

mod config;
mod constraints;
mod scenario;

pub use config::{OfdmSystemConfig, Profile};
pub use constraints::{ConstraintSpec, DesignConstraints};
pub use scenario::{multipath_channel, Scenario, ScenarioSpec};

use std::f64::consts::PI;

use crate::numeric::cis;
use crate::{CMatrix, CVector, Error, Result};

/// Space-frequency steering vector of a uniform linear array.
///
/// Entry `m` (zero based) is `exp(j 2 pi f m d sin(theta) / v) / sqrt(count)`.
pub fn steering_vector(
    theta_deg: f64,
    f: f64,
    count: usize,
    cfg: &OfdmSystemConfig,
) -> Result<CVector> {
    if !theta_deg.is_finite() || !f.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "steering vector needs finite angle and frequency, got theta={theta_deg}, f={f}"
        )));
    }
    if count == 0 || f <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "steering vector needs count >= 1 and f > 0, got count={count}, f={f}"
        )));
    }
    Ok(steering_unchecked(theta_deg, f, count, cfg))
}

pub(crate) fn steering_unchecked(
    theta_deg: f64,
    f: f64,
    count: usize,
    cfg: &OfdmSystemConfig,
) -> CVector {
    let scale = 1.0 / (count as f64).sqrt();
    let step =
        2.0 * PI * f * cfg.element_spacing * theta_deg.to_radians().sin() / cfg.propagation_speed;
    CVector::from_fn(count, |m, _| cis(step * m as f64) * scale)
}

/// DFT matrix with entry `(i, j) = exp(-j 2 pi i j / n)` (zero based).
pub fn fft_matrix(n: usize) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("fft_matrix needs n >= 1".into()));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        // reduce the exponent modulo n first so large sizes keep full precision
        let e = (i * j) % n;
        cis(-2.0 * PI * e as f64 / n as f64)
    }))
}

/// Sampling vector of a tone at `f_k` over the `N` intercept samples:
/// entry `n` is `exp(j 2 pi f_k n T_s)`.
pub fn tone_vector(f_k: f64, cfg: &OfdmSystemConfig) -> CVector {
    let ts = cfg.sampling_period();
    CVector::from_fn(cfg.intercept_samples, |n, _| {
        cis(2.0 * PI * f_k * n as f64 * ts)
    })
}

/// Tone matrix `D = [d(f_1), ..., d(f_K)]` (N x K).
pub fn tone_matrix(cfg: &OfdmSystemConfig) -> CMatrix {
    let freqs = cfg.subcarrier_freqs();
    let mut d = CMatrix::zeros(cfg.intercept_samples, freqs.len());
    for (k, f) in freqs.iter().enumerate() {
        d.set_column(k, &tone_vector(*f, cfg));
    }
    d
}

/// White complex Gaussian noise, `CN(0, sigma2 I_n)`.
pub(crate) fn scenario_noise(n: usize, sigma2: f64, rng: &mut impl rand::Rng) -> CVector {
    CVector::from_fn(n, |_, _| scenario::complex_gaussian(rng, sigma2))
}
