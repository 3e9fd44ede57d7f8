//! Performance functionals: communication SINR/SE, transmit spectrum,
//! radar SINR and integrated mainlobe level.

mod beamformer;

pub use beamformer::{AnalogBeamformer, BeamformerPair};

use serde::{Deserialize, Serialize};

use crate::cyclo;
use crate::numeric::{proj_norm2, w_to_dbm};
use crate::signal_model::{steering_unchecked, DesignConstraints, OfdmSystemConfig, Scenario};
use crate::{CMatrix, Error, Result};

/// Sentinel reported for levels that are zero (or below it).
pub const DBM_FLOOR: f64 = -120.0;

fn to_dbm_floored(p: f64) -> f64 {
    if p > 0.0 {
        w_to_dbm(p).max(DBM_FLOOR)
    } else {
        DBM_FLOOR
    }
}

fn check(bf: &BeamformerPair, scenario: &Scenario) -> Result<()> {
    bf.check_against(
        scenario.system.tx_antennas,
        scenario.subcarriers(),
        scenario.users,
    )
}

fn index_check(k: usize, kmax: usize, u: usize, umax: usize) -> Result<()> {
    if k >= kmax || u >= umax {
        return Err(Error::InvalidArgument(format!(
            "index (k={k}, u={u}) out of range (K={kmax}, U={umax})"
        )));
    }
    Ok(())
}

/// `|h^H X e_u|^2 / (sum_{i != u} |h^H X e_i|^2 + sigma2)`.
pub(crate) fn sinr_from_precoder(h: &crate::CVector, x: &CMatrix, u: usize, sigma2: f64) -> f64 {
    let row = h.adjoint() * x;
    let total: f64 = row.iter().map(|z| z.norm_sqr()).sum();
    let signal = row[u].norm_sqr();
    signal / (total - signal + sigma2)
}

/// Communication SINR of user `u` on subcarrier `k` (zero based), using the
/// ground-truth channels.
pub fn comm_sinr(bf: &BeamformerPair, scenario: &Scenario, k: usize, u: usize) -> Result<f64> {
    check(bf, scenario)?;
    index_check(k, scenario.subcarriers(), u, scenario.users)?;
    let h = &scenario.ground_truth()[k][u];
    Ok(sinr_from_precoder(h, &bf.precoder(k), u, scenario.sigma2_c))
}

pub(crate) fn se_from_precoders(
    xs: &[CMatrix],
    channels: &[Vec<crate::CVector>],
    sigma2: f64,
) -> f64 {
    let mut total = 0.0;
    for (x, hs) in xs.iter().zip(channels) {
        for (u, h) in hs.iter().enumerate() {
            total += (1.0 + sinr_from_precoder(h, x, u, sigma2)).log2();
        }
    }
    total / xs.len() as f64
}

/// Spectral efficiency `(1/K) sum_k sum_u log2(1 + SINR_{k,u})`.
pub fn spectral_efficiency(bf: &BeamformerPair, scenario: &Scenario) -> Result<f64> {
    check(bf, scenario)?;
    Ok(se_from_precoders(
        &bf.precoders(),
        scenario.ground_truth(),
        scenario.sigma2_c,
    ))
}

/// Transmit spectrum `||a_t^H(theta, f_k) X_k||_F^2`.
pub fn transmit_spectrum(
    bf: &BeamformerPair,
    cfg: &OfdmSystemConfig,
    theta_deg: f64,
    k: usize,
) -> Result<f64> {
    if k >= bf.subcarriers() {
        return Err(Error::InvalidArgument(format!(
            "subcarrier {k} out of range"
        )));
    }
    let a = crate::signal_model::steering_vector(
        theta_deg,
        cfg.subcarrier_freq(k),
        bf.tx_antennas(),
        cfg,
    )?;
    Ok(proj_norm2(&a, &bf.precoder(k)))
}

pub(crate) fn radar_sinr_precoder(x: &CMatrix, scenario: &Scenario, k: usize) -> f64 {
    let sys = &scenario.system;
    let f = sys.subcarrier_freq(k);
    let at_e = steering_unchecked(scenario.theta_e, f, sys.tx_antennas, sys);
    let ar_e = steering_unchecked(scenario.theta_e, f, sys.rx_antennas, sys);
    let signal = scenario.sigma2_e_k[k] * proj_norm2(&at_e, x);
    let mut clutter = 0.0;
    for (i, theta) in scenario.clutter_angles.iter().enumerate() {
        let at = steering_unchecked(*theta, f, sys.tx_antennas, sys);
        let ar = steering_unchecked(*theta, f, sys.rx_antennas, sys);
        let gain = ar_e.dotc(&ar).norm_sqr();
        clutter += scenario.sigma2_i_k[i][k] * gain * proj_norm2(&at, x);
    }
    signal / (clutter + scenario.sigma2_r)
}

/// Radar output SINR on subcarrier `k` with the receive filter fixed to
/// `a_r(theta_E, f_k)`.
pub fn radar_sinr(bf: &BeamformerPair, scenario: &Scenario, k: usize) -> Result<f64> {
    check(bf, scenario)?;
    index_check(k, scenario.subcarriers(), 0, 1)?;
    Ok(radar_sinr_precoder(&bf.precoder(k), scenario, k))
}

/// Weighted mainlobe levels `varpi_k ||a_t^H(theta_m, f_k) X_k||^2`, indexed `[k][m]`.
pub fn weighted_mainlobe_levels(
    xs: &[CMatrix],
    constraints: &DesignConstraints,
    cfg: &OfdmSystemConfig,
) -> Vec<Vec<f64>> {
    xs.iter()
        .enumerate()
        .map(|(k, x)| {
            let f = cfg.subcarrier_freq(k);
            constraints
                .mainlobe_grid
                .iter()
                .map(|t| {
                    constraints.varpi_k[k]
                        * proj_norm2(&steering_unchecked(*t, f, x.nrows(), cfg), x)
                })
                .collect()
        })
        .collect()
}

/// Nulling levels `||a_t^H(vartheta_s, f_k) X_k||^2`, indexed `[k][s]`.
pub fn null_levels(
    xs: &[CMatrix],
    constraints: &DesignConstraints,
    cfg: &OfdmSystemConfig,
) -> Vec<Vec<f64>> {
    xs.iter()
        .enumerate()
        .map(|(k, x)| {
            let f = cfg.subcarrier_freq(k);
            constraints
                .clutter_grid
                .iter()
                .map(|t| proj_norm2(&steering_unchecked(*t, f, x.nrows(), cfg), x))
                .collect()
        })
        .collect()
}

/// Integrated mainlobe level in dBm; a zero level reports [`DBM_FLOOR`].
pub fn iml(bf: &BeamformerPair, constraints: &DesignConstraints, cfg: &OfdmSystemConfig) -> f64 {
    to_dbm_floored(iml_linear(&bf.precoders(), constraints, cfg))
}

pub(crate) fn iml_linear(
    xs: &[CMatrix],
    constraints: &DesignConstraints,
    cfg: &OfdmSystemConfig,
) -> f64 {
    let mut total = 0.0;
    for (k, x) in xs.iter().enumerate() {
        let f = cfg.subcarrier_freq(k);
        for t in &constraints.mainlobe_grid {
            total += proj_norm2(&steering_unchecked(*t, f, x.nrows(), cfg), x);
        }
    }
    total
}

/// Transmit power map over an angle grid, `power[angle][k]` in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMap {
    pub angles_deg: Vec<f64>,
    pub freqs_hz: Vec<f64>,
    pub power: Vec<Vec<f64>>,
}

impl SpectrumMap {
    pub fn evaluate(
        bf: &BeamformerPair,
        cfg: &OfdmSystemConfig,
        angles_deg: &[f64],
    ) -> SpectrumMap {
        let xs = bf.precoders();
        let freqs = cfg.subcarrier_freqs();
        let power = angles_deg
            .iter()
            .map(|t| {
                xs.iter()
                    .zip(&freqs)
                    .map(|(x, f)| proj_norm2(&steering_unchecked(*t, *f, x.nrows(), cfg), x))
                    .collect()
            })
            .collect();
        SpectrumMap {
            angles_deg: angles_deg.to_vec(),
            freqs_hz: freqs,
            power,
        }
    }

    /// Uniform 1 degree grid over [-90, 90].
    pub fn default_angles() -> Vec<f64> {
        (-90..=90).map(f64::from).collect()
    }

    /// CSV rows `theta_deg,k,f_k_Hz,power_dBm` (k one based).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta_deg,k,f_k_Hz,power_dBm\n");
        for (a, row) in self.angles_deg.iter().zip(&self.power) {
            for (k, (f, p)) in self.freqs_hz.iter().zip(row).enumerate() {
                s.push_str(&format!("{a},{},{f},{}\n", k + 1, to_dbm_floored(*p)));
            }
        }
        s
    }
}

/// Everything reported for one designed beamformer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// bits/s/Hz
    pub se: f64,
    /// Linear radar SINR per subcarrier.
    pub sinr_radar_k: Vec<f64>,
    /// dBm
    pub iml: f64,
    /// Intercepted power (W) and flatness score of R_Xi.
    pub p_intercept_inputs: (f64, f64),
    /// Worst weighted mainlobe deviation from eta, in dB (signed, largest magnitude).
    pub mainlobe_dev_db: f64,
    /// Largest nulling level in dBm.
    pub max_null_dbm: f64,
    pub spectrum: SpectrumMap,
}

impl MetricsReport {
    pub fn evaluate(
        bf: &BeamformerPair,
        scenario: &Scenario,
        constraints: &DesignConstraints,
    ) -> Result<Self> {
        check(bf, scenario)?;
        let cfg = &scenario.system;
        let xs = bf.precoders();
        let se = se_from_precoders(&xs, scenario.ground_truth(), scenario.sigma2_c);
        let sinr_radar_k = xs
            .iter()
            .enumerate()
            .map(|(k, x)| radar_sinr_precoder(x, scenario, k))
            .collect();
        let p_e = cyclo::intercepted_power(bf, scenario)?;
        let flat = cyclo::flatness_r_xi(&cyclo::r_xi_matrix(
            &cyclo::intercept_gains(bf, scenario)?,
            cfg,
        )?)
        .unwrap_or(f64::NAN);
        let ml = weighted_mainlobe_levels(&xs, constraints, cfg);
        let mainlobe_dev_db = ml
            .iter()
            .flatten()
            .map(|v| 10.0 * (v / constraints.eta).log10())
            .fold(0.0f64, |acc, d| if d.abs() > acc.abs() { d } else { acc });
        let max_null = null_levels(&xs, constraints, cfg)
            .into_iter()
            .flatten()
            .fold(0.0, f64::max);
        Ok(MetricsReport {
            se,
            sinr_radar_k,
            iml: to_dbm_floored(iml_linear(&xs, constraints, cfg)),
            p_intercept_inputs: (p_e, flat),
            mainlobe_dev_db,
            max_null_dbm: to_dbm_floored(max_null),
            spectrum: SpectrumMap::evaluate(bf, cfg, &SpectrumMap::default_angles()),
        })
    }

    /// `10 log10` of the subcarrier-averaged radar SINR.
    pub fn radar_sinr_db(&self) -> f64 {
        let mean = self.sinr_radar_k.iter().sum::<f64>() / self.sinr_radar_k.len() as f64;
        10.0 * mean.log10()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
