use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{steering_unchecked, OfdmSystemConfig};
use crate::numeric::{cis, db_to_lin, dbm_to_w};
use crate::{CVector, Error, Result, C64};

/// Scenario description in boundary units (degrees, dBm, dB).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    #[serde(rename = "theta_E")]
    pub target_angle: f64,
    pub clutter_angles: Vec<f64>,
    #[serde(rename = "U")]
    pub users: usize,
    #[serde(rename = "L")]
    pub paths: usize,
    /// Mean power gain of each channel path in dB.
    pub path_gain_db: f64,
    #[serde(rename = "sigma2_E_k_dBm")]
    pub sigma2_target_dbm: f64,
    #[serde(rename = "sigma2_i_k_dBm")]
    pub sigma2_clutter_dbm: f64,
    #[serde(rename = "sigma2_R_dBm")]
    pub sigma2_radar_dbm: f64,
    #[serde(rename = "sigma2_C_dBm")]
    pub sigma2_comm_dbm: f64,
    #[serde(rename = "sigma2_Ez_dBm")]
    pub sigma2_er_noise_dbm: f64,
    /// |beta|^2 at the center frequency, in dBm.
    #[serde(rename = "beta_ref_dBm")]
    pub beta_ref_dbm: f64,
    /// Distance to the reconnaissance receiver in metres.
    pub er_range_m: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            target_angle: 26.0,
            clutter_angles: vec![-30.0, 60.0],
            users: 4,
            paths: 3,
            path_gain_db: -100.0,
            sigma2_target_dbm: -70.0,
            sigma2_clutter_dbm: -50.0,
            sigma2_radar_dbm: -70.0,
            sigma2_comm_dbm: -70.0,
            sigma2_er_noise_dbm: -70.0,
            beta_ref_dbm: -100.0,
            er_range_m: 10_000.0,
        }
    }
}

impl ScenarioSpec {
    pub fn desk() -> Self {
        ScenarioSpec {
            users: 2,
            ..Self::default()
        }
    }

    pub fn paper() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::InvalidArgument("user count must be positive".into()));
        }
        if self.paths == 0 {
            return Err(Error::InvalidArgument("path count must be positive".into()));
        }
        let finite = [
            self.target_angle,
            self.path_gain_db,
            self.sigma2_target_dbm,
            self.sigma2_clutter_dbm,
            self.sigma2_radar_dbm,
            self.sigma2_comm_dbm,
            self.sigma2_er_noise_dbm,
            self.beta_ref_dbm,
            self.er_range_m,
        ];
        if finite
            .iter()
            .chain(self.clutter_angles.iter())
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidArgument(
                "scenario values must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// A concrete scenario: geometry, noise powers (linear W) and channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub system: OfdmSystemConfig,
    pub theta_e: f64,
    pub clutter_angles: Vec<f64>,
    /// Target amplitude variance per subcarrier.
    pub sigma2_e_k: Vec<f64>,
    /// Clutter amplitude variance, indexed `[clutter][subcarrier]`.
    pub sigma2_i_k: Vec<Vec<f64>>,
    pub sigma2_r: f64,
    pub sigma2_c: f64,
    pub sigma2_ez: f64,
    /// Intercept channel coefficient per subcarrier.
    pub beta_k: Vec<C64>,
    /// `|beta|^2` at the center frequency.
    pub beta_ref: f64,
    /// Channels used by the designer, indexed `[subcarrier][user]`.
    pub channels: Vec<Vec<CVector>>,
    /// Ground truth when `channels` holds imperfect estimates.
    pub true_channels: Option<Vec<Vec<CVector>>>,
    pub users: usize,
    /// Mean path power gain used to generate the channels.
    pub path_gain: f64,
}

/// `sqrt(M_t / L) sum_l alpha_l a_t(phi_l, f)`.
pub fn multipath_channel(
    cfg: &OfdmSystemConfig,
    gains: &[C64],
    angles_deg: &[f64],
    f: f64,
) -> CVector {
    let mt = cfg.tx_antennas;
    let scale = (mt as f64 / gains.len() as f64).sqrt();
    let mut h = CVector::zeros(mt);
    for (alpha, phi) in gains.iter().zip(angles_deg) {
        h += steering_unchecked(*phi, f, mt, cfg) * *alpha;
    }
    h * C64::new(scale, 0.0)
}

pub(crate) fn complex_gaussian(rng: &mut impl Rng, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

impl Scenario {
    /// Draw channels for `spec` under `system` with a fixed seed.
    pub fn generate(spec: &ScenarioSpec, system: &OfdmSystemConfig, seed: u64) -> Result<Scenario> {
        spec.validate()?;
        system.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let path_gain = db_to_lin(spec.path_gain_db);
        let freqs = system.subcarrier_freqs();
        let k_count = freqs.len();

        let mut channels = vec![Vec::with_capacity(spec.users); k_count];
        for _u in 0..spec.users {
            let gains: Vec<C64> = (0..spec.paths)
                .map(|_| complex_gaussian(&mut rng, path_gain))
                .collect();
            let angles: Vec<f64> = (0..spec.paths)
                .map(|_| rng.random_range(-90.0..90.0))
                .collect();
            for (k, f) in freqs.iter().enumerate() {
                channels[k].push(multipath_channel(system, &gains, &angles, *f));
            }
        }

        let beta_ref = dbm_to_w(spec.beta_ref_dbm);
        let delay = spec.er_range_m / system.propagation_speed;
        let beta_k = freqs
            .iter()
            .map(|f| cis(-2.0 * PI * f * delay) * (beta_ref.sqrt() * system.center_freq / f))
            .collect();

        Ok(Scenario {
            system: system.clone(),
            theta_e: spec.target_angle,
            clutter_angles: spec.clutter_angles.clone(),
            sigma2_e_k: vec![dbm_to_w(spec.sigma2_target_dbm); k_count],
            sigma2_i_k: vec![
                vec![dbm_to_w(spec.sigma2_clutter_dbm); k_count];
                spec.clutter_angles.len()
            ],
            sigma2_r: dbm_to_w(spec.sigma2_radar_dbm),
            sigma2_c: dbm_to_w(spec.sigma2_comm_dbm),
            sigma2_ez: dbm_to_w(spec.sigma2_er_noise_dbm),
            beta_k,
            beta_ref,
            channels,
            true_channels: None,
            users: spec.users,
            path_gain,
        })
    }

    /// Copy whose design channels are `h + dh`, `dh ~ CN(0, sigma2_csi I)`.
    /// The unperturbed channels are kept as ground truth.
    pub fn perturb_csi(&self, sigma2_csi: f64, seed: u64) -> Result<Scenario> {
        if !(sigma2_csi >= 0.0) || !sigma2_csi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "CSI error variance must be >= 0, got {sigma2_csi}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = self.ground_truth().clone();
        let channels = truth
            .iter()
            .map(|users| {
                users
                    .iter()
                    .map(|h| {
                        if sigma2_csi == 0.0 {
                            h.clone()
                        } else {
                            h + CVector::from_fn(h.len(), |_, _| {
                                complex_gaussian(&mut rng, sigma2_csi)
                            })
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Scenario {
            channels,
            true_channels: Some(truth),
            ..self.clone()
        })
    }

    /// Channels to evaluate performance with.
    pub fn ground_truth(&self) -> &Vec<Vec<CVector>> {
        self.true_channels.as_ref().unwrap_or(&self.channels)
    }

    pub fn subcarriers(&self) -> usize {
        self.system.subcarriers
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        let k = self.system.subcarriers;
        let mt = self.system.tx_antennas;
        if self.users == 0 {
            return Err(Error::InvalidArgument("user count must be positive".into()));
        }
        if self.channels.len() != k || self.channels.iter().any(|c| c.len() != self.users) {
            return Err(Error::DimensionMismatch(format!(
                "channels must be K x U = {k} x {}",
                self.users
            )));
        }
        if self.channels.iter().flatten().any(|h| h.len() != mt) {
            return Err(Error::DimensionMismatch(format!(
                "channel vectors must have length M_t = {mt}"
            )));
        }
        if self.beta_k.len() != k || self.sigma2_e_k.len() != k {
            return Err(Error::DimensionMismatch(
                "per-subcarrier vectors must have length K".into(),
            ));
        }
        if self.sigma2_i_k.len() != self.clutter_angles.len()
            || self.sigma2_i_k.iter().any(|v| v.len() != k)
        {
            return Err(Error::DimensionMismatch(
                "clutter variances must be I x K".into(),
            ));
        }
        let scalars = [self.sigma2_r, self.sigma2_c, self.sigma2_ez];
        let positive = self
            .sigma2_e_k
            .iter()
            .chain(self.sigma2_i_k.iter().flatten())
            .chain(scalars.iter());
        for v in positive {
            if !(*v > 0.0) {
                return Err(Error::InvalidArgument(
                    "all variances must be strictly positive".into(),
                ));
            }
        }
        Ok(())
    }
}
