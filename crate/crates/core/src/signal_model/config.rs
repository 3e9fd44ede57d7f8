use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// System scalars: array geometry, subcarrier grid and intercept sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmSystemConfig {
    #[serde(rename = "M_t")]
    pub tx_antennas: usize,
    #[serde(rename = "M_r")]
    pub rx_antennas: usize,
    #[serde(rename = "N_RF")]
    pub rf_chains: usize,
    #[serde(rename = "K")]
    pub subcarriers: usize,
    /// Bandwidth in Hz.
    #[serde(rename = "B")]
    pub bandwidth: f64,
    /// Center frequency in Hz.
    #[serde(rename = "f_c")]
    pub center_freq: f64,
    /// Element spacing in metres.
    #[serde(rename = "d")]
    pub element_spacing: f64,
    /// Propagation speed in m/s.
    #[serde(rename = "v")]
    pub propagation_speed: f64,
    /// Number of samples collected by the intercept receiver.
    #[serde(rename = "N")]
    pub intercept_samples: usize,
    /// Cyclic analysis window length.
    #[serde(rename = "W")]
    pub window: usize,
    #[serde(rename = "N_symbol")]
    pub symbol_len: usize,
    #[serde(rename = "N_cp")]
    pub cp_len: usize,
}

impl OfdmSystemConfig {
    fn base(mt: usize, nrf: usize, k: usize, n: usize) -> Self {
        let fc = 24e9;
        let v = SPEED_OF_LIGHT;
        OfdmSystemConfig {
            tx_antennas: mt,
            rx_antennas: mt,
            rf_chains: nrf,
            subcarriers: k,
            bandwidth: 2.56e9,
            center_freq: fc,
            element_spacing: v / (2.0 * fc),
            propagation_speed: v,
            intercept_samples: n,
            window: 2,
            symbol_len: 32,
            cp_len: 4,
        }
    }

    /// Small instance used by tests and the default CLI profile.
    pub fn desk() -> Self {
        Self::base(8, 2, 8, 8)
    }

    /// Full-size instance.
    pub fn paper() -> Self {
        Self::base(32, 4, 32, 34)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("M_t", self.tx_antennas),
            ("M_r", self.rx_antennas),
            ("N_RF", self.rf_chains),
            ("K", self.subcarriers),
            ("N", self.intercept_samples),
            ("W", self.window),
            ("N_symbol", self.symbol_len),
        ];
        for (name, c) in counts {
            if c == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.rf_chains > self.tx_antennas {
            return Err(Error::InvalidArgument(format!(
                "N_RF = {} exceeds M_t = {}",
                self.rf_chains, self.tx_antennas
            )));
        }
        if self.window > self.intercept_samples {
            return Err(Error::InvalidArgument(format!(
                "window W = {} exceeds N = {}",
                self.window, self.intercept_samples
            )));
        }
        if !self.window.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "window W = {} must be even",
                self.window
            )));
        }
        for (name, x) in [
            ("B", self.bandwidth),
            ("f_c", self.center_freq),
            ("d", self.element_spacing),
            ("v", self.propagation_speed),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive and finite"
                )));
            }
        }
        if self.subcarrier_freq(0) <= 0.0 {
            return Err(Error::InvalidArgument(
                "lowest subcarrier frequency must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Subcarrier spacing B/K.
    pub fn subcarrier_spacing(&self) -> f64 {
        self.bandwidth / self.subcarriers as f64
    }

    /// Intercept sampling period 1/(N df).
    pub fn sampling_period(&self) -> f64 {
        1.0 / (self.intercept_samples as f64 * self.subcarrier_spacing())
    }

    /// Intercept sampling frequency N df.
    pub fn sampling_freq(&self) -> f64 {
        self.intercept_samples as f64 * self.subcarrier_spacing()
    }

    /// Frequency of subcarrier `k` (zero based, so `k = 0` is the first
    /// subcarrier `f_c + (1 - K/2) df`).
    pub fn subcarrier_freq(&self, k: usize) -> f64 {
        let offset = (k + 1) as f64 - self.subcarriers as f64 / 2.0;
        self.center_freq + offset * self.subcarrier_spacing()
    }

    pub fn subcarrier_freqs(&self) -> Vec<f64> {
        (0..self.subcarriers)
            .map(|k| self.subcarrier_freq(k))
            .collect()
    }

    /// Maximum unambiguous sensing range v N_cp / (2B).
    pub fn max_sensing_range(&self) -> f64 {
        self.propagation_speed * self.cp_len as f64 / (2.0 * self.bandwidth)
    }

    /// Same system with a different RF chain count.
    pub fn with_rf_chains(&self, n_rf: usize) -> Self {
        OfdmSystemConfig {
            rf_chains: n_rf,
            ..self.clone()
        }
    }
}

/// Named parameter presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Desk,
    Paper,
}

impl Profile {
    pub fn system(self) -> OfdmSystemConfig {
        match self {
            Profile::Desk => OfdmSystemConfig::desk(),
            Profile::Paper => OfdmSystemConfig::paper(),
        }
    }

    pub fn default_trials(self) -> usize {
        match self {
            Profile::Desk => 20,
            Profile::Paper => 5000,
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::InvalidArgument(format!("unknown profile `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_affine() {
        let c = OfdmSystemConfig::paper();
        let df = c.subcarrier_spacing();
        for k in 1..c.subcarriers {
            let step = c.subcarrier_freq(k) - c.subcarrier_freq(k - 1);
            assert!((step - df).abs() < 1e-3);
        }
        // k = K/2 (one based) sits at the center frequency
        assert_eq!(c.subcarrier_freq(c.subcarriers / 2 - 1), c.center_freq);
        assert!((c.sampling_period() * c.intercept_samples as f64 * df - 1.0).abs() < 1e-15);
    }

    #[test]
    fn range_bound() {
        let c = OfdmSystemConfig::paper();
        let r = c.max_sensing_range();
        assert!((r - c.propagation_speed * 4.0 / (2.0 * 2.56e9)).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(OfdmSystemConfig::desk().validate().is_ok());
        assert!(OfdmSystemConfig::paper().validate().is_ok());
        let mut c = OfdmSystemConfig::desk();
        c.rf_chains = 9;
        assert!(c.validate().is_err());
        let mut c = OfdmSystemConfig::desk();
        c.window = 3;
        assert!(c.validate().is_err());
        let mut c = OfdmSystemConfig::desk();
        c.window = 10;
        assert!(c.validate().is_err());
        let mut c = OfdmSystemConfig::desk();
        c.bandwidth = 100e9;
        assert!(c.validate().is_err());
    }
}
