use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::numeric::dbm_to_w;
use crate::{Error, Result};

/// Constraint thresholds in boundary units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstraintSpec {
    /// Mainlobe angles in degrees.
    pub mainlobe_grid: Vec<f64>,
    /// Nulling angles in degrees.
    pub clutter_grid: Vec<f64>,
    #[serde(rename = "eta_dBm")]
    pub eta_dbm: f64,
    #[serde(rename = "zeta_dBm")]
    pub zeta_dbm: f64,
    #[serde(rename = "P_dBm")]
    pub power_dbm: f64,
}

fn span(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(f64::from).collect()
}

impl Default for ConstraintSpec {
    fn default() -> Self {
        ConstraintSpec {
            mainlobe_grid: span(21, 29),
            clutter_grid: span(-32, -28).into_iter().chain(span(58, 62)).collect(),
            eta_dbm: 20.0,
            zeta_dbm: 0.0,
            power_dbm: 30.0,
        }
    }
}

impl ConstraintSpec {
    pub fn desk() -> Self {
        ConstraintSpec {
            mainlobe_grid: vec![23.0, 26.0, 29.0],
            clutter_grid: vec![-30.0, 60.0],
            ..Self::default()
        }
    }

    pub fn paper() -> Self {
        Self::default()
    }

    /// Resolve to linear thresholds; the weights come from the scenario's
    /// intercept channel.
    pub fn build(&self, scenario: &Scenario) -> Result<DesignConstraints> {
        let k = scenario.subcarriers();
        let dc = DesignConstraints {
            mainlobe_grid: self.mainlobe_grid.clone(),
            clutter_grid: self.clutter_grid.clone(),
            eta: dbm_to_w(self.eta_dbm),
            zeta_k: vec![dbm_to_w(self.zeta_dbm); k],
            power_k: vec![dbm_to_w(self.power_dbm); k],
            varpi_k: DesignConstraints::weights_from_beta(scenario),
        };
        dc.validate(k)?;
        Ok(dc)
    }
}

/// Linear-unit design constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignConstraints {
    pub mainlobe_grid: Vec<f64>,
    pub clutter_grid: Vec<f64>,
    /// Weighted mainlobe level (W).
    pub eta: f64,
    /// Nulling threshold per subcarrier (W).
    pub zeta_k: Vec<f64>,
    /// Power budget per subcarrier (W).
    pub power_k: Vec<f64>,
    /// Mainlobe weights per subcarrier.
    pub varpi_k: Vec<f64>,
}

impl DesignConstraints {
    /// `|beta_k|^2 / |beta(f_c)|^2`.
    pub fn weights_from_beta(scenario: &Scenario) -> Vec<f64> {
        scenario
            .beta_k
            .iter()
            .map(|b| b.norm_sqr() / scenario.beta_ref)
            .collect()
    }

    pub fn mainlobe_count(&self) -> usize {
        self.mainlobe_grid.len()
    }

    pub fn null_count(&self) -> usize {
        self.clutter_grid.len()
    }

    pub fn validate(&self, subcarriers: usize) -> Result<()> {
        let sorted = |g: &[f64]| g.windows(2).all(|w| w[0] <= w[1]);
        if self.mainlobe_grid.is_empty() || self.clutter_grid.is_empty() {
            return Err(Error::InvalidArgument(
                "angle grids must be nonempty".into(),
            ));
        }
        if !sorted(&self.mainlobe_grid) || !sorted(&self.clutter_grid) {
            return Err(Error::InvalidArgument("angle grids must be sorted".into()));
        }
        if self
            .mainlobe_grid
            .iter()
            .chain(&self.clutter_grid)
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidArgument("angle grids must be finite".into()));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument("eta must be positive".into()));
        }
        for (name, v) in [
            ("zeta_k", &self.zeta_k),
            ("P_k", &self.power_k),
            ("varpi_k", &self.varpi_k),
        ] {
            if v.len() != subcarriers {
                return Err(Error::DimensionMismatch(format!(
                    "{name} must have length K = {subcarriers}"
                )));
            }
        }
        if self.zeta_k.iter().any(|z| !(*z >= 0.0) || !z.is_finite()) {
            return Err(Error::InvalidArgument("zeta_k must be >= 0".into()));
        }
        if self
            .power_k
            .iter()
            .chain(&self.varpi_k)
            .any(|p| !(*p > 0.0) || !p.is_finite())
        {
            return Err(Error::InvalidArgument(
                "P_k and varpi_k must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_model::{OfdmSystemConfig, ScenarioSpec};

    #[test]
    fn weights_are_one_at_center() {
        let sys = OfdmSystemConfig::desk();
        let s = Scenario::generate(&ScenarioSpec::desk(), &sys, 0).unwrap();
        let c = ConstraintSpec::desk().build(&s).unwrap();
        let center = sys.subcarriers / 2 - 1;
        assert!((c.varpi_k[center] - 1.0).abs() < 1e-12);
        for (k, w) in c.varpi_k.iter().enumerate() {
            let expect = (sys.center_freq / sys.subcarrier_freq(k)).powi(2);
            assert!((w - expect).abs() < 1e-12);
        }
        assert!((c.eta - 0.1).abs() < 1e-15);
        assert!((c.power_k[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn paper_grids() {
        let c = ConstraintSpec::paper();
        assert_eq!(c.mainlobe_grid.len(), 9);
        assert_eq!(c.clutter_grid.len(), 10);
    }

    #[test]
    fn rejects_unsorted() {
        let s = Scenario::generate(&ScenarioSpec::desk(), &OfdmSystemConfig::desk(), 0).unwrap();
        let spec = ConstraintSpec {
            mainlobe_grid: vec![29.0, 23.0],
            ..ConstraintSpec::desk()
        };
        assert!(spec.build(&s).is_err());
        let spec = ConstraintSpec {
            clutter_grid: vec![],
            ..ConstraintSpec::desk()
        };
        assert!(spec.build(&s).is_err());
    }
}
