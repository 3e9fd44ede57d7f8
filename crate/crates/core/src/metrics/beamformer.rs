use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numeric::cis;
use crate::{CMatrix, Error, Result, C64};

/// Analog precoder storage.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalogBeamformer {
    /// Phase-only entries `exp(j phase)`; unit modulus by construction.
    Phases(DMatrix<f64>),
    /// Arbitrary complex matrix (fully digital baselines, relaxed iterates).
    Unconstrained(CMatrix),
}

impl AnalogBeamformer {
    pub fn random_phases(rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AnalogBeamformer::Phases(DMatrix::from_fn(rows, cols, |_, _| {
            rng.random_range(0.0..std::f64::consts::TAU)
        }))
    }

    pub fn identity(n: usize) -> Self {
        AnalogBeamformer::Unconstrained(CMatrix::identity(n, n))
    }

    pub fn matrix(&self) -> CMatrix {
        match self {
            AnalogBeamformer::Phases(p) => p.map(cis),
            AnalogBeamformer::Unconstrained(m) => m.clone(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            AnalogBeamformer::Phases(p) => p.shape(),
            AnalogBeamformer::Unconstrained(m) => m.shape(),
        }
    }
}

/// Analog precoder plus one digital precoder per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerPair {
    pub analog: AnalogBeamformer,
    /// `N_RF x U` digital precoders, one per subcarrier.
    pub digital: Vec<CMatrix>,
}

impl BeamformerPair {
    pub fn new(analog: AnalogBeamformer, digital: Vec<CMatrix>) -> Result<Self> {
        let bf = BeamformerPair { analog, digital };
        bf.check()?;
        Ok(bf)
    }

    /// All-zero digital precoders behind a zero-phase analog precoder.
    pub fn zeros(tx: usize, rf: usize, subcarriers: usize, users: usize) -> Self {
        BeamformerPair {
            analog: AnalogBeamformer::Phases(DMatrix::zeros(tx, rf)),
            digital: vec![CMatrix::zeros(rf, users); subcarriers],
        }
    }

    /// Fully digital pair `F_RF = I`, `F_k = X_k`.
    pub fn fully_digital(precoders: Vec<CMatrix>) -> Result<Self> {
        let tx = precoders.first().map(|x| x.nrows()).unwrap_or(0);
        Self::new(AnalogBeamformer::identity(tx), precoders)
    }

    fn check(&self) -> Result<()> {
        let (_, rf) = self.analog.shape();
        let users = self.digital.first().map(|f| f.ncols()).unwrap_or(0);
        for (k, f) in self.digital.iter().enumerate() {
            if f.nrows() != rf || f.ncols() != users {
                return Err(Error::DimensionMismatch(format!(
                    "digital precoder {k} is {}x{}, expected {rf}x{users}",
                    f.nrows(),
                    f.ncols()
                )));
            }
        }
        Ok(())
    }

    pub fn tx_antennas(&self) -> usize {
        self.analog.shape().0
    }

    pub fn rf_chains(&self) -> usize {
        self.analog.shape().1
    }

    pub fn subcarriers(&self) -> usize {
        self.digital.len()
    }

    pub fn users(&self) -> usize {
        self.digital.first().map(|f| f.ncols()).unwrap_or(0)
    }

    /// True when the analog precoder is phase-only.
    pub fn is_analog_feasible(&self) -> bool {
        matches!(self.analog, AnalogBeamformer::Phases(_))
    }

    /// Effective precoders `X_k = F_RF F_k`.
    pub fn precoders(&self) -> Vec<CMatrix> {
        let f = self.analog.matrix();
        self.digital.iter().map(|fk| &f * fk).collect()
    }

    pub fn precoder(&self, k: usize) -> CMatrix {
        self.analog.matrix() * &self.digital[k]
    }

    /// Scale every digital precoder by `t`.
    pub fn scaled(&self, t: f64) -> Self {
        BeamformerPair {
            analog: self.analog.clone(),
            digital: self.digital.iter().map(|f| f * C64::new(t, 0.0)).collect(),
        }
    }

    /// Check shapes against an `(M_t, K, U)` triple.
    pub fn check_against(&self, tx: usize, subcarriers: usize, users: usize) -> Result<()> {
        self.check()?;
        if self.tx_antennas() != tx || self.subcarriers() != subcarriers || self.users() != users {
            return Err(Error::InvalidArgument(format!(
                "beamformer shape (M_t={}, K={}, U={}) does not match scenario (M_t={tx}, K={subcarriers}, U={users})",
                self.tx_antennas(),
                self.subcarriers(),
                self.users()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phases_have_unit_modulus() {
        let a = AnalogBeamformer::random_phases(8, 2, 3);
        for z in a.matrix().iter() {
            assert!((z.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_checks() {
        let bad = BeamformerPair::new(AnalogBeamformer::identity(4), vec![CMatrix::zeros(3, 2)]);
        assert!(bad.is_err());
        let ok = BeamformerPair::zeros(8, 2, 4, 2);
        assert!(ok.check_against(8, 4, 2).is_ok());
        assert!(ok.check_against(8, 4, 3).is_err());
        assert_eq!(ok.precoder(0).shape(), (8, 2));
    }
}
