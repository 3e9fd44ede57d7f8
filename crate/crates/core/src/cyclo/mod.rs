//! Cyclostationary analysis of the signal collected by a passive
//! reconnaissance receiver.

mod selector;

pub use selector::{index_sets, SelectorMatrix};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::metrics::BeamformerPair;
use crate::numeric::{pairwise_sum_matrices, proj_norm2};
use crate::signal_model::{
    fft_matrix, scenario_noise, steering_unchecked, tone_matrix, OfdmSystemConfig, Scenario,
};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Cyclic spectrum over `(m, n)` with its estimation metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicSpectrum {
    /// `values[(i, j)]` is the estimate at `m = m_set[i]`, `n = n_set[j]`.
    pub values: CMatrix,
    pub m_set: Vec<usize>,
    pub n_set: Vec<usize>,
    pub window: usize,
    pub n_samples: usize,
    /// Sampling frequency in Hz.
    pub sampling_freq: f64,
}

#[derive(Serialize)]
struct SpectrumJson<'a> {
    n_samples: usize,
    window: usize,
    sampling_freq_hz: f64,
    m_set: &'a [usize],
    n_set: &'a [usize],
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl CyclicSpectrum {
    fn from_fn(cfg: &OfdmSystemConfig, mut f: impl FnMut(&SelectorMatrix) -> C64) -> Result<Self> {
        let (m_set, n_set) = index_sets(cfg.intercept_samples, cfg.window);
        let mut values = CMatrix::zeros(m_set.len(), n_set.len());
        for (i, m) in m_set.iter().enumerate() {
            for (j, n) in n_set.iter().enumerate() {
                let sel = SelectorMatrix::new(*m, *n, cfg.intercept_samples, cfg.window)?;
                values[(i, j)] = f(&sel);
            }
        }
        Ok(CyclicSpectrum {
            values,
            m_set,
            n_set,
            window: cfg.window,
            n_samples: cfg.intercept_samples,
            sampling_freq: cfg.sampling_freq(),
        })
    }

    /// Cyclic frequency of column `j`.
    pub fn cyclic_freq(&self, j: usize) -> f64 {
        self.n_set[j] as f64 * self.sampling_freq
    }

    /// Frequency of row `i`.
    pub fn freq(&self, i: usize) -> f64 {
        self.m_set[i] as f64 * self.sampling_freq
    }

    /// `max |C(m, n != 0)| / mean |C(m, 0)|`.
    pub fn flatness(&self) -> Result<f64> {
        let zero_col = self
            .n_set
            .iter()
            .position(|n| *n == 0)
            .ok_or_else(|| Error::InvalidArgument("spectrum has no n = 0 column".into()))?;
        let rows = self.values.nrows();
        let mean_diag = (0..rows)
            .map(|i| self.values[(i, zero_col)].norm())
            .sum::<f64>()
            / rows as f64;
        if !(mean_diag > 0.0) {
            return Err(Error::DivideByZero(
                "n = 0 row of the cyclic spectrum is zero".into(),
            ));
        }
        let mut worst = 0.0f64;
        for j in (0..self.n_set.len()).filter(|j| *j != zero_col) {
            for i in 0..rows {
                worst = worst.max(self.values[(i, j)].norm());
            }
        }
        Ok(worst / mean_diag)
    }

    /// Magnitudes in dB relative to the peak, floored at `floor_db`.
    pub fn magnitude_db(&self, floor_db: f64) -> CMatrix {
        let peak = self.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        self.values.map(|z| {
            let db = if peak > 0.0 && z.norm() > 0.0 {
                20.0 * (z.norm() / peak).log10()
            } else {
                floor_db
            };
            C64::new(db.max(floor_db), 0.0)
        })
    }

    /// CSV with a `#` header block, rows `m,n,re,im,magnitude_dB`.
    pub fn to_csv(&self) -> String {
        let db = self.magnitude_db(SPECTRUM_FLOOR_DB);
        let mut s = format!(
            "# f_s={}\n# W={}\n# N={}\nm,n,re,im,magnitude_dB\n",
            self.sampling_freq, self.window, self.n_samples
        );
        for (i, m) in self.m_set.iter().enumerate() {
            for (j, n) in self.n_set.iter().enumerate() {
                let v = self.values[(i, j)];
                s.push_str(&format!("{m},{n},{},{},{}\n", v.re, v.im, db[(i, j)].re));
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..self.values.nrows())
                .map(|i| {
                    (0..self.values.ncols())
                        .map(|j| f(&self.values[(i, j)]))
                        .collect()
                })
                .collect()
        };
        let doc = SpectrumJson {
            n_samples: self.n_samples,
            window: self.window,
            sampling_freq_hz: self.sampling_freq,
            m_set: &self.m_set,
            n_set: &self.n_set,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        };
        serde_json::to_string_pretty(&doc).expect("spectrum serializes")
    }
}

/// Floor applied when rendering spectra in dB.
pub const SPECTRUM_FLOOR_DB: f64 = -80.0;

/// Per-subcarrier intercept gains `c_k^2 = |beta_k|^2 ||a_t^H(theta_E, f_k) X_k||^2`.
pub fn intercept_gains(bf: &BeamformerPair, scenario: &Scenario) -> Result<Vec<f64>> {
    check(bf, scenario)?;
    let sys = &scenario.system;
    Ok(bf
        .precoders()
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let a = steering_unchecked(
                scenario.theta_e,
                sys.subcarrier_freq(k),
                sys.tx_antennas,
                sys,
            );
            scenario.beta_k[k].norm_sqr() * proj_norm2(&a, x)
        })
        .collect())
}

fn check(bf: &BeamformerPair, scenario: &Scenario) -> Result<()> {
    bf.check_against(
        scenario.system.tx_antennas,
        scenario.subcarriers(),
        scenario.users,
    )
    .map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Unit-power BPSK symbols, `[subcarrier][user]`.
pub fn bpsk_symbols(subcarriers: usize, users: usize, rng: &mut impl Rng) -> Vec<CVector> {
    (0..subcarriers)
        .map(|_| {
            CVector::from_fn(users, |_, _| {
                C64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0)
            })
        })
        .collect()
}

fn intercept_with_rng(
    bf: &BeamformerPair,
    scenario: &Scenario,
    symbols: &[CVector],
    rng: &mut impl Rng,
) -> CVector {
    let sys = &scenario.system;
    let xs = bf.precoders();
    let mut r = CVector::zeros(sys.intercept_samples);
    for (k, x) in xs.iter().enumerate() {
        let a = steering_unchecked(
            scenario.theta_e,
            sys.subcarrier_freq(k),
            sys.tx_antennas,
            sys,
        );
        let payload = (a.adjoint() * x * &symbols[k])[0] * scenario.beta_k[k];
        r += crate::signal_model::tone_vector(sys.subcarrier_freq(k), sys) * payload;
    }
    r + scenario_noise(sys.intercept_samples, scenario.sigma2_ez, rng)
}

/// Samples collected by the reconnaissance receiver for one symbol block.
pub fn intercept_signal(
    bf: &BeamformerPair,
    scenario: &Scenario,
    symbols: &[CVector],
    noise_seed: u64,
) -> Result<CVector> {
    check(bf, scenario)?;
    if symbols.len() != scenario.subcarriers() || symbols.iter().any(|s| s.len() != scenario.users)
    {
        return Err(Error::InvalidArgument(
            "symbols must be K vectors of length U".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    Ok(intercept_with_rng(bf, scenario, symbols, &mut rng))
}

/// Intercepted power `sum_k c_k^2 + K sigma_E^2`.
pub fn intercepted_power(bf: &BeamformerPair, scenario: &Scenario) -> Result<f64> {
    let c2 = intercept_gains(bf, scenario)?;
    Ok(c2.iter().sum::<f64>() + scenario.subcarriers() as f64 * scenario.sigma2_ez)
}

/// Expected energy of the N collected samples, `N (sum_k c_k^2 + sigma_E^2)`.
pub fn received_energy(bf: &BeamformerPair, scenario: &Scenario) -> Result<f64> {
    let c2 = intercept_gains(bf, scenario)?;
    Ok(scenario.system.intercept_samples as f64 * (c2.iter().sum::<f64>() + scenario.sigma2_ez))
}

/// Windowed cyclic spectrum of an N-sample record.
pub fn cyclic_spectrum(r: &CVector, cfg: &OfdmSystemConfig) -> Result<CyclicSpectrum> {
    if r.len() != cfg.intercept_samples {
        return Err(Error::InvalidArgument(format!(
            "record has {} samples, expected N = {}",
            r.len(),
            cfg.intercept_samples
        )));
    }
    let r_hat = fft_matrix(cfg.intercept_samples)? * r;
    CyclicSpectrum::from_fn(cfg, |sel| sel.quadratic_form(&r_hat))
}

fn spectrum_of_covariance(cov: &CMatrix, cfg: &OfdmSystemConfig) -> Result<CyclicSpectrum> {
    let v = fft_matrix(cfg.intercept_samples)?;
    let s = &v * cov * v.adjoint();
    CyclicSpectrum::from_fn(cfg, |sel| sel.trace_product(&s))
}

/// `R_Xi = D diag(c^2) D^H`, entry `(m, n) = sum_k c_k^2 exp(j 2 pi f_k (m - n) T_s)`.
pub fn r_xi_matrix(c2: &[f64], cfg: &OfdmSystemConfig) -> Result<CMatrix> {
    if c2.len() != cfg.subcarriers {
        return Err(Error::DimensionMismatch(format!(
            "expected {} gains, got {}",
            cfg.subcarriers,
            c2.len()
        )));
    }
    if c2.iter().any(|c| !(*c >= 0.0)) {
        return Err(Error::InvalidArgument(
            "intercept gains must be nonnegative".into(),
        ));
    }
    let d = tone_matrix(cfg);
    let scaled = CMatrix::from_fn(d.nrows(), d.ncols(), |i, k| d[(i, k)] * c2[k]);
    Ok(scaled * d.adjoint())
}

/// Closed-form expectation of the cyclic spectrum over symbols and noise.
pub fn ergodic_cyclic_spectrum(bf: &BeamformerPair, scenario: &Scenario) -> Result<CyclicSpectrum> {
    let cfg = &scenario.system;
    let mut cov = r_xi_matrix(&intercept_gains(bf, scenario)?, cfg)?;
    for i in 0..cfg.intercept_samples {
        cov[(i, i)] += scenario.sigma2_ez;
    }
    spectrum_of_covariance(&cov, cfg)
}

/// Ergodic cyclic spectrum of white noise with variance `sigma2_0`.
pub fn awgn_ergodic_spectrum(sigma2_0: f64, cfg: &OfdmSystemConfig) -> Result<CyclicSpectrum> {
    if !(sigma2_0 >= 0.0) {
        return Err(Error::InvalidArgument("noise variance must be >= 0".into()));
    }
    let n = cfg.intercept_samples;
    spectrum_of_covariance(&(CMatrix::identity(n, n) * C64::new(sigma2_0, 0.0)), cfg)
}

/// Input accepted by [`flatness_score`].
pub enum FlatnessInput<'a> {
    RXi(&'a CMatrix),
    Spectrum(&'a CyclicSpectrum),
}

/// Noise-likeness score; lower is closer to white noise.
pub fn flatness_score(input: FlatnessInput<'_>) -> Result<f64> {
    match input {
        FlatnessInput::RXi(r) => flatness_r_xi(r),
        FlatnessInput::Spectrum(s) => s.flatness(),
    }
}

/// `max |off-diagonal| / mean |diagonal|` of `R_Xi`.
pub fn flatness_r_xi(r: &CMatrix) -> Result<f64> {
    let n = r.nrows();
    if n == 0 || r.ncols() != n {
        return Err(Error::InvalidArgument(
            "flatness needs a nonempty square matrix".into(),
        ));
    }
    let mean_diag = (0..n).map(|i| r[(i, i)].norm()).sum::<f64>() / n as f64;
    if !(mean_diag > 0.0) {
        return Err(Error::DivideByZero("R_Xi has a zero diagonal".into()));
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                worst = worst.max(r[(i, j)].norm());
            }
        }
    }
    Ok(worst / mean_diag)
}

/// Sample mean of the cyclic spectrum over `trials` independent BPSK
/// symbol/noise draws. Trial `t` uses ChaCha8 stream `t` of `seed`; the
/// reduction is pairwise in trial order, so the result does not depend on
/// thread scheduling.
pub fn monte_carlo_cyclic_mean(
    bf: &BeamformerPair,
    scenario: &Scenario,
    trials: usize,
    seed: u64,
) -> Result<CyclicSpectrum> {
    check(bf, scenario)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let cfg = &scenario.system;
    let v = fft_matrix(cfg.intercept_samples)?;
    let template = CyclicSpectrum::from_fn(cfg, |_| C64::new(0.0, 0.0))?;
    let selectors: Vec<Vec<SelectorMatrix>> = template
        .m_set
        .iter()
        .map(|m| {
            template
                .n_set
                .iter()
                .map(|n| SelectorMatrix::new(*m, *n, cfg.intercept_samples, cfg.window))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let per_trial: Vec<CMatrix> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let symbols = bpsk_symbols(cfg.subcarriers, scenario.users, &mut rng);
            let r_hat = &v * intercept_with_rng(bf, scenario, &symbols, &mut rng);
            CMatrix::from_fn(template.m_set.len(), template.n_set.len(), |i, j| {
                selectors[i][j].quadratic_form(&r_hat)
            })
        })
        .collect();
    let total = pairwise_sum_matrices(&per_trial).expect("at least one trial");
    Ok(CyclicSpectrum {
        values: total / C64::new(trials as f64, 0.0),
        ..template
    })
}
