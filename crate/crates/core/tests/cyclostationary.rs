use lpi_isac::cyclo::{
    awgn_ergodic_spectrum, cyclic_spectrum, ergodic_cyclic_spectrum, flatness_r_xi, index_sets,
    intercept_gains, monte_carlo_cyclic_mean, r_xi_matrix, received_energy, SelectorMatrix,
};
use lpi_isac::metrics::AnalogBeamformer;
use lpi_isac::signal_model::{fft_matrix, OfdmSystemConfig, Scenario, ScenarioSpec};
use lpi_isac::solver::initial_beamformer;
use lpi_isac::{CVector, C64};
use proptest::prelude::*;

fn direct_windowed_sum(r: &CVector, m: usize, n: usize, window: usize) -> C64 {
    let len = r.len() as isize;
    let at = |i: isize| r[i.rem_euclid(len) as usize];
    let half = (n / 2) as isize;
    let start = -((window / 2) as isize);
    let mut acc = C64::new(0.0, 0.0);
    for w in start..start + window as isize {
        acc += at(m as isize + half + w) * at(m as isize - half + w).conj();
    }
    acc / window as f64
}

fn cfg_with(k: usize, n: usize, w: usize) -> OfdmSystemConfig {
    let mut cfg = OfdmSystemConfig::desk();
    cfg.subcarriers = k;
    cfg.intercept_samples = n;
    cfg.window = w;
    cfg
}

fn complex_vec(parts: &[(f64, f64)]) -> CVector {
    CVector::from_iterator(parts.len(), parts.iter().map(|&(a, b)| C64::new(a, b)))
}

proptest! {
    #[test]
    fn selector_matches_windowed_sum(
        (n, w, parts) in (2usize..=16).prop_flat_map(|n| (Just(n), 1..=n, prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)))
    ) {
        let r = complex_vec(&parts);
        let (ms, ns) = index_sets(n, w);
        for &m in &ms {
            for &nn in &ns {
                let sel = SelectorMatrix::new(m, nn, n, w).unwrap();
                let q = sel.quadratic_form(&r);
                prop_assert!((q - direct_windowed_sum(&r, m, nn, w)).norm() < 1e-12);
                let s = &r * r.adjoint();
                prop_assert!((sel.trace_product(&s) - q).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn spectrum_is_windowed_sum_of_dft(parts in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 8)) {
        let cfg = OfdmSystemConfig::desk();
        let r = complex_vec(&parts);
        let s = cyclic_spectrum(&r, &cfg).unwrap();
        let r_hat = fft_matrix(8).unwrap() * &r;
        for (i, m) in s.m_set.iter().enumerate() {
            for (j, n) in s.n_set.iter().enumerate() {
                prop_assert!((s.values[(i, j)] - direct_windowed_sum(&r_hat, *m, *n, cfg.window)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn r_xi_is_hermitian_psd(gains in prop::collection::vec(0.0..2.0f64, 8)) {
        let cfg = OfdmSystemConfig::desk();
        let r = r_xi_matrix(&gains, &cfg).unwrap();
        prop_assert!((&r - r.adjoint()).norm() < 1e-12);
        let min_eig = r.symmetric_eigenvalues().min();
        prop_assert!(min_eig > -1e-10);
        let total: f64 = gains.iter().sum();
        for i in 0..8 {
            prop_assert!((r[(i, i)].re - total).abs() < 1e-10);
        }
    }

    #[test]
    fn unequal_gains_are_less_flat_when_k_equals_n(gains in prop::collection::vec(0.1..1.0f64, 8)) {
        let spread = gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - gains.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-3);
        let cfg = cfg_with(8, 8, 2);
        let equal = flatness_r_xi(&r_xi_matrix(&[0.5; 8], &cfg).unwrap()).unwrap();
        let unequal = flatness_r_xi(&r_xi_matrix(&gains, &cfg).unwrap()).unwrap();
        prop_assert!(equal < 1e-12);
        prop_assert!(unequal > equal);
    }

    #[test]
    fn awgn_spectrum_scales_linearly(s2 in 1e-6..10.0f64) {
        let cfg = OfdmSystemConfig::paper();
        let a = awgn_ergodic_spectrum(s2, &cfg).unwrap();
        let b = awgn_ergodic_spectrum(1.0, &cfg).unwrap();
        prop_assert!((a.values - b.values * C64::new(s2, 0.0)).norm() < 1e-9 * s2.max(1.0));
    }
}

#[test]
fn tapered_gains_can_be_flatter_than_equal_gains() {
    // below K = N the equal profile has Dirichlet sidelobes that a taper can undercut
    let cfg = cfg_with(4, 8, 2);
    let equal = flatness_r_xi(&r_xi_matrix(&[0.5; 4], &cfg).unwrap()).unwrap();
    let taper = flatness_r_xi(&r_xi_matrix(&[0.86, 0.44, 0.31, 0.94], &cfg).unwrap()).unwrap();
    assert!(taper < equal, "{taper} vs {equal}");
}

#[test]
fn monte_carlo_mean_approaches_the_ergodic_spectrum() {
    let sys = OfdmSystemConfig::desk();
    let sc = Scenario::generate(&ScenarioSpec::desk(), &sys, 5).unwrap();
    let power = vec![1.0; sys.subcarriers];
    let bf = initial_beamformer(AnalogBeamformer::random_phases(8, 2, 5), &sc, &power).unwrap();
    let erg = ergodic_cyclic_spectrum(&bf, &sc).unwrap();
    let mc = monte_carlo_cyclic_mean(&bf, &sc, 4000, 11).unwrap();
    let peak = erg.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (e, m) in erg.values.iter().zip(mc.values.iter()) {
        if e.norm() > 1e-3 * peak {
            assert!((e - m).norm() / e.norm() < 0.1, "{e} vs {m}");
        }
    }
    // the n = 0 row covers part of the DFT energy, which is N times the record energy
    let energy = received_energy(&bf, &sc).unwrap() * sys.intercept_samples as f64;
    let row0: f64 = (0..erg.m_set.len()).map(|i| erg.values[(i, 0)].re).sum();
    assert!(row0 > 0.0 && row0 <= energy * (1.0 + 1e-9));
    assert_eq!(intercept_gains(&bf, &sc).unwrap().len(), sys.subcarriers);
}
