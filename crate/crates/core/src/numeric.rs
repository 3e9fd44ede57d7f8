//! Small numeric helpers shared by the modules.

use statrs::distribution::{Binomial, DiscreteCDF};

use crate::{CMatrix, C64};

/// Watts to dBm.
pub fn w_to_dbm(p: f64) -> f64 {
    10.0 * (p * 1e3).log10()
}

/// dBm to watts.
pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

/// Linear ratio to dB.
pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// dB to linear ratio.
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Pairwise (cascade) summation. The result depends only on the order of
/// `xs`, never on how work was split between threads.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise summation of equally shaped complex matrices.
pub fn pairwise_sum_matrices(xs: &[CMatrix]) -> Option<CMatrix> {
    match xs.len() {
        0 => None,
        1 => Some(xs[0].clone()),
        n => {
            let mid = n / 2;
            let a = pairwise_sum_matrices(&xs[..mid])?;
            let b = pairwise_sum_matrices(&xs[mid..])?;
            Some(a + b)
        }
    }
}

/// Mean and (population) standard deviation with pairwise reduction.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, (pairwise_sum(&dev) / n).sqrt())
}

/// Root of a continuous nonincreasing function `g` on `[0, inf)` with
/// `g(0) > 0`. The upper bracket is doubled until `g` turns nonpositive.
/// Returns the bracket end where `g <= 0` once `|g| <= tol` or the bracket
/// collapses, so the returned point is always on the feasible side.
pub fn bisect_decreasing(mut g: impl FnMut(f64) -> f64, tol: f64) -> Option<f64> {
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 || !hi.is_finite() {
            return None;
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
            if v.abs() <= tol {
                break;
            }
        }
    }
    Some(hi)
}

/// One-sided sign test p-value: probability of at least `successes`
/// successes out of `n` fair coin flips.
pub fn sign_test_p_value(successes: u64, n: u64) -> f64 {
    if successes == 0 {
        return 1.0;
    }
    let b = Binomial::new(0.5, n).expect("valid binomial");
    b.sf(successes - 1)
}

/// Squared Frobenius norm.
pub fn fro2(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// `a^H m` as a row, returned by its squared norm.
pub fn proj_norm2(a: &crate::CVector, m: &CMatrix) -> f64 {
    (a.adjoint() * m).iter().map(|z| z.norm_sqr()).sum()
}

pub(crate) fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_round_trip() {
        assert!((dbm_to_w(30.0) - 1.0).abs() < 1e-12);
        assert!((w_to_dbm(1e-3)).abs() < 1e-12);
        assert!((w_to_dbm(dbm_to_w(-70.0)) + 70.0).abs() < 1e-9);
    }

    #[test]
    fn pairwise_matches_naive_for_small() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-10);
    }

    #[test]
    fn bisection_finds_root() {
        let r = bisect_decreasing(|x| 9.0 / ((1.0 + x) * (1.0 + x)) - 1.0, 1e-13).unwrap();
        assert!((r - 2.0).abs() < 1e-9);
    }

    #[test]
    fn sign_test_threshold() {
        assert!(sign_test_p_value(15, 20) < 0.05);
        assert!(sign_test_p_value(14, 20) > 0.05);
        assert_eq!(sign_test_p_value(0, 20), 1.0);
    }
}
