use crate::{CMatrix, CVector, Error, Result, C64};

/// Sparse selector `Lambda_{m,n}` of the windowed cyclic estimator, so that
/// `r^H Lambda r` equals the windowed sum at `(m, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectorMatrix {
    size: usize,
    /// `(row, col, value)` triples; rows index the conjugated sample.
    entries: Vec<(usize, usize, C64)>,
}

/// Zero-based window offsets `-floor(W/2) .. -floor(W/2) + W - 1`.
pub(crate) fn window_offsets(window: usize) -> impl Iterator<Item = isize> {
    let start = -((window / 2) as isize);
    (0..window as isize).map(move |i| start + i)
}

/// Valid `(m, n)` ranges: `m in 0..=N-W`, `n in {0, 2, .., N-W}`.
pub fn index_sets(n_samples: usize, window: usize) -> (Vec<usize>, Vec<usize>) {
    let top = n_samples.saturating_sub(window);
    ((0..=top).collect(), (0..=top).step_by(2).collect())
}

impl SelectorMatrix {
    /// Build `Lambda_{m,n}` for an `N`-sample record and window `W`.
    /// Indices `m -/+ n/2 + w` wrap modulo `N`.
    pub fn new(m: usize, n: usize, n_samples: usize, window: usize) -> Result<Self> {
        if window == 0 || window > n_samples {
            return Err(Error::InvalidArgument(format!(
                "window {window} invalid for N = {n_samples}"
            )));
        }
        let top = n_samples - window;
        if m > top || n > top || !n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "(m, n) = ({m}, {n}) outside index sets for N = {n_samples}, W = {window}"
            )));
        }
        let modn = |x: isize| x.rem_euclid(n_samples as isize) as usize;
        let weight = C64::new(1.0 / window as f64, 0.0);
        let half = (n / 2) as isize;
        let mut entries: Vec<(usize, usize, C64)> = Vec::with_capacity(window);
        for w in window_offsets(window) {
            let a = modn(m as isize - half + w);
            let b = modn(m as isize + half + w);
            match entries.iter_mut().find(|(r, c, _)| *r == a && *c == b) {
                Some(e) => e.2 += weight,
                None => entries.push((a, b, weight)),
            }
        }
        Ok(SelectorMatrix {
            size: n_samples,
            entries,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn dense(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.size, self.size);
        for (a, b, v) in &self.entries {
            out[(*a, *b)] += v;
        }
        out
    }

    /// `r^H Lambda r`.
    pub fn quadratic_form(&self, r: &CVector) -> C64 {
        self.entries
            .iter()
            .map(|(a, b, v)| r[*a].conj() * v * r[*b])
            .sum()
    }

    /// `Tr{Lambda S}` for a dense `S`.
    pub fn trace_product(&self, s: &CMatrix) -> C64 {
        self.entries.iter().map(|(a, b, v)| v * s[(*b, *a)]).sum()
    }
}
