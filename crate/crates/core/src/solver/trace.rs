use serde::{Deserialize, Serialize};

use crate::numeric::w_to_dbm;

/// One iteration of the solver log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    /// Surrogate sum rate (or the scheme's own objective).
    pub objective: f64,
    pub residuals: [f64; 4],
    /// Mean weighted mainlobe level in dBm.
    pub mainlobe_dbm: f64,
    pub mainlobe_min_dbm: f64,
    pub mainlobe_max_dbm: f64,
    /// Largest nulling level in dBm.
    pub max_null_dbm: f64,
    pub rho: [f64; 4],
}

impl TraceRow {
    pub(crate) fn new(
        iter: usize,
        objective: f64,
        residuals: [f64; 4],
        ml: &[Vec<f64>],
        nl: &[Vec<f64>],
        rho: [f64; 4],
    ) -> Self {
        let flat: Vec<f64> = ml.iter().flatten().copied().collect();
        let (mean, lo, hi) = if flat.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let mean = flat.iter().sum::<f64>() / flat.len() as f64;
            let lo = flat.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = flat.iter().copied().fold(0.0, f64::max);
            (w_to_dbm(mean), w_to_dbm(lo), w_to_dbm(hi))
        };
        let max_null = nl
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        TraceRow {
            iter,
            objective,
            residuals,
            mainlobe_dbm: mean,
            mainlobe_min_dbm: lo,
            mainlobe_max_dbm: hi,
            max_null_dbm: if max_null > 0.0 {
                w_to_dbm(max_null)
            } else {
                crate::metrics::DBM_FLOOR
            },
            rho,
        }
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.objective.is_finite() && self.residuals.iter().all(|r| r.is_finite())
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Per-iteration solver log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// First iteration at which every residual is below `tol`.
    pub fn first_below(&self, tol: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.residuals.iter().all(|x| *x < tol))
            .map(|r| r.iter)
    }

    /// Relative objective change over the last `window` iterations below `tol`.
    pub fn objective_stable(&self, window: usize, tol: f64) -> bool {
        if self.rows.len() <= window {
            return false;
        }
        let last = self.rows[self.rows.len() - 1].objective;
        let scale = last.abs().max(f64::MIN_POSITIVE);
        self.rows[self.rows.len() - 1 - window..self.rows.len() - 1]
            .iter()
            .all(|r| (r.objective - last).abs() / scale < tol)
    }

    /// CSV `iter,surrogate_SE,res1,res2,res3,res4,mainlobe_dBm,max_null_dBm`.
    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("iter,surrogate_SE,res1,res2,res3,res4,mainlobe_dBm,max_null_dBm\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.iter,
                r.objective,
                r.residuals[0],
                r.residuals[1],
                r.residuals[2],
                r.residuals[3],
                r.mainlobe_dbm,
                r.max_null_dbm
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(iter: usize, objective: f64, res: f64) -> TraceRow {
        TraceRow::new(
            iter,
            objective,
            [res; 4],
            &[vec![1e-3]],
            &[vec![1e-6]],
            [1.0; 4],
        )
    }

    #[test]
    fn first_below_reports_the_iteration_number() {
        let t = ConvergenceTrace {
            rows: vec![row(1, 1.0, 1e-2), row(2, 1.0, 1e-6), row(3, 1.0, 1e-7)],
        };
        assert_eq!(t.first_below(1e-5), Some(2));
        assert_eq!(t.first_below(1e-8), None);
        assert_eq!(t.last().unwrap().iter, 3);
    }

    #[test]
    fn stability_needs_a_full_window() {
        let mut t = ConvergenceTrace {
            rows: (1..=5).map(|i| row(i, 2.0, 0.0)).collect(),
        };
        assert!(!t.objective_stable(5, 1e-6));
        t.rows.push(row(6, 2.0 + 1e-9, 0.0));
        assert!(t.objective_stable(5, 1e-6));
        t.rows.push(row(7, 2.1, 0.0));
        assert!(!t.objective_stable(5, 1e-6));
    }

    #[test]
    fn csv_has_one_line_per_row_and_dbm_levels() {
        let t = ConvergenceTrace {
            rows: vec![row(1, 1.5, 0.25)],
        };
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(
            csv.lines().nth(1).unwrap(),
            "1,1.5,0.25,0.25,0.25,0.25,0,-30"
        );
        assert!(t.rows[0].is_finite());
        assert_eq!(t.rows[0].max_residual(), 0.25);
    }
}
