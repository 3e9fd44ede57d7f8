//! Figure-data experiments and their CSV / JSON / SVG emission.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiment::{instance, ExperimentSpec, RunRecord, TrialSeeds, METRIC_NAMES};
use super::plot::{heatmap, line_chart, Series};
use super::schemes::{run_scheme, Scheme};
use crate::cyclo::{
    awgn_ergodic_spectrum, ergodic_cyclic_spectrum, flatness_r_xi, flatness_score, intercept_gains,
    monte_carlo_cyclic_mean, r_xi_matrix, CyclicSpectrum, FlatnessInput, SPECTRUM_FLOOR_DB,
};
use crate::metrics::SpectrumMap;
use crate::numeric::w_to_dbm;
use crate::solver::ConvergenceTrace;
use crate::{Error, Result};

fn write(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("record serializes")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per (point, scheme): `value,scheme,count,<metric>_mean,<metric>_std,...`.
pub fn sweep_csv(record: &RunRecord) -> String {
    let axis = record
        .spec
        .sweep
        .as_ref()
        .map(|s| s.axis.name())
        .unwrap_or("point");
    let mut s = format!("{axis},scheme,count");
    for m in METRIC_NAMES {
        let _ = write!(s, ",{m}_mean,{m}_std");
    }
    s.push('\n');
    for a in &record.aggregates {
        let _ = write!(s, "{},{},{}", a.value, a.scheme, a.count);
        for m in METRIC_NAMES {
            let st = a.metrics[m];
            let _ = write!(s, ",{},{}", st.mean, st.std);
        }
        s.push('\n');
    }
    s
}

/// One row per (point, trial, scheme).
pub fn trials_csv(record: &RunRecord) -> String {
    let axis = record
        .spec
        .sweep
        .as_ref()
        .map(|s| s.axis.name())
        .unwrap_or("point");
    let mut s = format!("{axis},scheme,trial,seed");
    for m in METRIC_NAMES {
        let _ = write!(s, ",{m}");
    }
    s.push_str(",converged,restored,iterations,factorization_residual\n");
    for t in &record.trials {
        let _ = write!(s, "{},{},{},{}", t.value, t.scheme, t.trial, t.seed);
        for v in t.values() {
            let _ = write!(s, ",{v}");
        }
        let _ = writeln!(
            s,
            ",{},{},{},{}",
            t.converged,
            t.restored,
            t.iterations,
            opt(t.factorization_residual)
        );
    }
    s
}

/// Residual panel: `iter,objective,res1,res2,res3,res4`.
pub fn fig3a_csv(trace: &ConvergenceTrace) -> String {
    let mut s = String::from("iter,objective,res1,res2,res3,res4\n");
    for r in &trace.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.iter, r.objective, r.residuals[0], r.residuals[1], r.residuals[2], r.residuals[3]
        );
    }
    s
}

/// Constraint panel: `iter,mainlobe_dBm,mainlobe_min_dBm,mainlobe_max_dBm,max_null_dBm`.
pub fn fig3b_csv(trace: &ConvergenceTrace) -> String {
    let mut s = String::from("iter,mainlobe_dBm,mainlobe_min_dBm,mainlobe_max_dBm,max_null_dBm\n");
    for r in &trace.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.iter, r.mainlobe_dbm, r.mainlobe_min_dbm, r.mainlobe_max_dbm, r.max_null_dbm
        );
    }
    s
}

/// Write the sweep tables, representative traces, the JSON record and plots.
pub fn emit_figures(record: &RunRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    write(dir, "sweep.csv", &sweep_csv(record), &mut written)?;
    if record.spec.dump_trials {
        write(dir, "trials.csv", &trials_csv(record), &mut written)?;
    }
    for t in &record.traces {
        write(
            dir,
            &format!("trace_{}_p{}.csv", t.scheme, t.point),
            &t.trace.to_csv(),
            &mut written,
        )?;
    }
    write(dir, "record.json", &json(record), &mut written)?;
    if let Some(sweep) = &record.spec.sweep {
        for metric in ["se", "radar_sinr_db", "iml_dbm", "flatness"] {
            let series: Vec<Series> = record
                .spec
                .schemes
                .iter()
                .map(|&scheme| Series {
                    label: scheme.to_string(),
                    points: record
                        .aggregates
                        .iter()
                        .filter(|a| a.scheme == scheme)
                        .map(|a| (a.value, a.metrics[metric].mean))
                        .collect(),
                })
                .collect();
            let path = dir.join(format!("sweep_{metric}.svg"));
            line_chart(
                &path,
                &format!("{metric} vs {}", sweep.axis),
                sweep.axis.name(),
                metric,
                &series,
                false,
            )?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Solve trial 0 of the spec with one scheme and return its log.
pub fn convergence_experiment(spec: &ExperimentSpec, scheme: Scheme) -> Result<ConvergenceTrace> {
    spec.validate()?;
    let value = spec.points()[0];
    let inst = instance(spec, value, TrialSeeds::derive(spec.seed, 0))?;
    Ok(run_scheme(scheme, &inst.scenario, &inst.constraints, &inst.solver)?.trace)
}

pub fn emit_convergence(trace: &ConvergenceTrace, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    write(dir, "fig3a.csv", &fig3a_csv(trace), &mut written)?;
    write(dir, "fig3b.csv", &fig3b_csv(trace), &mut written)?;
    let it = |f: &dyn Fn(&crate::solver::TraceRow) -> f64| -> Vec<(f64, f64)> {
        trace.rows.iter().map(|r| (r.iter as f64, f(r))).collect()
    };
    let residuals: Vec<Series> = (0..4)
        .map(|i| Series {
            label: format!("res{}", i + 1),
            points: it(&|r| r.residuals[i]),
        })
        .collect();
    let path = dir.join("fig3a.svg");
    line_chart(
        &path,
        "residuals",
        "iteration",
        "residual",
        &residuals,
        true,
    )?;
    written.push(path);
    let levels = vec![
        Series {
            label: "weighted mainlobe (dBm)".into(),
            points: it(&|r| r.mainlobe_dbm),
        },
        Series {
            label: "max null (dBm)".into(),
            points: it(&|r| r.max_null_dbm),
        },
    ];
    let path = dir.join("fig3b.svg");
    line_chart(
        &path,
        "constraint levels",
        "iteration",
        "dBm",
        &levels,
        false,
    )?;
    written.push(path);
    Ok(written)
}

/// Transmit spectra of trial 0 for every scheme of the spec.
pub fn spectra_experiment(spec: &ExperimentSpec) -> Result<Vec<(Scheme, SpectrumMap)>> {
    spec.validate()?;
    let inst = instance(spec, spec.points()[0], TrialSeeds::derive(spec.seed, 0))?;
    let angles = SpectrumMap::default_angles();
    spec.schemes
        .iter()
        .map(|&scheme| {
            let out = run_scheme(scheme, &inst.scenario, &inst.constraints, &inst.solver)?;
            Ok((
                scheme,
                SpectrumMap::evaluate(&out.bf, &inst.scenario.system, &angles),
            ))
        })
        .collect()
}

pub fn emit_spectra(maps: &[(Scheme, SpectrumMap)], dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let mut series = Vec::new();
    for (scheme, map) in maps {
        write(
            dir,
            &format!("spectrum_{scheme}.csv"),
            &map.to_csv(),
            &mut written,
        )?;
        let points = map
            .angles_deg
            .iter()
            .zip(&map.power)
            .map(|(a, row)| {
                (
                    *a,
                    w_to_dbm(row.iter().sum::<f64>() / row.len().max(1) as f64)
                        .max(crate::metrics::DBM_FLOOR),
                )
            })
            .collect();
        series.push(Series {
            label: scheme.to_string(),
            points,
        });
    }
    let path = dir.join("spectra.svg");
    line_chart(
        &path,
        "subcarrier-averaged transmit spectrum",
        "angle (deg)",
        "dBm",
        &series,
        false,
    )?;
    written.push(path);
    Ok(written)
}

/// Cyclic-spectrum view of one scheme.
#[derive(Debug, Clone)]
pub struct CyclicEntry {
    pub scheme: Scheme,
    pub ergodic: CyclicSpectrum,
    /// Monte-Carlo mean over `spec.trials` BPSK draws.
    pub monte_carlo: CyclicSpectrum,
    pub flatness_r_xi: f64,
    pub flatness_spectrum: f64,
}

#[derive(Debug, Clone)]
pub struct CyclicRecord {
    pub entries: Vec<CyclicEntry>,
    pub awgn: CyclicSpectrum,
}

/// Ergodic and Monte-Carlo cyclic spectra of trial 0 for every scheme.
pub fn cyclic_experiment(spec: &ExperimentSpec) -> Result<CyclicRecord> {
    spec.validate()?;
    let seeds = TrialSeeds::derive(spec.seed, 0);
    let inst = instance(spec, spec.points()[0], seeds)?;
    let sc = &inst.scenario;
    let mut entries = Vec::new();
    for &scheme in &spec.schemes {
        let out = run_scheme(scheme, sc, &inst.constraints, &inst.solver)?;
        let ergodic = ergodic_cyclic_spectrum(&out.bf, sc)?;
        let monte_carlo = monte_carlo_cyclic_mean(&out.bf, sc, spec.trials, seeds.csi)?;
        let flat_r = flatness_r_xi(&r_xi_matrix(&intercept_gains(&out.bf, sc)?, &sc.system)?)?;
        let flat_s = flatness_score(FlatnessInput::Spectrum(&ergodic))?;
        entries.push(CyclicEntry {
            scheme,
            ergodic,
            monte_carlo,
            flatness_r_xi: flat_r,
            flatness_spectrum: flat_s,
        });
    }
    let awgn = awgn_ergodic_spectrum(sc.sigma2_ez, &sc.system)?;
    Ok(CyclicRecord { entries, awgn })
}

fn cyclic_heatmap(path: &Path, title: &str, c: &CyclicSpectrum) -> Result<()> {
    let db = c.magnitude_db(SPECTRUM_FLOOR_DB);
    let xs: Vec<f64> = c.n_set.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = c.m_set.iter().map(|&m| m as f64).collect();
    let z: Vec<Vec<f64>> = (0..db.nrows())
        .map(|i| (0..db.ncols()).map(|j| db[(i, j)].re).collect())
        .collect();
    heatmap(
        path,
        title,
        "n (cyclic bin)",
        "m (frequency bin)",
        &xs,
        &ys,
        &z,
        SPECTRUM_FLOOR_DB,
        0.0,
    )
}

pub fn emit_cyclic(record: &CyclicRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let mut flat = String::from("scheme,flatness_r_xi,flatness_spectrum\n");
    for e in &record.entries {
        write(
            dir,
            &format!("cyclic_{}.csv", e.scheme),
            &e.ergodic.to_csv(),
            &mut written,
        )?;
        write(
            dir,
            &format!("cyclic_{}_mc.csv", e.scheme),
            &e.monte_carlo.to_csv(),
            &mut written,
        )?;
        let _ = writeln!(
            flat,
            "{},{},{}",
            e.scheme, e.flatness_r_xi, e.flatness_spectrum
        );
        let path = dir.join(format!("cyclic_{}.svg", e.scheme));
        cyclic_heatmap(&path, &format!("cyclic spectrum, {}", e.scheme), &e.ergodic)?;
        written.push(path);
    }
    write(dir, "cyclic_awgn.csv", &record.awgn.to_csv(), &mut written)?;
    write(dir, "flatness.csv", &flat, &mut written)?;
    let path = dir.join("cyclic_awgn.svg");
    cyclic_heatmap(&path, "cyclic spectrum, AWGN", &record.awgn)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::experiment::{Sweep, SweepAxis};
    use crate::harness::run_experiment;

    fn quick_spec() -> ExperimentSpec {
        let mut spec = ExperimentSpec {
            trials: 2,
            schemes: vec![Scheme::Proposed, Scheme::CommOnly],
            ..Default::default()
        };
        spec.solver.max_iters = 30;
        spec
    }

    #[test]
    fn sweep_tables_have_one_row_per_entry() {
        let mut spec = quick_spec();
        spec.dump_trials = true;
        spec.sweep = Some(Sweep {
            axis: SweepAxis::PowerDbm,
            values: vec![28.0, 30.0],
        });
        let rec = run_experiment(&spec).unwrap();
        let sweep = sweep_csv(&rec);
        assert_eq!(sweep.lines().count(), 1 + 2 * 2);
        assert!(sweep.starts_with("power_dbm,scheme,count,se_mean,se_std"));
        assert_eq!(trials_csv(&rec).lines().count(), 1 + 2 * 2 * 2);
        let dir = tempfile::tempdir().unwrap();
        let files = emit_figures(&rec, dir.path()).unwrap();
        assert!(files.iter().any(|p| p.ends_with("trials.csv")));
        assert!(files.iter().any(|p| p.ends_with("sweep_se.svg")));
        assert!(files
            .iter()
            .any(|p| p.ends_with("trace_proposed-hbf_p1.csv")));
    }

    #[test]
    fn convergence_panels_share_iterations() {
        let trace = convergence_experiment(&quick_spec(), Scheme::Proposed).unwrap();
        let a = fig3a_csv(&trace);
        let b = fig3b_csv(&trace);
        assert!(a.starts_with("iter,objective,res1,res2,res3,res4\n"));
        assert_eq!(a.lines().count(), b.lines().count());
        assert_eq!(a.lines().count(), trace.len() + 1);
    }

    #[test]
    fn cyclic_outputs_follow_the_spectrum_format() {
        let rec = cyclic_experiment(&quick_spec()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_cyclic(&rec, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("cyclic_proposed-hbf.csv")).unwrap();
        assert!(text.starts_with("# f_s="));
        assert!(text.contains("m,n,re,im,magnitude_dB"));
        let flat = std::fs::read_to_string(dir.path().join("flatness.csv")).unwrap();
        assert_eq!(flat.lines().count(), 3);
    }
}
