//! Feasibility restoration: a damped Gauss-Newton correction of the analog
//! phases and digital precoders onto the active constraints.

use nalgebra::{DMatrix, DVector};

use super::{MainlobeRule, SteeringBank};
use crate::metrics::{AnalogBeamformer, BeamformerPair};
use crate::numeric::fro2;
use crate::signal_model::DesignConstraints;
use crate::{CMatrix, CVector, C64};

const MAX_STEPS: usize = 20000;
const REL_TOL: f64 = 1e-9;
const ACTIVE_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Equal,
    AtLeast,
    AtMost,
}

/// `||a^H X_k||^2` (or `||X_k||^2` when `dir` is `None`) compared with `target`.
struct Quad<'a> {
    k: usize,
    dir: Option<&'a CVector>,
    target: f64,
    kind: Kind,
}

impl Quad<'_> {
    fn violation(&self, v: f64) -> f64 {
        let scale = self.target.max(f64::MIN_POSITIVE);
        match self.kind {
            Kind::Equal => (v - self.target).abs() / scale,
            Kind::AtLeast => ((self.target - v) / scale).max(0.0),
            Kind::AtMost => ((v - self.target) / scale).max(0.0),
        }
    }
}

struct Layout {
    phases: usize,
    rf: usize,
    users: usize,
}

impl Layout {
    fn digital(&self, k: usize, j: usize, u: usize) -> usize {
        self.phases + k * 2 * self.rf * self.users + 2 * (j * self.users + u)
    }

    fn len(&self, subcarriers: usize) -> usize {
        self.phases + subcarriers * 2 * self.rf * self.users
    }
}

fn value(q: &Quad, x: &CMatrix) -> f64 {
    match q.dir {
        Some(a) => (a.adjoint() * x).norm_squared(),
        None => fro2(x),
    }
}

/// Gradient row of one constraint with respect to the real parameters.
fn gradient(q: &Quad, f: &CMatrix, fk: &CMatrix, x: &CMatrix, layout: &Layout, out: &mut [f64]) {
    let j_unit = C64::new(0.0, 1.0);
    let (mt, rf) = f.shape();
    match q.dir {
        Some(a) => {
            let r = a.adjoint() * x;
            let w = f.adjoint() * a;
            for j in 0..rf {
                for u in 0..layout.users {
                    let d = r[u].conj() * w[j].conj();
                    let idx = layout.digital(q.k, j, u);
                    out[idx] = 2.0 * d.re;
                    out[idx + 1] = 2.0 * (d * j_unit).re;
                }
            }
            if layout.phases > 0 {
                for i in 0..mt {
                    for j in 0..rf {
                        let mut s = C64::new(0.0, 0.0);
                        for u in 0..layout.users {
                            s += r[u].conj() * fk[(j, u)];
                        }
                        out[i * rf + j] = 2.0 * (s * a[i].conj() * j_unit * f[(i, j)]).re;
                    }
                }
            }
        }
        None => {
            for j in 0..rf {
                for u in 0..layout.users {
                    let mut d = C64::new(0.0, 0.0);
                    for i in 0..mt {
                        d += x[(i, u)].conj() * f[(i, j)];
                    }
                    let idx = layout.digital(q.k, j, u);
                    out[idx] = 2.0 * d.re;
                    out[idx + 1] = 2.0 * (d * j_unit).re;
                }
            }
            if layout.phases > 0 {
                for i in 0..mt {
                    for j in 0..rf {
                        let mut s = C64::new(0.0, 0.0);
                        for u in 0..layout.users {
                            s += x[(i, u)].conj() * fk[(j, u)];
                        }
                        out[i * rf + j] = 2.0 * (s * j_unit * f[(i, j)]).re;
                    }
                }
            }
        }
    }
}

fn apply_step(bf: &BeamformerPair, step: &DVector<f64>, layout: &Layout) -> BeamformerPair {
    let mut next = bf.clone();
    if let AnalogBeamformer::Phases(ref mut p) = next.analog {
        for i in 0..p.nrows() {
            for j in 0..layout.rf {
                p[(i, j)] += step[i * layout.rf + j];
            }
        }
    }
    for (k, fk) in next.digital.iter_mut().enumerate() {
        for j in 0..layout.rf {
            for u in 0..layout.users {
                let idx = layout.digital(k, j, u);
                fk[(j, u)] += C64::new(step[idx], step[idx + 1]);
            }
        }
    }
    next
}

fn max_violation(quads: &[Quad], xs: &[CMatrix]) -> f64 {
    quads
        .iter()
        .map(|q| q.violation(value(q, &xs[q.k])))
        .fold(0.0, f64::max)
}

/// Squared relative equality residuals plus squared one-sided violations.
fn merit(quads: &[Quad], xs: &[CMatrix]) -> f64 {
    quads
        .iter()
        .map(|q| {
            let e = q.violation(value(q, &xs[q.k]));
            e * e
        })
        .sum()
}

/// Move the beamformer onto the mainlobe, nulling and power constraints by
/// Levenberg-Marquardt steps in (phases, digital) space. A non-converged run
/// still replaces the input when it lowers the worst violation; returns
/// whether every constraint was met to the relative tolerance.
pub fn restore_feasibility(
    bf: &mut BeamformerPair,
    bank: &SteeringBank,
    constraints: &DesignConstraints,
    mainlobe: MainlobeRule,
    nulling: bool,
) -> bool {
    let mut quads = Vec::new();
    for k in 0..bf.subcarriers() {
        if mainlobe != MainlobeRule::Off {
            let kind = if mainlobe == MainlobeRule::Floor {
                Kind::AtLeast
            } else {
                Kind::Equal
            };
            let target = constraints.eta / constraints.varpi_k[k];
            for a in &bank.mainlobe[k] {
                quads.push(Quad {
                    k,
                    dir: Some(a),
                    target,
                    kind,
                });
            }
        }
        // a zero threshold is met exactly by the nulling projection already
        if nulling && constraints.zeta_k[k] > 0.0 {
            for a in &bank.nulls[k] {
                quads.push(Quad {
                    k,
                    dir: Some(a),
                    target: constraints.zeta_k[k],
                    kind: Kind::AtMost,
                });
            }
        }
        quads.push(Quad {
            k,
            dir: None,
            target: constraints.power_k[k],
            kind: Kind::AtMost,
        });
    }
    let layout = Layout {
        phases: if bf.is_analog_feasible() {
            bf.tx_antennas() * bf.rf_chains()
        } else {
            0
        },
        rf: bf.rf_chains(),
        users: bf.users(),
    };
    let n_var = layout.len(bf.subcarriers());

    let initial = max_violation(&quads, &bf.precoders());
    let mut cur = bf.clone();
    let mut mu = 1e-9;
    for _ in 0..MAX_STEPS {
        let f = cur.analog.matrix();
        let xs = cur.precoders();
        let viol = max_violation(&quads, &xs);
        if viol <= REL_TOL {
            *bf = cur;
            return true;
        }
        // equalities plus inequalities that are violated or nearly tight
        let rows: Vec<usize> = (0..quads.len())
            .filter(|&i| {
                let q = &quads[i];
                let v = value(q, &xs[q.k]);
                match q.kind {
                    Kind::Equal => true,
                    Kind::AtMost => v >= q.target * (1.0 - ACTIVE_MARGIN),
                    Kind::AtLeast => v <= q.target * (1.0 + ACTIVE_MARGIN),
                }
            })
            .collect();
        let mut jac = DMatrix::<f64>::zeros(rows.len(), n_var);
        let mut resid = DVector::<f64>::zeros(rows.len());
        let mut buf = vec![0.0; n_var];
        for (r, qi) in rows.iter().enumerate() {
            let q = &quads[*qi];
            buf.iter_mut().for_each(|x| *x = 0.0);
            gradient(q, &f, &cur.digital[q.k], &xs[q.k], &layout, &mut buf);
            let scale = q.target.max(f64::MIN_POSITIVE);
            buf.iter_mut().for_each(|x| *x /= scale);
            jac.row_mut(r).copy_from_slice(&buf);
            resid[r] = (q.target - value(q, &xs[q.k])) / scale;
        }
        let gram = &jac * jac.transpose();
        let base = merit(&quads, &xs);
        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = gram.clone();
            let shift = mu * gram.diagonal().max().max(f64::MIN_POSITIVE);
            for i in 0..rows.len() {
                damped[(i, i)] += shift;
            }
            let Some(chol) = damped.cholesky() else {
                mu *= 4.0;
                continue;
            };
            let step = jac.transpose() * chol.solve(&resid);
            let cand = apply_step(&cur, &step, &layout);
            let next = merit(&quads, &cand.precoders());
            if next < base {
                // gain ratio of actual to linearised decrease on the active rows
                let lin = &resid - &jac * &step;
                let predicted = resid.norm_squared() - lin.norm_squared();
                let ratio = (base - next) / predicted.max(f64::MIN_POSITIVE);
                cur = cand;
                accepted = true;
                if ratio > 0.75 {
                    mu = (mu / 3.0).max(1e-15);
                } else if ratio < 0.25 {
                    mu *= 2.0;
                }
                break;
            }
            mu *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    // keep a partial correction when it strictly reduces the worst violation
    if max_violation(&quads, &cur.precoders()) < initial {
        *bf = cur;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{instance, ExperimentSpec, TrialSeeds};
    use crate::metrics::{null_levels, weighted_mainlobe_levels};
    use crate::numeric::fro2;
    use crate::signal_model::Profile;
    use crate::solver::{solve, SolverConfig};

    #[test]
    fn raw_iterate_is_pulled_onto_the_constraints() {
        let spec = ExperimentSpec::for_profile(Profile::Desk);
        let inst = instance(&spec, f64::NAN, TrialSeeds::derive(spec.seed, 4)).unwrap();
        let (sc, c) = (&inst.scenario, &inst.constraints);
        let cfg = SolverConfig {
            restore: false,
            max_iters: 150,
            ..inst.solver.clone()
        };
        let mut bf = solve(sc, c, &cfg).unwrap().bf;
        let bank = SteeringBank::new(sc, c);
        assert!(restore_feasibility(
            &mut bf,
            &bank,
            c,
            MainlobeRule::Equality,
            true
        ));
        let xs = bf.precoders();
        for level in weighted_mainlobe_levels(&xs, c, &sc.system)
            .into_iter()
            .flatten()
        {
            assert!((level - c.eta).abs() <= 1e-6 * c.eta);
        }
        for level in null_levels(&xs, c, &sc.system).into_iter().flatten() {
            assert!(level <= c.zeta_k[0] * (1.0 + 1e-6));
        }
        for (x, p) in xs.iter().zip(&c.power_k) {
            assert!(fro2(x) <= p * (1.0 + 1e-6));
        }
        assert!(bf.is_analog_feasible());
    }

    #[test]
    fn feasible_point_is_left_alone() {
        let spec = ExperimentSpec::for_profile(Profile::Desk);
        let inst = instance(&spec, f64::NAN, TrialSeeds::derive(spec.seed, 1)).unwrap();
        let (sc, c) = (&inst.scenario, &inst.constraints);
        let mut bf = solve(sc, c, &inst.solver).unwrap().bf;
        let before = bf.clone();
        let bank = SteeringBank::new(sc, c);
        assert!(restore_feasibility(
            &mut bf,
            &bank,
            c,
            MainlobeRule::Equality,
            true
        ));
        assert_eq!(bf, before);
    }
}
