//! Closed-form block updates of the augmented-Lagrangian iteration.

use nalgebra::DMatrix;

use super::{MainlobeRule, SolverState, SteeringBank, WmmseAux};
use crate::metrics::AnalogBeamformer;
use crate::numeric::{bisect_decreasing, cis, fro2};
use crate::signal_model::{DesignConstraints, Scenario};
use crate::{CMatrix, CVector, Error, Result, C64};

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Projection of `b / c` onto `||Y||^2 <= budget` along the ray: returns
/// `b / (c + 2 chi)` with the smallest `chi >= 0` that is feasible.
pub fn power_projection(b: &CMatrix, c: f64, budget: f64, tol: f64) -> Result<(CMatrix, f64)> {
    let nb = fro2(b);
    if nb / (c * c) <= budget {
        return Ok((b / real(c), 0.0));
    }
    let chi = bisect_decreasing(
        |chi| nb / ((c + 2.0 * chi) * (c + 2.0 * chi)) - budget,
        tol * budget,
    )
    .ok_or_else(|| Error::Internal("power multiplier bisection failed to bracket".into()))?;
    Ok((b / real(c + 2.0 * chi), chi))
}

/// Y block: weighted consensus of all copies, projected on the power budget.
pub fn update_y(
    state: &mut SolverState,
    constraints: &DesignConstraints,
    bisection_tol: f64,
) -> Result<()> {
    let xs = state.bf.precoders();
    let [r1, r2, r3, r4] = state.rho;
    for k in 0..state.y.len() {
        let mut b = (&xs[k] - &state.d1[k]) * real(r1);
        for (v, d) in state.v[k].iter().zip(&state.d2[k]) {
            b += (v + d) * real(r2);
        }
        for (g, d) in state.g[k].iter().zip(&state.d3[k]) {
            b += (g + d) * real(r3);
        }
        for (t, d) in state.t[k].iter().zip(&state.d4[k]) {
            b += (t + d) * real(r4);
        }
        let c = r1
            + state.v[k].len() as f64 * r2
            + state.g[k].len() as f64 * r3
            + state.t[k].len() as f64 * r4;
        state.y[k] = power_projection(&b, c, constraints.power_k[k], bisection_tol)?.0;
    }
    Ok(())
}

/// Closest matrix to `z` with `||a^H V||^2 = level` (unit-norm `a`).
pub fn mainlobe_equality(z: &CMatrix, a: &CVector, level: f64) -> CMatrix {
    let proj = a.adjoint() * z;
    let n = proj.norm();
    let target = level.sqrt();
    if n <= f64::MIN_POSITIVE {
        // no component along a: inject one along a with a fixed row selector
        let mut out = z.clone();
        for i in 0..z.nrows() {
            out[(i, 0)] += a[i] * target;
        }
        return out;
    }
    z - (a * &proj) * real(1.0 - target / n)
}

/// Closest matrix to `z` with `||a^H V||^2 >= level`.
pub fn mainlobe_floor(z: &CMatrix, a: &CVector, level: f64) -> CMatrix {
    if (a.adjoint() * z).norm_squared() >= level {
        z.clone()
    } else {
        mainlobe_equality(z, a, level)
    }
}

/// V block.
pub fn update_v(
    state: &mut SolverState,
    bank: &SteeringBank,
    constraints: &DesignConstraints,
    rule: MainlobeRule,
) {
    for k in 0..state.v.len() {
        let level = constraints.eta / constraints.varpi_k[k];
        for m in 0..state.v[k].len() {
            let z = &state.y[k] - &state.d2[k][m];
            let a = &bank.mainlobe[k][m];
            state.v[k][m] = match rule {
                MainlobeRule::Floor => mainlobe_floor(&z, a, level),
                _ => mainlobe_equality(&z, a, level),
            };
        }
    }
}

/// Closest matrix to `z` with `||a^H G||^2 <= zeta` (unit-norm `a`).
pub fn null_projection(z: &CMatrix, a: &CVector, zeta: f64, tol: f64) -> Result<CMatrix> {
    let proj = a.adjoint() * z;
    let p2 = proj.norm_squared();
    if p2 <= zeta {
        return Ok(z.clone());
    }
    let shrink = if zeta == 0.0 {
        1.0
    } else {
        let lambda = bisect_decreasing(|l| p2 / ((1.0 + l) * (1.0 + l)) - zeta, tol * zeta)
            .ok_or_else(|| {
                Error::Internal("nulling multiplier bisection failed to bracket".into())
            })?;
        lambda / (1.0 + lambda)
    };
    Ok(z - (a * &proj) * real(shrink))
}

/// G block.
pub fn update_g(
    state: &mut SolverState,
    bank: &SteeringBank,
    constraints: &DesignConstraints,
    bisection_tol: f64,
) -> Result<()> {
    for k in 0..state.g.len() {
        for s in 0..state.g[k].len() {
            let z = &state.y[k] - &state.d3[k][s];
            state.g[k][s] =
                null_projection(&z, &bank.nulls[k][s], constraints.zeta_k[k], bisection_tol)?;
        }
    }
    Ok(())
}

/// Solve `(alpha h h^H + rho I) T = rhs` by the rank-one inverse identity.
pub fn rank_one_solve(h: &CVector, alpha: f64, rho: f64, rhs: &CMatrix) -> CMatrix {
    let hh = h.norm_squared();
    let coeff = alpha / (rho + alpha * hh);
    let hr = h.adjoint() * rhs;
    (rhs - (h * hr) * real(coeff)) / real(rho)
}

/// T block for the weighted-MSE objective.
pub fn update_t(state: &mut SolverState, aux: &WmmseAux, scenario: &Scenario) {
    let rho4 = state.rho[3];
    for k in 0..state.t.len() {
        for u in 0..state.t[k].len() {
            let h = &scenario.channels[k][u];
            let kappa = aux.kappa[k][u];
            let omega = aux.omega[k][u];
            let alpha = 2.0 * kappa.norm_sqr() * omega;
            let mut rhs = (&state.y[k] - &state.d4[k][u]) * real(rho4);
            let gain = kappa.conj() * (2.0 * omega);
            for i in 0..h.len() {
                rhs[(i, u)] += h[i] * gain;
            }
            state.t[k][u] = rank_one_solve(h, alpha, rho4, &rhs);
        }
    }
}

/// T block for the mainlobe-gain objective `-(gamma/U) sum_m ||a_m^H T||^2`,
/// with `gamma` tied to `rho4` so the subproblem stays strongly convex.
pub fn update_t_gain(state: &mut SolverState, bank: &SteeringBank) -> Result<()> {
    let rho4 = state.rho[3];
    for k in 0..state.t.len() {
        let mt = state.y[k].nrows();
        let mut r = CMatrix::zeros(mt, mt);
        for a in &bank.mainlobe[k] {
            r += a * a.adjoint();
        }
        let lmax = r.clone().symmetric_eigenvalues().max();
        if !(lmax > 0.0) {
            continue;
        }
        // rho4 I - rho4/(2 lmax) R: eigenvalues in [rho4/2, rho4]
        let m = CMatrix::identity(mt, mt) * real(rho4) - r * real(rho4 / (2.0 * lmax));
        let inv = m
            .try_inverse()
            .ok_or_else(|| Error::Internal("mainlobe-gain system is singular".into()))?;
        for u in 0..state.t[k].len() {
            let z = &state.y[k] - &state.d4[k][u];
            state.t[k][u] = &inv * z * real(rho4);
        }
    }
    Ok(())
}

/// Least-squares digital precoder `(F^H F)^{-1} F^H Z`; a `1e-10` ridge
/// (relative to the Gram trace) is added when `F` is rank deficient.
pub fn least_squares_digital(f: &CMatrix, z: &CMatrix) -> CMatrix {
    let gram = f.adjoint() * f;
    let rhs = f.adjoint() * z;
    if let Some(ch) = gram.clone().cholesky() {
        let sol = ch.solve(&rhs);
        if sol.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
            return sol;
        }
    }
    log::warn!("analog precoder is rank deficient; using a ridge-regularised solve");
    let n = gram.nrows();
    let ridge = 1e-10 * gram.trace().re.max(f64::MIN_POSITIVE);
    let reg = gram + CMatrix::identity(n, n) * real(ridge);
    match reg.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => {
            reg.pseudo_inverse(0.0)
                .expect("pseudo-inverse with zero epsilon")
                * rhs
        }
    }
}

/// F_k block: `F_k = argmin ||Y_k + D1_k - F_RF F_k||`.
pub fn update_fk(state: &mut SolverState) {
    let f = state.bf.analog.matrix();
    for k in 0..state.y.len() {
        let z = &state.y[k] + &state.d1[k];
        state.bf.digital[k] = least_squares_digital(&f, &z);
    }
}

/// `sum_k ||Z_k - F F_k||^2`.
pub fn factorization_objective(f: &CMatrix, targets: &[CMatrix], digital: &[CMatrix]) -> f64 {
    targets
        .iter()
        .zip(digital)
        .map(|(z, fk)| fro2(&(z - f * fk)))
        .sum()
}

/// Cyclic coordinate descent on the phases of `F` for
/// `sum_k ||Z_k - F F_k||^2`, entries visited row-major. A zero linear
/// coefficient keeps the previous phase.
pub fn ccd_phases(
    phases: &mut DMatrix<f64>,
    targets: &[CMatrix],
    digital: &[CMatrix],
    sweeps: usize,
) {
    let (rows, cols) = phases.shape();
    let f = phases.map(cis);
    let mut resid: Vec<CMatrix> = targets
        .iter()
        .zip(digital)
        .map(|(z, fk)| z - &f * fk)
        .collect();
    let col_energy: Vec<f64> = (0..cols)
        .map(|j| digital.iter().map(|fk| fk.row(j).norm_squared()).sum())
        .collect();
    for _ in 0..sweeps {
        for i in 0..rows {
            for j in 0..cols {
                let old = cis(phases[(i, j)]);
                let mut g = old * col_energy[j];
                for (e, fk) in resid.iter().zip(digital) {
                    for u in 0..fk.ncols() {
                        g += e[(i, u)] * fk[(j, u)].conj();
                    }
                }
                if g.norm() == 0.0 {
                    continue;
                }
                let phase = g.arg();
                let delta = cis(phase) - old;
                phases[(i, j)] = phase;
                for (e, fk) in resid.iter_mut().zip(digital) {
                    for u in 0..fk.ncols() {
                        e[(i, u)] -= delta * fk[(j, u)];
                    }
                }
            }
        }
    }
}

/// F_RF block (skipped for an unconstrained analog precoder).
pub fn update_frf(state: &mut SolverState, sweeps: usize) {
    if let AnalogBeamformer::Phases(ref mut phases) = state.bf.analog {
        let targets: Vec<CMatrix> = state.y.iter().zip(&state.d1).map(|(y, d)| y + d).collect();
        ccd_phases(phases, &targets, &state.bf.digital, sweeps);
    }
}

/// Scaled dual ascent.
pub fn update_duals(state: &mut SolverState) {
    let xs = state.bf.precoders();
    for k in 0..state.y.len() {
        state.d1[k] += &state.y[k] - &xs[k];
        for (d, v) in state.d2[k].iter_mut().zip(&state.v[k]) {
            *d += v - &state.y[k];
        }
        for (d, g) in state.d3[k].iter_mut().zip(&state.g[k]) {
            *d += g - &state.y[k];
        }
        for (d, t) in state.d4[k].iter_mut().zip(&state.t[k]) {
            *d += t - &state.y[k];
        }
    }
}

/// The four normalised consensus residuals. Blocks that are absent
/// (no mainlobe or nulling constraints) report zero.
pub fn residuals(state: &SolverState) -> [f64; 4] {
    let xs = state.bf.precoders();
    let k_count = state.y.len() as f64;
    let mut r = [0.0; 4];
    let mean = |copies: &[CMatrix], y: &CMatrix| -> f64 {
        if copies.is_empty() {
            0.0
        } else {
            copies.iter().map(|c| fro2(&(c - y))).sum::<f64>() / copies.len() as f64
        }
    };
    for k in 0..state.y.len() {
        r[0] += fro2(&(&state.y[k] - &xs[k])) / k_count;
        r[1] += mean(&state.v[k], &state.y[k]) / k_count;
        r[2] += mean(&state.g[k], &state.y[k]) / k_count;
        r[3] += mean(&state.t[k], &state.y[k]) / k_count;
    }
    r
}

/// Geometric penalty continuation; scaled duals are rescaled so the
/// unscaled multipliers `rho * D` are unchanged.
pub fn advance_penalties(state: &mut SolverState, growth: f64, rho_max: f64) {
    if growth <= 1.0 {
        return;
    }
    for (b, rho) in state.rho.iter_mut().enumerate() {
        let next = (*rho * growth).min(rho_max.max(*rho));
        let ratio = real(*rho / next);
        *rho = next;
        let duals: Vec<&mut CMatrix> = match b {
            0 => state.d1.iter_mut().collect(),
            1 => state.d2.iter_mut().flatten().collect(),
            2 => state.d3.iter_mut().flatten().collect(),
            _ => state.d4.iter_mut().flatten().collect(),
        };
        for d in duals {
            *d *= ratio;
        }
    }
}
