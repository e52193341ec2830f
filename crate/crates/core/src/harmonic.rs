//! Harmonic balance for the synchronized solution.
//!
//! The output of each oscillator is approximated by `alpha + beta sin(w t)`.
//! The repression then acts as two gains: `xi` on the mean and `eta` on the
//! first harmonic. For synchronized solutions the balance equations reduce to
//! `xi = prod b_m` and `eta = prod (j mu + b_m) = -kappa0`, which fixes the
//! collective frequency at the loop's phase crossing `mu`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{oscillation_condition, phase_crossing_frequency, solve_equilibrium};
use crate::error::{Error, Result};
use crate::model::{hill, hill_derivative, CouplingLaplacian, NetworkModel, OscillatorParams};
use crate::poly;

/// A pole counts as lying on the imaginary axis (or at a target) within this distance.
pub const AXIS_TOL: f64 = 1e-8;
/// A pole counts as strictly stable when its real part is below `-STABLE_MARGIN`.
pub const STABLE_MARGIN: f64 = 1e-9;

const SIMPSON_TOL: f64 = 1e-11;
const SIMPSON_MAX_DEPTH: u32 = 40;
const TRAPEZOID_FALLBACK_POINTS: usize = 1 << 20;

/// Integrates a smooth `2 pi`-periodic function over `[-pi, pi]`.
///
/// Adaptive Simpson with Richardson correction; if the recursion depth runs
/// out, falls back to a `2^20`-point trapezoid rule.
pub fn integrate_periodic(f: impl Fn(f64) -> f64, tol: f64) -> f64 {
    // start from 16 panels so that symmetric integrands cannot fool the first test
    let panels = 16;
    let h = 2.0 * PI / panels as f64;
    let mut total = 0.0;
    let mut ok = true;
    for i in 0..panels {
        let a = -PI + i as f64 * h;
        let b = a + h;
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        let whole = h / 6.0 * (fa + 4.0 * fm + fb);
        match simpson_step(&f, a, b, fa, fm, fb, whole, tol / panels as f64, SIMPSON_MAX_DEPTH) {
            Some(v) => total += v,
            None => {
                ok = false;
                break;
            }
        }
    }
    if ok {
        total
    } else {
        trapezoid_periodic(f, TRAPEZOID_FALLBACK_POINTS)
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Option<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Some(left + right + delta / 15.0);
    }
    if depth == 0 {
        return None;
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Some(l + r)
}

/// Trapezoid rule on `n` equispaced points of a periodic integrand.
pub fn trapezoid_periodic(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|i| f(-PI + i as f64 * h)).sum::<f64>() * h
}

/// Zero-order and first-harmonic gains of the repression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescribingGains {
    pub xi: f64,
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Describing functions of `f(x) = 1/(1+x^p)` for input `alpha + beta sin t`.
///
/// `beta = 0` returns the limits `f(alpha)/alpha` and `f'(alpha)`.
pub fn describing_functions(p: f64, alpha: f64, beta: f64) -> Result<DescribingGains> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::domain(format!("Hill coefficient p must be >= 1, got {p}")));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::domain(format!("mean amplitude alpha must be positive, got {alpha}")));
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::domain(format!("harmonic amplitude beta must be nonnegative, got {beta}")));
    }
    if alpha - beta <= 0.0 {
        return Err(Error::domain(format!(
            "alpha - beta = {} must be positive (the input would go negative)",
            alpha - beta
        )));
    }
    if beta == 0.0 {
        return Ok(DescribingGains { xi: hill(alpha, p) / alpha, eta: hill_derivative(alpha, p), alpha, beta });
    }
    let mean = integrate_periodic(|t| hill(alpha + beta * t.sin(), p), SIMPSON_TOL);
    // the sine-weighted integral is O(beta); tighten so that eta keeps its accuracy
    let first = integrate_periodic(|t| hill(alpha + beta * t.sin(), p) * t.sin(), SIMPSON_TOL * beta.min(1.0));
    Ok(DescribingGains { xi: mean / (2.0 * PI * alpha), eta: first / (PI * beta), alpha, beta })
}

/// Gains that balance the synchronized solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceGains {
    /// `prod b_m`
    pub xi: f64,
    /// `-prod sqrt(mu^2 + b_m^2)`
    pub eta: f64,
    pub mu: f64,
}

pub fn solve_balance_gains(osc: &OscillatorParams) -> Result<BalanceGains> {
    let mu = phase_crossing_frequency(osc.b(), None).ok_or(Error::NoPhaseCrossing)?;
    let kappa0: f64 = osc.b().iter().map(|&b| mu.hypot(b)).product();
    Ok(BalanceGains { xi: osc.b_product(), eta: -kappa0, mu })
}

/// Mean and first-harmonic amplitude recovered from the balance gains
/// (harmonic-balance ansatz, not a simulation result).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AmplitudeSolution {
    Interior { alpha: f64, beta: f64, residual: f64 },
    NoInteriorSolution { reason: String },
}

const NEWTON_MAX_ITER: usize = 100;
const AMPLITUDE_RESIDUAL_TOL: f64 = 1e-9;

/// Solves `xi(alpha, beta) = prod b_m`, `eta(alpha, beta) = -kappa0` over
/// `alpha > 0, 0 < beta < alpha` by damped Newton from 8 fixed starts.
///
/// Refused with a domain error when the oscillation condition fails.
pub fn solve_amplitudes(osc: &OscillatorParams) -> Result<AmplitudeSolution> {
    let verdict = oscillation_condition(osc)?;
    if !verdict.oscillatory {
        return Err(Error::domain(format!("no oscillation predicted (R = {:.4} <= 1)", verdict.r)));
    }
    let target = solve_balance_gains(osc)?;
    let p = osc.hill_p();
    let x0 = solve_equilibrium(p, osc.b_product())?.x0;

    // residual relative to the targets; None outside the domain
    let residual = |a: f64, b: f64| -> Option<[f64; 2]> {
        if !(a > 0.0 && b > 0.0 && b < a) {
            return None;
        }
        let g = describing_functions(p, a, b).ok()?;
        Some([(g.xi - target.xi) / target.xi, (g.eta - target.eta) / target.eta.abs()])
    };
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());

    let starts = [(1.0, 0.5), (1.0, 0.25), (1.0, 0.75), (1.0, 0.1), (1.0, 0.9), (1.5, 0.5), (0.75, 0.5), (2.0, 0.5)];
    let mut best = f64::INFINITY;
    for &(sa, sb) in &starts {
        let (mut a, mut b) = (sa * x0, sb * sa * x0);
        let Some(mut r) = residual(a, b) else { continue };
        for _ in 0..NEWTON_MAX_ITER {
            if norm(r) < AMPLITUDE_RESIDUAL_TOL {
                break;
            }
            // central-difference Jacobian
            let ha = 1e-6 * a;
            let hb = 1e-6 * b.min(a - b);
            let (Some(ap), Some(am), Some(bp), Some(bm)) =
                (residual(a + ha, b), residual(a - ha, b), residual(a, b + hb), residual(a, b - hb))
            else {
                break;
            };
            let j = [
                [(ap[0] - am[0]) / (2.0 * ha), (bp[0] - bm[0]) / (2.0 * hb)],
                [(ap[1] - am[1]) / (2.0 * ha), (bp[1] - bm[1]) / (2.0 * hb)],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 || !det.is_finite() {
                break;
            }
            let da = (j[1][1] * r[0] - j[0][1] * r[1]) / det;
            let db = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let (na, nb) = (a - lambda * da, b - lambda * db);
                if let Some(nr) = residual(na, nb) {
                    if norm(nr) < norm(r) {
                        a = na;
                        b = nb;
                        r = nr;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let res = norm(r);
        best = best.min(res);
        if res < AMPLITUDE_RESIDUAL_TOL {
            return Ok(AmplitudeSolution::Interior { alpha: a, beta: b, residual: res });
        }
    }
    Ok(AmplitudeSolution::NoInteriorSolution {
        reason: format!("damped Newton did not converge inside 0 < beta < alpha from 8 starts (best residual {best:.3e})"),
    })
}

/// Ascending coefficients of `(s + b_k + upsilon) prod_{m != k} (s + b_m)`.
pub fn mode_polynomial(b: &[f64], k: usize, upsilon: f64) -> Vec<f64> {
    let mut shifts = b.to_vec();
    shifts[k - 1] += upsilon;
    poly::from_linear_factors(&shifts)
}

/// Mode offsets of a coupling, with the first one pinned to exactly zero.
pub fn mode_offsets(coupling: &CouplingLaplacian) -> Vec<f64> {
    let mut v = coupling.eigenvalues().to_vec();
    v[0] = 0.0;
    v
}

/// Roots of `mode_polynomial(j) - gain` for every coupling mode `j`.
///
/// `gain = xi` gives the poles of the zero-order surrogate `G0`; `gain = eta`
/// those of the first-harmonic surrogate `G1`.
pub fn surrogate_poles(osc: &OscillatorParams, coupling: &CouplingLaplacian, k: usize, gain: f64) -> Vec<Vec<Complex64>> {
    mode_offsets(coupling)
        .into_iter()
        .map(|v| {
            let mut c = mode_polynomial(osc.b(), k, v);
            c[0] -= gain;
            poly::roots(&c)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModePoles {
    /// 1-based mode index.
    pub mode: usize,
    pub upsilon: f64,
    pub g0: Vec<Complex64>,
    pub g1: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodEstimate {
    pub mu: f64,
    /// `2 pi / mu`
    pub period_dimensionless: f64,
    /// `2 pi / (time_scale mu)` when the oscillator came from dimensional rates.
    pub period_dimensional: Option<f64>,
    pub xi: f64,
    pub eta: f64,
    pub g0_marginal: bool,
    pub g1_marginal: bool,
    /// Largest relative residual over all returned poles.
    pub max_root_residual: f64,
    pub pole_sets: Vec<ModePoles>,
}

/// Collective period of the synchronized network and the marginal-stability
/// check of the two surrogate systems.
pub fn estimate_period(net: &NetworkModel) -> Result<PeriodEstimate> {
    let osc = net.oscillator();
    let k = net.coupled_species();
    let gains = solve_balance_gains(osc)?;
    let offsets = mode_offsets(net.coupling());
    let g0 = surrogate_poles(osc, net.coupling(), k, gains.xi);
    let g1 = surrogate_poles(osc, net.coupling(), k, gains.eta);

    let mut max_root_residual = 0.0f64;
    for (j, &v) in offsets.iter().enumerate() {
        let base = mode_polynomial(osc.b(), k, v);
        for (roots, gain) in [(&g0[j], gains.xi), (&g1[j], gains.eta)] {
            let mut c = base.clone();
            c[0] -= gain;
            for &s in roots {
                max_root_residual = max_root_residual.max(poly::relative_residual(&c, s));
            }
        }
    }

    let g0_marginal = marginal(&g0, &[Complex64::new(0.0, 0.0)]);
    let g1_marginal = marginal(&g1, &[Complex64::new(0.0, gains.mu), Complex64::new(0.0, -gains.mu)]);

    let pole_sets = offsets
        .iter()
        .zip(g0.into_iter().zip(g1))
        .enumerate()
        .map(|(j, (&upsilon, (g0, g1)))| ModePoles { mode: j + 1, upsilon, g0, g1 })
        .collect();

    Ok(PeriodEstimate {
        mu: gains.mu,
        period_dimensionless: 2.0 * PI / gains.mu,
        period_dimensional: osc.time_scale().map(|ts| 2.0 * PI / (ts * gains.mu)),
        xi: gains.xi,
        eta: gains.eta,
        g0_marginal,
        g1_marginal,
        max_root_residual,
        pole_sets,
    })
}

/// Mode 1 must contain each target pole exactly once; every other pole in
/// every mode must be strictly stable.
fn marginal(pole_sets: &[Vec<Complex64>], targets: &[Complex64]) -> bool {
    let Some((first, rest)) = pole_sets.split_first() else { return false };
    let mut used = vec![false; first.len()];
    for t in targets {
        let hit = first.iter().enumerate().position(|(i, s)| !used[i] && (s - t).norm() < AXIS_TOL);
        match hit {
            Some(i) => used[i] = true,
            None => return false,
        }
    }
    let others_stable = first
        .iter()
        .zip(&used)
        .filter(|(_, &u)| !u)
        .map(|(s, _)| s)
        .chain(rest.iter().flatten())
        .all(|s| s.re < -STABLE_MARGIN);
    others_stable
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::build_laplacian;

    #[test]
    fn zero_amplitude_limits_are_exact() {
        let g = describing_functions(3.0, 1.3, 0.0).unwrap();
        assert_eq!(g.xi, hill(1.3, 3.0) / 1.3);
        assert_eq!(g.eta, hill_derivative(1.3, 3.0));
    }

    #[test]
    fn amplitude_domain_enforced() {
        assert!(describing_functions(3.0, 1.0, 1.0).is_err());
        assert!(describing_functions(3.0, 0.0, 0.0).is_err());
        assert!(describing_functions(3.0, 1.0, -0.1).is_err());
        assert!(describing_functions(0.5, 1.0, 0.1).is_err());
    }

    #[test]
    fn p1_closed_form() {
        // f(1 + 0.5 sin t) = 1 / (2 + 0.5 sin t)
        let root = 3.75f64.sqrt();
        let g = describing_functions(1.0, 1.0, 0.5).unwrap();
        assert!((g.xi - 1.0 / root).abs() < 1e-10);
        assert!((g.eta - 8.0 * (1.0 - 2.0 / root)).abs() < 1e-10);
    }

    #[test]
    fn balance_gains_three_unit_species() {
        let g = solve_balance_gains(&OscillatorParams::uniform(3, 1.0, 2.0).unwrap()).unwrap();
        assert_eq!(g.xi, 1.0);
        assert!((g.mu - 3f64.sqrt()).abs() < 1e-14);
        assert!((g.eta + 8.0).abs() < 1e-12);
        assert!(solve_balance_gains(&OscillatorParams::uniform(2, 1.0, 2.0).unwrap()).is_err());
    }

    #[test]
    fn amplitudes_refused_without_oscillation() {
        let osc = OscillatorParams::uniform(9, 1.0, 3.0).unwrap();
        assert!(matches!(solve_amplitudes(&osc), Err(Error::Domain(_))));
    }

    #[test]
    fn g0_mode_one_has_root_at_origin() {
        let osc = OscillatorParams::new(vec![0.4, 0.9, 0.6, 1.1], 4.0).unwrap();
        let l = build_laplacian(&Matrix::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap()).unwrap();
        let poles = surrogate_poles(&osc, &l, 3, osc.b_product());
        assert!(poles[0].iter().any(|s| s.norm() < 1e-12));
    }

    #[test]
    fn period_uses_time_scale_when_known() {
        let osc = OscillatorParams::with_time_scale(vec![0.5; 9], 3.0, 0.2).unwrap();
        let net = NetworkModel::new(osc, build_laplacian(&Matrix::zeros(1)).unwrap(), 2).unwrap();
        let e = estimate_period(&net).unwrap();
        assert!((e.period_dimensional.unwrap() - e.period_dimensionless / 0.2).abs() < 1e-9);
        assert!(e.g0_marginal && e.g1_marginal);
    }

    #[test]
    fn trapezoid_and_simpson_agree_on_smooth_integrand() {
        let f = |t: f64| (t.sin()).exp();
        let a = integrate_periodic(f, 1e-12);
        let b = trapezoid_periodic(f, 64);
        assert!((a - b).abs() < 1e-11);
    }
}
