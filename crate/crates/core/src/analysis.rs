//! Equilibrium, the oscillation condition and the (necessary) synchronization
//! condition.
//!
//! Both conditions compare a linear gain against the point where the loop
//! polynomial `prod (j w + b_m)` first crosses the negative real axis, i.e. the
//! smallest `w > 0` with `sum arctan(w / b_m) = pi`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{hill, NetworkModel, OscillatorParams};

const MAX_BISECTIONS: usize = 400;

/// Unique positive equilibrium of the loop and its linear gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumInfo {
    /// Equilibrium value of the output species `x_M`.
    pub x0: f64,
    /// `B = prod b_m`
    pub b_product: f64,
    /// Linearized repression gain `p x0^{p+1} B^2`.
    pub sigma: f64,
}

/// Solves `1/(1+x^p) = B x` by bisection on `[0, 1/B]`.
pub fn solve_equilibrium(p: f64, b_product: f64) -> Result<EquilibriumInfo> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::domain(format!("Hill coefficient p must be >= 1, got {p}")));
    }
    if !(b_product.is_finite() && b_product > 0.0) {
        return Err(Error::domain(format!("B must be positive, got {b_product}")));
    }
    let h = |x: f64| hill(x, p) - b_product * x;
    let (mut lo, mut hi) = (0.0, 1.0 / b_product);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECTIONS {
        x = 0.5 * (lo + hi);
        let hx = h(x);
        if hx == 0.0 || x <= lo || x >= hi {
            break;
        }
        if hx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
    }
    // pick the better of the final bracket ends
    for cand in [lo, hi] {
        if cand > 0.0 && h(cand).abs() < h(x).abs() {
            x = cand;
        }
    }
    let sigma = p * (x.ln() * (p + 1.0)).exp() * b_product * b_product;
    Ok(EquilibriumInfo { x0: x, b_product, sigma })
}

/// Smallest `w > 0` with `sum_m arctan(w / c_m) = pi`, where `c = b` except
/// that the 1-based term `k` is shifted by `offset` when given.
///
/// Returns `None` when no crossing exists (`M <= 2`: every term stays below
/// `pi/2`).
pub fn phase_crossing_frequency(b: &[f64], offset: Option<(usize, f64)>) -> Option<f64> {
    let c = shifted(b, offset);
    crossing_of(&c)
}

fn shifted(b: &[f64], offset: Option<(usize, f64)>) -> Vec<f64> {
    let mut c = b.to_vec();
    if let Some((k, v)) = offset {
        c[k - 1] += v;
    }
    c
}

fn phase_sum(c: &[f64], w: f64) -> f64 {
    c.iter().map(|&ci| (w / ci).atan()).sum()
}

fn crossing_of(c: &[f64]) -> Option<f64> {
    if c.len() <= 2 {
        return None;
    }
    let mut hi = c.iter().copied().fold(f64::MIN_POSITIVE, f64::max);
    while phase_sum(c, hi) <= PI {
        hi *= 2.0;
        if !hi.is_finite() {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phase_sum(c, mid) > PI {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut w = if (phase_sum(c, lo) - PI).abs() < (phase_sum(c, hi) - PI).abs() { lo } else { hi };
    // one Newton step usually lands on the closest representable root
    let slope: f64 = c.iter().map(|&ci| ci / (ci * ci + w * w)).sum();
    let cand = w - (phase_sum(c, w) - PI) / slope;
    if cand > 0.0 && (phase_sum(c, cand) - PI).abs() < (phase_sum(c, w) - PI).abs() {
        w = cand;
    }
    Some(w)
}

/// Where a loop's Nyquist curve first meets the negative real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCrossing {
    /// Crossing frequency.
    pub mu: f64,
    /// Distance from the origin at the crossing, `prod sqrt(mu^2 + c_m^2)`.
    pub kappa: f64,
}

/// Crossing of the mode loop `(s + b_k + upsilon) prod_{m != k} (s + b_m)`.
///
/// The crossing frequency of that mode is used in every factor of `kappa`.
pub fn mode_crossing(b: &[f64], k: usize, upsilon: f64) -> Option<ModeCrossing> {
    let c = shifted(b, Some((k, upsilon)));
    let mu = crossing_of(&c)?;
    let kappa = c.iter().map(|&ci| mu.hypot(ci)).product();
    Some(ModeCrossing { mu, kappa })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationVerdict {
    /// `R = p B (1 - B x0) / kappa0`; zero when there is no phase crossing.
    pub r: f64,
    pub kappa0: Option<f64>,
    pub mu: Option<f64>,
    /// `R > 1`
    pub oscillatory: bool,
}

/// Oscillation condition `R > 1`.
pub fn oscillation_condition(osc: &OscillatorParams) -> Result<OscillationVerdict> {
    let eq = solve_equilibrium(osc.hill_p(), osc.b_product())?;
    Ok(oscillation_verdict(osc, &eq))
}

pub(crate) fn oscillation_verdict(osc: &OscillatorParams, eq: &EquilibriumInfo) -> OscillationVerdict {
    let b = osc.b_product();
    match crossing_of(osc.b()) {
        None => OscillationVerdict { r: 0.0, kappa0: None, mu: None, oscillatory: false },
        Some(mu) => {
            let kappa0: f64 = osc.b().iter().map(|&bm| mu.hypot(bm)).product();
            // 1 - B x0 = x0^p / (1 + x0^p) at equilibrium, without the cancellation
            let xp = eq.x0.powf(osc.hill_p());
            let r = osc.hill_p() * b * (xp / (1.0 + xp)) / kappa0;
            OscillationVerdict { r, kappa0: Some(kappa0), mu: Some(mu), oscillatory: r > 1.0 }
        }
    }
}

/// `z0 = max_{x>0} p x^{p-1} / (1 + x^p)^2`, the largest slope of the repression.
pub fn z0_max_gain(p: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::domain(format!("Hill coefficient p must be >= 1, got {p}")));
    }
    if p == 1.0 {
        // supremum approached as x -> 0+
        return Ok(1.0);
    }
    let x_star = ((p - 1.0) / (p + 1.0)).powf(1.0 / p);
    Ok(x_star.powf(p - 1.0) * (p + 1.0).powi(2) / (4.0 * p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncVerdict {
    /// Algebraic connectivity of the coupling.
    pub upsilon2: f64,
    pub z0: f64,
    /// Mode-2 crossing frequency; absent when the loop never crosses.
    pub mu2: Option<f64>,
    /// Mode-2 crossing magnitude; absent (infinite) when the loop never crosses.
    pub kappa2: Option<f64>,
    /// `N z0 / (N - 1)`
    pub threshold: f64,
    /// `threshold < kappa2`. Necessary for stable synchrony, not sufficient.
    pub necessary_condition_satisfied: bool,
    /// Smallest connectivity meeting the condition for these oscillators.
    pub required_v2: f64,
}

fn sync_threshold(p: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::SingleOscillator);
    }
    Ok(n as f64 * z0_max_gain(p)? / (n as f64 - 1.0))
}

/// Necessary condition for a stable synchronization manifold.
pub fn sync_condition(net: &NetworkModel) -> Result<SyncVerdict> {
    let n = net.size();
    let osc = net.oscillator();
    let k = net.coupled_species();
    let threshold = sync_threshold(osc.hill_p(), n)?;
    if !net.coupling().spectrally_connected() {
        return Err(Error::Disconnected);
    }
    let upsilon2 = net.coupling().algebraic_connectivity().ok_or(Error::SingleOscillator)?;
    let crossing = mode_crossing(osc.b(), k, upsilon2);
    let satisfied = crossing.is_none_or(|c| threshold < c.kappa);
    Ok(SyncVerdict {
        upsilon2,
        z0: z0_max_gain(osc.hill_p())?,
        mu2: crossing.map(|c| c.mu),
        kappa2: crossing.map(|c| c.kappa),
        threshold,
        necessary_condition_satisfied: satisfied,
        required_v2: required_connectivity(osc, n, k)?,
    })
}

/// Smallest `upsilon_2 >= 0` with `kappa_2(upsilon_2) >= N z0 / (N - 1)`.
pub fn required_connectivity(osc: &OscillatorParams, n: usize, k: usize) -> Result<f64> {
    let m = osc.loop_length();
    if k < 2 || k > m {
        return Err(Error::validation(format!("coupled species index k = {k} out of range [2, {m}]")));
    }
    let threshold = sync_threshold(osc.hill_p(), n)?;
    let kappa = |v: f64| mode_crossing(osc.b(), k, v).map_or(f64::INFINITY, |c| c.kappa);

    let mut prev = kappa(0.0);
    if prev >= threshold {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = osc.b().iter().copied().fold(0.0, f64::max).max(1e-3);
    loop {
        let kh = kappa(hi);
        if !(kh > prev) {
            return Err(Error::Numerical(format!(
                "kappa_2 is not increasing in upsilon_2 near {hi}"
            )));
        }
        if kh >= threshold {
            break;
        }
        prev = kh;
        lo = hi;
        hi *= 2.0;
        if hi > 1e15 {
            return Err(Error::Numerical("required connectivity does not fit in f64".into()));
        }
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-13 * hi {
            break;
        }
        if kappa(mid) >= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::build_laplacian;

    #[test]
    fn equilibrium_at_one_when_b_is_half() {
        for p in [1.0, 2.0, 3.5, 7.0] {
            let eq = solve_equilibrium(p, 0.5).unwrap();
            assert!((eq.x0 - 1.0).abs() < 1e-12, "p={p}: {}", eq.x0);
        }
    }

    #[test]
    fn equilibrium_quadratic_closed_form() {
        let eq = solve_equilibrium(1.0, 2.0).unwrap();
        assert!((eq.x0 - (3f64.sqrt() - 1.0) / 2.0).abs() < 1e-13);
    }

    #[test]
    fn equilibrium_rejects_bad_inputs() {
        assert!(solve_equilibrium(0.5, 1.0).is_err());
        assert!(solve_equilibrium(2.0, 0.0).is_err());
    }

    #[test]
    fn sigma_two_forms_agree() {
        for (p, b) in [(3.0, 0.5f64.powi(9)), (2.0, 0.3), (5.5, 1.7)] {
            let eq = solve_equilibrium(p, b).unwrap();
            let other = p * eq.x0.powf(p - 1.0) / (1.0 + eq.x0.powf(p)).powi(2);
            assert!((eq.sigma - other).abs() < 1e-10 * other);
        }
    }

    #[test]
    fn crossing_symmetric_closed_form() {
        let mu = phase_crossing_frequency(&[1.0, 1.0, 1.0], None).unwrap();
        assert!((mu - 3f64.sqrt()).abs() < 1e-14);
        for m in 3..12 {
            let c = 0.37;
            let mu = phase_crossing_frequency(&vec![c; m], None).unwrap();
            assert!((mu - c * (PI / m as f64).tan()).abs() < 1e-13 * mu.max(1.0), "M={m}");
        }
    }

    #[test]
    fn no_crossing_for_short_loops() {
        assert!(phase_crossing_frequency(&[1.0, 2.0], None).is_none());
        assert!(phase_crossing_frequency(&[1.0, 2.0], Some((2, 10.0))).is_none());
        let v = oscillation_condition(&OscillatorParams::new(vec![0.1, 0.1], 3.0).unwrap()).unwrap();
        assert!(!v.oscillatory && v.mu.is_none());
    }

    #[test]
    fn z0_special_values() {
        assert_eq!(z0_max_gain(1.0).unwrap(), 1.0);
        let z2 = z0_max_gain(2.0).unwrap();
        assert!((z2 - 9.0 / (8.0 * 3f64.sqrt())).abs() < 1e-14);
        assert!(z0_max_gain(0.99).is_err());
    }

    #[test]
    fn sync_needs_connected_network() {
        let osc = OscillatorParams::uniform(9, 0.5, 3.0).unwrap();
        let single = NetworkModel::new(osc.clone(), build_laplacian(&Matrix::zeros(1)).unwrap(), 2).unwrap();
        assert_eq!(sync_condition(&single), Err(Error::SingleOscillator));
        let split = NetworkModel::new(osc, build_laplacian(&Matrix::zeros(3)).unwrap(), 2).unwrap();
        assert_eq!(sync_condition(&split), Err(Error::Disconnected));
    }

    #[test]
    fn already_satisfied_needs_no_connectivity() {
        // p = 1 gives z0 = 1 and large b makes kappa_2(0) huge
        let osc = OscillatorParams::uniform(4, 3.0, 1.0).unwrap();
        assert_eq!(required_connectivity(&osc, 4, 2).unwrap(), 0.0);
    }
}
