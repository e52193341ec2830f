//! Oscillator and network descriptions.
//!
//! A single oscillator is the cyclic chain
//!
//! ```text
//! dx_1/dt = f(x_M) - b_1 x_1
//! dx_m/dt = x_{m-1} - b_m x_m        m = 2..M
//! ```
//!
//! with repression `f(x) = 1 / (1 + x^p)`. A network couples `N` copies
//! diffusively through species `k` via a graph Laplacian.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, Matrix};

/// Weights closer than this to symmetric are accepted as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Repression nonlinearity `1 / (1 + x^p)`; negative arguments are clamped to 0.
#[inline]
pub fn hill(x: f64, p: f64) -> f64 {
    let x = x.max(0.0);
    if x == 0.0 {
        return 1.0;
    }
    1.0 / (1.0 + (p * x.ln()).exp())
}

/// Derivative of [`hill`]: `-p x^{p-1} / (1 + x^p)^2`.
pub fn hill_derivative(x: f64, p: f64) -> f64 {
    let x = x.max(0.0);
    if x == 0.0 {
        return if p == 1.0 { -1.0 } else { 0.0 };
    }
    let xp = (p * x.ln()).exp();
    -p * xp / x / (1.0 + xp).powi(2)
}

/// Raw biochemical rates of one oscillator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionalParams {
    /// rho_0 .. rho_{M-1}
    pub synthesis_rates: Vec<f64>,
    /// k_1 .. k_M
    pub degradation_rates: Vec<f64>,
    /// K_0, the inverse binding constant of the end product.
    pub binding_inverse: f64,
    pub hill_p: f64,
}

impl DimensionalParams {
    pub fn validate(&self) -> Result<()> {
        let m = self.degradation_rates.len();
        if m < 2 {
            return Err(Error::domain(format!("loop length must be at least 2, got {m}")));
        }
        if self.synthesis_rates.len() != m {
            return Err(Error::validation(format!(
                "synthesis_rates has {} entries, expected {m} (one per degradation rate)",
                self.synthesis_rates.len()
            )));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if let Some(i) = self.synthesis_rates.iter().position(|&v| !positive(v)) {
            return Err(Error::domain(format!("synthesis rate rho_{i} must be positive")));
        }
        if let Some(i) = self.degradation_rates.iter().position(|&v| !positive(v)) {
            return Err(Error::domain(format!("degradation rate k_{} must be positive", i + 1)));
        }
        if !positive(self.binding_inverse) {
            return Err(Error::domain("binding_inverse K0 must be positive"));
        }
        if !(self.hill_p.is_finite() && self.hill_p >= 1.0) {
            return Err(Error::domain(format!("Hill coefficient must be >= 1, got {}", self.hill_p)));
        }
        Ok(())
    }

    pub fn loop_length(&self) -> usize {
        self.degradation_rates.len()
    }

    /// Time scale `(prod rho_i / K0)^(1/M)`, computed in log space.
    pub fn time_scale(&self) -> f64 {
        let m = self.loop_length() as f64;
        let log_sum: f64 = self.synthesis_rates.iter().map(|r| r.ln()).sum();
        ((log_sum - self.binding_inverse.ln()) / m).exp()
    }

    /// Concentration scale factors `nu_1 .. nu_M` with `x_m = nu_m [P_m]`.
    ///
    /// `nu_M = 1/K0` and `nu_{j-1} = rho_{j-1} nu_j / time_scale`.
    pub fn concentration_scales(&self) -> Vec<f64> {
        let m = self.loop_length();
        let sigma = self.time_scale();
        let mut nu = vec![0.0; m];
        nu[m - 1] = 1.0 / self.binding_inverse;
        for j in (1..m).rev() {
            nu[j - 1] = self.synthesis_rates[j] * nu[j] / sigma;
        }
        nu
    }
}

/// Dimensionless single-oscillator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    b: Vec<f64>,
    p: f64,
    /// Set when the parameters came from dimensional rates.
    time_scale: Option<f64>,
}

impl OscillatorParams {
    pub fn new(b: Vec<f64>, p: f64) -> Result<Self> {
        Self::build(b, p, None)
    }

    pub fn with_time_scale(b: Vec<f64>, p: f64, time_scale: f64) -> Result<Self> {
        Self::build(b, p, Some(time_scale))
    }

    fn build(b: Vec<f64>, p: f64, time_scale: Option<f64>) -> Result<Self> {
        if b.len() < 2 {
            return Err(Error::domain(format!("loop length M must be at least 2, got {}", b.len())));
        }
        if let Some(i) = b.iter().position(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::domain(format!("b_{} must be positive and finite", i + 1)));
        }
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::domain(format!("Hill coefficient p must be >= 1, got {p}")));
        }
        if time_scale.is_some_and(|t| !(t.is_finite() && t > 0.0)) {
            return Err(Error::domain("time scale must be positive"));
        }
        let params = OscillatorParams { b, p, time_scale };
        let prod = params.b_product();
        if !(prod.is_finite() && prod > 0.0) {
            return Err(Error::domain("product of b underflows or overflows"));
        }
        Ok(params)
    }

    /// `M` copies of the same `b`.
    pub fn uniform(m: usize, b: f64, p: f64) -> Result<Self> {
        Self::new(vec![b; m], p)
    }

    pub fn loop_length(&self) -> usize {
        self.b.len()
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn hill_p(&self) -> f64 {
        self.p
    }

    /// Inverse time unit of the dimensional model, if known.
    pub fn time_scale(&self) -> Option<f64> {
        self.time_scale
    }

    /// `B = prod b_m`
    pub fn b_product(&self) -> f64 {
        self.b.iter().product()
    }
}

/// Maps raw rates onto the dimensionless model: `b_m = k_m / time_scale`.
pub fn nondimensionalize(d: &DimensionalParams) -> Result<OscillatorParams> {
    d.validate()?;
    let sigma = d.time_scale();
    let b = d.degradation_rates.iter().map(|k| k / sigma).collect();
    OscillatorParams::with_time_scale(b, d.hill_p, sigma)
}

/// Graph Laplacian of a symmetric nonnegative weight matrix, with its spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingLaplacian {
    weights: Matrix,
    laplacian: Matrix,
    eigenvalues: Vec<f64>,
}

impl CouplingLaplacian {
    pub fn size(&self) -> usize {
        self.laplacian.dim()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn laplacian(&self) -> &Matrix {
        &self.laplacian
    }

    /// Ascending; the first is zero up to round-off.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Second-smallest eigenvalue; absent for a single node.
    pub fn algebraic_connectivity(&self) -> Option<f64> {
        self.eigenvalues.get(1).copied()
    }

    /// Largest eigenvalue.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0).max(0.0)
    }

    /// Threshold separating a zero eigenvalue from a positive one.
    pub fn zero_tolerance(&self) -> f64 {
        1e-9 * self.laplacian.frobenius_norm().max(1.0)
    }

    /// Connectivity from the spectrum (`upsilon_2 > tol`). A single node counts as connected.
    pub fn spectrally_connected(&self) -> bool {
        match self.algebraic_connectivity() {
            None => true,
            Some(v2) => v2 > self.zero_tolerance(),
        }
    }

    /// Connectivity by breadth-first search over positive weights.
    pub fn is_connected(&self) -> bool {
        let n = self.size();
        if n <= 1 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if !seen[j] && self.weights.get(i, j) > 0.0 {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Same topology with every weight multiplied by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        build_laplacian(&self.weights.scaled(c))
    }
}

/// Validates a weight matrix and builds `A = D - W` with its eigenvalues.
pub fn build_laplacian(weights: &Matrix) -> Result<CouplingLaplacian> {
    let n = weights.dim();
    if n == 0 {
        return Err(Error::validation("weight matrix is empty"));
    }
    for i in 0..n {
        if weights.get(i, i) != 0.0 {
            return Err(Error::validation(format!("weight ({i},{i}) on the diagonal must be zero")));
        }
        for j in 0..n {
            let w = weights.get(i, j);
            if !w.is_finite() || w < 0.0 {
                return Err(Error::validation(format!("weight ({i},{j}) = {w} must be finite and nonnegative")));
            }
            if (w - weights.get(j, i)).abs() > SYMMETRY_TOL {
                return Err(Error::validation(format!(
                    "weights are not symmetric at ({i},{j}): {w} vs {}",
                    weights.get(j, i)
                )));
            }
        }
    }

    let mut laplacian = Matrix::zeros(n);
    for i in 0..n {
        let mut degree = 0.0;
        for j in 0..n {
            if i != j {
                let w = weights.get(i, j);
                degree += w;
                laplacian.set(i, j, -w);
            }
        }
        laplacian.set(i, i, degree);
    }
    let eigenvalues = symmetric_eigenvalues(&laplacian);
    Ok(CouplingLaplacian { weights: weights.clone(), laplacian, eigenvalues })
}

/// Oscillators plus coupling through species `k` (1-based, `2 <= k <= M`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    osc: OscillatorParams,
    coupling: CouplingLaplacian,
    k: usize,
}

impl NetworkModel {
    pub fn new(osc: OscillatorParams, coupling: CouplingLaplacian, k: usize) -> Result<Self> {
        let m = osc.loop_length();
        if k < 2 || k > m {
            return Err(Error::validation(format!("coupled species index k = {k} out of range [2, {m}]")));
        }
        Ok(NetworkModel { osc, coupling, k })
    }

    pub fn oscillator(&self) -> &OscillatorParams {
        &self.osc
    }

    pub fn coupling(&self) -> &CouplingLaplacian {
        &self.coupling
    }

    /// 1-based index of the coupled species.
    pub fn coupled_species(&self) -> usize {
        self.k
    }

    pub fn size(&self) -> usize {
        self.coupling.size()
    }

    pub fn with_coupling(&self, coupling: CouplingLaplacian) -> Result<Self> {
        NetworkModel::new(self.osc.clone(), coupling, self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(rho: Vec<f64>, k: Vec<f64>, k0: f64) -> DimensionalParams {
        DimensionalParams { synthesis_rates: rho, degradation_rates: k, binding_inverse: k0, hill_p: 3.0 }
    }

    #[test]
    fn identity_scaling() {
        let o = nondimensionalize(&dim(vec![1.0, 1.0], vec![1.0, 1.0], 1.0)).unwrap();
        assert_eq!(o.time_scale(), Some(1.0));
        assert_eq!(o.b(), &[1.0, 1.0]);
    }

    #[test]
    fn cube_root_scaling() {
        let o = nondimensionalize(&dim(vec![8.0, 1.0, 1.0], vec![2.0; 3], 1.0)).unwrap();
        assert!((o.time_scale().unwrap() - 2.0).abs() < 1e-14);
        for &b in o.b() {
            assert!((b - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn nine_species_arithmetic() {
        let d = dim(vec![0.3; 9], vec![0.15; 9], 0.1);
        let o = nondimensionalize(&d).unwrap();
        let expected = (0.3f64.powi(9) / 0.1).powf(1.0 / 9.0);
        let ts = o.time_scale().unwrap();
        assert!((ts - expected).abs() < 1e-14 * expected);
        for (b, k) in o.b().iter().zip(&d.degradation_rates) {
            assert!((b * ts - k).abs() < 1e-14);
        }
    }

    #[test]
    fn concentration_scales_close_the_loop() {
        // nu_1 must equal time_scale / rho_0 for the first equation to lose its prefactor
        let d = dim(vec![2.0, 0.5, 3.0, 1.5], vec![0.2, 0.3, 0.4, 0.5], 0.7);
        let nu = d.concentration_scales();
        assert!((nu[3] - 1.0 / 0.7).abs() < 1e-15);
        assert!((nu[0] - d.time_scale() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_rates_rejected() {
        assert!(matches!(
            nondimensionalize(&dim(vec![1.0, 0.0], vec![1.0, 1.0], 1.0)),
            Err(Error::Domain(_))
        ));
        assert!(nondimensionalize(&dim(vec![1.0, 1.0], vec![1.0, -1.0], 1.0)).is_err());
        assert!(nondimensionalize(&dim(vec![1.0, 1.0], vec![1.0, 1.0], 0.0)).is_err());
        let mut low_p = dim(vec![1.0, 1.0], vec![1.0, 1.0], 1.0);
        low_p.hill_p = 0.5;
        assert!(nondimensionalize(&low_p).is_err());
    }

    #[test]
    fn oscillator_validation() {
        assert!(OscillatorParams::new(vec![1.0], 3.0).is_err());
        assert!(OscillatorParams::new(vec![1.0, f64::NAN], 3.0).is_err());
        assert!(OscillatorParams::new(vec![1.0, 1.0], 0.9).is_err());
        assert!(OscillatorParams::new(vec![1e-200, 1e-200], 2.0).is_err());
    }

    #[test]
    fn hill_values() {
        assert_eq!(hill(1.0, 3.0), 0.5);
        assert_eq!(hill(-0.5, 2.0), 1.0);
        assert!((hill_derivative(1.0, 2.0) + 0.5).abs() < 1e-15);
        let h = 1e-6;
        let fd = (hill(1.7 + h, 2.5) - hill(1.7 - h, 2.5)) / (2.0 * h);
        assert!((fd - hill_derivative(1.7, 2.5)).abs() < 1e-9);
    }

    #[test]
    fn two_node_spectrum() {
        let w = Matrix::from_rows(&[vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        let l = build_laplacian(&w).unwrap();
        assert!(l.eigenvalues()[0].abs() < 1e-12);
        assert!((l.eigenvalues()[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_spectrum() {
        let w = Matrix::from_rows(&[vec![0.0, 2.0, 2.0], vec![2.0, 0.0, 2.0], vec![2.0, 2.0, 0.0]]).unwrap();
        let e = build_laplacian(&w).unwrap().eigenvalues().to_vec();
        assert!(e[0].abs() < 1e-12);
        assert!((e[1] - 6.0).abs() < 1e-12 && (e[2] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn single_node_has_no_connectivity_value() {
        let l = build_laplacian(&Matrix::zeros(1)).unwrap();
        assert_eq!(l.eigenvalues(), &[0.0]);
        assert!(l.algebraic_connectivity().is_none());
        assert!(l.is_connected());
    }

    #[test]
    fn rejects_bad_weights() {
        let asym = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0 + 1e-9, 0.0]]).unwrap();
        assert!(matches!(build_laplacian(&asym), Err(Error::Validation(_))));
        let neg = Matrix::from_rows(&[vec![0.0, -1.0], vec![-1.0, 0.0]]).unwrap();
        assert!(build_laplacian(&neg).is_err());
        let diag = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(build_laplacian(&diag).is_err());
    }

    #[test]
    fn disconnected_pair_of_edges() {
        let w = Matrix::from_rows(&[
            vec![0.0, 1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        let l = build_laplacian(&w).unwrap();
        assert!(!l.is_connected());
        assert!(!l.spectrally_connected());
    }

    #[test]
    fn coupled_species_range() {
        let osc = OscillatorParams::uniform(4, 0.5, 3.0).unwrap();
        let l = build_laplacian(&Matrix::zeros(2)).unwrap();
        assert!(NetworkModel::new(osc.clone(), l.clone(), 1).is_err());
        assert!(NetworkModel::new(osc.clone(), l.clone(), 5).is_err());
        assert!(NetworkModel::new(osc, l, 4).is_ok());
    }
}
