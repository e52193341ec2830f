//! Real-coefficient polynomials and simultaneous root finding.
//!
//! Coefficients are stored in ascending order: `c[0] + c[1] s + ... + c[n] s^n`.

use num_complex::Complex64;

/// Expands `prod (s + r_i)` into ascending coefficients.
pub fn from_linear_factors(shifts: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for &r in shifts {
        let mut next = vec![0.0; c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            next[i] += r * ci;
            next[i + 1] += ci;
        }
        c = next;
    }
    c
}

pub fn eval(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

/// Value and derivative by Horner's scheme.
fn eval_with_derivative(coeffs: &[Complex64], s: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * s + p;
        p = p * s + c;
    }
    (p, dp)
}

/// Backward-error style residual `|p(s)| / sum |c_i| |s|^i`.
pub fn relative_residual(coeffs: &[f64], s: Complex64) -> f64 {
    let r = s.norm();
    let scale: f64 = coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs());
    if scale == 0.0 {
        return 0.0;
    }
    eval(coeffs, s).norm() / scale
}

const ABERTH_MAX_ITER: usize = 200;
const ABERTH_TOL: f64 = 1e-12;

/// All complex roots of a polynomial by Aberth–Ehrlich iteration.
///
/// The polynomial is normalized to monic form first; iteration starts from a
/// slightly rotated circle of radius `1 + max |c_i|` (Cauchy bound) and
/// finishes with a couple of Newton polishing steps per root.
pub fn roots(coeffs: &[f64]) -> Vec<Complex64> {
    let mut coeffs = coeffs.to_vec();
    while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
        coeffs.pop();
    }
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    let lead = coeffs[degree];
    let monic: Vec<Complex64> = coeffs.iter().map(|&c| Complex64::new(c / lead, 0.0)).collect();
    if degree == 1 {
        return vec![-monic[0]];
    }

    let radius = 1.0 + monic[..degree].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..degree)
        .map(|i| {
            let angle = 2.0 * std::f64::consts::PI * i as f64 / degree as f64 + 0.4;
            Complex64::from_polar(radius, angle)
        })
        .collect();

    for _ in 0..ABERTH_MAX_ITER {
        let mut max_step = 0.0f64;
        for i in 0..degree {
            let (p, dp) = eval_with_derivative(&monic, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..degree)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / z[i].norm().max(1.0));
            }
        }
        if max_step < ABERTH_TOL {
            break;
        }
    }

    for zi in z.iter_mut() {
        for _ in 0..2 {
            let (p, dp) = eval_with_derivative(&monic, *zi);
            let step = p / dp;
            if step.is_finite() && p.norm() > 0.0 {
                let candidate = *zi - step;
                if eval_with_derivative(&monic, candidate).0.norm() < p.norm() {
                    *zi = candidate;
                }
            }
        }
    }

    // real coefficients: snap numerically real roots onto the axis
    for zi in z.iter_mut() {
        if zi.im.abs() < 1e-14 * zi.norm().max(1.0) {
            zi.im = 0.0;
        }
    }
    z.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expands_linear_factors() {
        // (s+1)(s+2) = 2 + 3s + s^2
        assert_eq!(from_linear_factors(&[1.0, 2.0]), vec![2.0, 3.0, 1.0]);
    }

    #[test]
    fn quadratic_roots() {
        let r = roots(&[2.0, 3.0, 1.0]);
        assert!((r[0] - Complex64::new(-2.0, 0.0)).norm() < 1e-12);
        assert!((r[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn complex_pair() {
        // s^2 + 1
        let r = roots(&[1.0, 0.0, 1.0]);
        assert!((r[0].im.abs() - 1.0).abs() < 1e-12 && r[0].re.abs() < 1e-12);
        assert!((r[0] + r[1]).norm() < 1e-12);
    }

    #[test]
    fn trailing_zero_leading_coefficients_are_trimmed() {
        let r = roots(&[-1.0, 1.0, 0.0]);
        assert_eq!(r.len(), 1);
        assert!((r[0].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn roots_of_unity_degree_nine() {
        let mut c = vec![0.0; 10];
        c[0] = -1.0;
        c[9] = 1.0;
        for z in roots(&c) {
            assert!((z.norm() - 1.0).abs() < 1e-12);
            assert!(relative_residual(&c, z) < 1e-13);
        }
    }
}
