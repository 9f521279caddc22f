//! Tanh-sinh (double exponential) quadrature on finite intervals.
//!
//! The integrand receives the abscissa together with its distances to both
//! endpoints, computed without cancellation, so inverse-square-root and
//! logarithmic endpoint singularities can be evaluated accurately.

use std::f64::consts::FRAC_PI_2;

use crate::error::{NdrError, Result};

const T_MAX: f64 = 4.5;
const MAX_LEVEL: usize = 12;

/// Integrate `f(x, x - a, b - x)` over `[a, b]` until two successive step
/// halvings agree to `tol`.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return tanh_sinh(f, b, a, tol).map(|v| -v);
    }
    let half = 0.5 * (b - a);

    // Contribution of the symmetric pair of nodes at ±t.
    let pair = |t: f64| -> f64 {
        let s = FRAC_PI_2 * t.sinh();
        let e = (2.0 * s).exp();
        // 1 - tanh s, accurate for large s
        let small = half * 2.0 / (e + 1.0);
        if small <= 0.0 {
            return 0.0;
        }
        let cosh_s = s.cosh();
        let weight = half * FRAC_PI_2 * t.cosh() / (cosh_s * cosh_s);
        if !weight.is_finite() || weight == 0.0 {
            return 0.0;
        }
        let big = 2.0 * half - small;
        let right = f(b - small, big, small);
        if t == 0.0 {
            return weight * right;
        }
        let left = f(a + small, small, big);
        weight * (left + right)
    };

    let mut h = 0.5;
    let mut sum = pair(0.0);
    let mut k = 1;
    while k as f64 * h <= T_MAX {
        sum += pair(k as f64 * h);
        k += 1;
    }
    let mut estimate = h * sum;
    let mut change = f64::INFINITY;
    for _ in 0..MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= T_MAX {
            sum += pair(k as f64 * h);
            k += 2;
        }
        let next = h * sum;
        change = (next - estimate).abs();
        estimate = next;
        if change <= tol {
            return Ok(estimate);
        }
    }
    Err(NdrError::QuadratureTolerance { tol, change })
}

/// Integrate over consecutive pieces `[p_k, p_{k+1}]`, useful for interior
/// singular points.
pub fn tanh_sinh_split<F>(f: F, points: &[f64], tol: f64) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> f64,
{
    let mut total = 0.0;
    for w in points.windows(2) {
        total += tanh_sinh(&f, w[0], w[1], tol)?;
    }
    Ok(total)
}
