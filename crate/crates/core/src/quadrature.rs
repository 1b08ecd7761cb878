//! Adaptive trapezoid rule for smooth integrands on a finite interval.
//!
//! The step is halved until two successive estimates agree. Old nodes are
//! reused, so each level only evaluates the new midpoints.

use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("quadrature did not converge: last change {change:e} with {nodes} nodes")]
pub struct QuadratureNotConverged {
    pub change: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TrapezoidOptions {
    /// Relative tolerance between successive refinements.
    pub rtol: f64,
    /// Absolute floor added to the tolerance.
    pub atol: f64,
    /// Largest initial step.
    pub max_step: f64,
    pub max_levels: u32,
}

impl Default for TrapezoidOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 0.0,
            max_step: 0.02,
            max_levels: 14,
        }
    }
}

/// Integrates a vector-valued integrand: `f(ν, out)` accumulates into every
/// component of `out` at once. Convergence is measured on the max-norm of
/// the change relative to the max-norm of the result.
pub fn integrate_vec<F>(
    a: f64,
    b: f64,
    dim: usize,
    opts: &TrapezoidOptions,
    mut f: F,
) -> Result<Vec<C64>, QuadratureNotConverged>
where
    F: FnMut(f64, f64, &mut [C64]),
{
    let mut n = (((b - a) / opts.max_step).ceil() as usize).max(2);
    let mut h = (b - a) / n as f64;
    let mut sum = vec![C64::new(0.0, 0.0); dim];
    f(a, 0.5, &mut sum);
    f(b, 0.5, &mut sum);
    for k in 1..n {
        f(a + h * k as f64, 1.0, &mut sum);
    }
    let mut estimate: Vec<C64> = sum.iter().map(|v| v * h).collect();
    let mut change = f64::INFINITY;
    for _ in 0..opts.max_levels {
        for k in 0..n {
            f(a + h * (k as f64 + 0.5), 1.0, &mut sum);
        }
        n *= 2;
        h *= 0.5;
        let next: Vec<C64> = sum.iter().map(|v| v * h).collect();
        change = next
            .iter()
            .zip(&estimate)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        let scale = next.iter().map(|v| v.norm()).fold(0.0, f64::max);
        estimate = next;
        if change <= opts.rtol * scale + opts.atol {
            return Ok(estimate);
        }
    }
    Err(QuadratureNotConverged { change, nodes: n + 1 })
}

/// Scalar convenience wrapper.
pub fn integrate<F>(a: f64, b: f64, opts: &TrapezoidOptions, mut f: F) -> Result<C64, QuadratureNotConverged>
where
    F: FnMut(f64) -> C64,
{
    integrate_vec(a, b, 1, opts, |x, w, out| out[0] += w * f(x)).map(|v| v[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral() {
        let opts = TrapezoidOptions { rtol: 1e-12, ..Default::default() };
        let v = integrate(-10.0, 10.0, &opts, |x| C64::new((-x * x).exp(), 0.0)).unwrap();
        assert!((v.re - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_vector() {
        let opts = TrapezoidOptions { rtol: 1e-12, ..Default::default() };
        let ts = [0.0, 1.0, 2.5];
        let v = integrate_vec(-12.0, 12.0, 3, &opts, |x, w, out| {
            for (o, &t) in out.iter_mut().zip(&ts) {
                *o += w * C64::from_polar((-x * x / 4.0).exp(), -x * t);
            }
        })
        .unwrap();
        for (vi, &t) in v.iter().zip(&ts) {
            let exact = 2.0 * std::f64::consts::PI.sqrt() * (-t * t).exp();
            assert!((vi - exact).norm() < 1e-11);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let opts = TrapezoidOptions { rtol: 1e-14, max_levels: 2, ..Default::default() };
        let r = integrate(0.0, 1.0, &opts, |x| C64::new(x.sqrt(), 0.0));
        assert!(r.is_err());
    }
}
