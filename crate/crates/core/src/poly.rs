//! Complex polynomials and a simultaneous all-roots finder.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("root iteration stalled after {iterations} iterations and {restarts} restarts")]
    RootFindingStalled { iterations: usize, restarts: usize },
    #[error("polynomial has no nonzero leading coefficient")]
    ZeroPolynomial,
}

/// Coefficients in ascending order: `c[0] + c[1] ν + …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<C64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn constant(c: C64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Multiplies in place by `c0 + c1 ν`.
    pub fn mul_linear(&mut self, c0: C64, c1: C64) {
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + 1];
        for (k, &a) in self.coeffs.iter().enumerate() {
            out[k] += a * c0;
            out[k + 1] += a * c1;
        }
        *self = Self::new(out);
    }

    pub fn add_scaled(&mut self, other: &Poly, scale: C64) {
        if other.coeffs.len() > self.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), C64::new(0.0, 0.0));
        }
        for (a, &b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += scale * b;
        }
        *self = Self::new(std::mem::take(&mut self.coeffs));
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `(p(z), p'(z))` by Horner.
    pub fn eval_with_derivative(&self, z: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Rounding-error scale of Horner at `z`: `Σ |c_k| |z|^k`.
    fn eval_bound(&self, z: C64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    /// Cauchy-style radius: geometric mean of the root moduli.
    fn initial_radius(&self) -> f64 {
        let n = self.degree() as f64;
        let lead = self.coeffs[self.degree()].norm();
        let c0 = self.coeffs[0].norm();
        if c0 == 0.0 {
            1.0
        } else {
            (c0 / lead).powf(1.0 / n)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    pub max_iterations: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            max_restarts: 4,
            seed: 0,
        }
    }
}

/// All roots of `p` by Aberth–Ehrlich iteration, each polished with Newton
/// steps. A stalled run restarts from randomly rotated initial guesses.
pub fn roots(p: &Poly, opts: &RootOptions) -> Result<Vec<C64>, RootError> {
    let n = p.degree();
    if p.coeffs.iter().all(|c| *c == C64::new(0.0, 0.0)) {
        return Err(RootError::ZeroPolynomial);
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = p.coeffs[n];
    let monic = Poly::new(p.coeffs.iter().map(|c| c / lead).collect());
    let radius = monic.initial_radius();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut total = 0;
    for restart in 0..=opts.max_restarts {
        let offset = if restart == 0 { 0.4 } else { rng.random_range(0.0..2.0 * PI) };
        let r = if restart == 0 { radius } else { radius * rng.random_range(0.5..2.0) };
        let mut z: Vec<C64> = (0..n)
            .map(|k| C64::from_polar(r, offset + 2.0 * PI * k as f64 / n as f64))
            .collect();
        let (done, iters) = aberth(&monic, &mut z, opts.max_iterations);
        total += iters;
        if !done {
            continue;
        }
        for zk in z.iter_mut() {
            polish(&monic, zk);
        }
        if z.iter().all(|&zk| accepted(&monic, zk)) {
            return Ok(z);
        }
    }
    Err(RootError::RootFindingStalled {
        iterations: total,
        restarts: opts.max_restarts,
    })
}

fn aberth(p: &Poly, z: &mut [C64], max_iterations: usize) -> (bool, usize) {
    let n = z.len();
    let mut settled = vec![false; n];
    for it in 1..=max_iterations {
        for k in 0..n {
            if settled[k] {
                continue;
            }
            let (v, dv) = p.eval_with_derivative(z[k]);
            if v.norm() <= 8.0 * f64::EPSILON * p.eval_bound(z[k]) {
                settled[k] = true;
                continue;
            }
            let ratio = v / dv;
            let repulsion: C64 = (0..n).filter(|&j| j != k).map(|j| 1.0 / (z[k] - z[j])).sum();
            let w = ratio / (1.0 - ratio * repulsion);
            if !w.re.is_finite() || !w.im.is_finite() {
                return (false, it);
            }
            z[k] -= w;
            if w.norm() <= 4.0 * f64::EPSILON * z[k].norm().max(1e-300) {
                settled[k] = true;
            }
        }
        if settled.iter().all(|&s| s) {
            return (true, it);
        }
    }
    (false, max_iterations)
}

fn polish(p: &Poly, z: &mut C64) {
    for _ in 0..3 {
        let (v, dv) = p.eval_with_derivative(*z);
        if dv == C64::new(0.0, 0.0) {
            return;
        }
        let next = *z - v / dv;
        if p.eval(next).norm() < v.norm() {
            *z = next;
        } else {
            return;
        }
    }
}

/// `|p/p'| ≤ 1e−10·max(1, |z|)`, or `p(z)` at the rounding floor.
fn accepted(p: &Poly, z: C64) -> bool {
    let (v, dv) = p.eval_with_derivative(z);
    if v.norm() <= 16.0 * f64::EPSILON * p.eval_bound(z) {
        return true;
    }
    (v / dv).norm() <= 1e-10 * z.norm().max(1.0)
}
