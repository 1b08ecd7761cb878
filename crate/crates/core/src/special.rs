//! Bernoulli numbers and polygamma functions.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Largest tabulated Bernoulli index.
pub const BERNOULLI_MAX: usize = 64;

/// Argument above which the polygamma asymptotic series is used.
pub const POLYGAMMA_THRESHOLD: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("Bernoulli index {0} exceeds the table (max {BERNOULLI_MAX})")]
    OutOfTable(usize),
    #[error("polygamma argument must be finite and > 0, got {0}")]
    DomainError(f64),
}

/// Exact Bernoulli number with its double rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct Bernoulli {
    pub exact: BigRational,
    pub value: f64,
}

fn binomial_row(n: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for k in 0..n {
        let next = &row[k] * BigInt::from(n - k) / BigInt::from(k + 1);
        row.push(next);
    }
    row
}

fn table() -> &'static [Bernoulli] {
    static TABLE: OnceLock<Vec<Bernoulli>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Σ_{k=0}^{m} C(m+1, k) B_k = 0
        let mut b: Vec<BigRational> = vec![BigRational::one()];
        for m in 1..=BERNOULLI_MAX {
            let c = binomial_row(m + 1);
            let s = (0..m).fold(BigRational::zero(), |acc, k| {
                acc + BigRational::from_integer(c[k].clone()) * &b[k]
            });
            b.push(-s / BigRational::from_integer(BigInt::from(m + 1)));
        }
        b.into_iter()
            .map(|exact| {
                let value = exact.to_f64().expect("Bernoulli numbers fit in f64 up to B_64");
                Bernoulli { exact, value }
            })
            .collect()
    })
}

/// `B_m` (convention `B_1 = −1/2`).
pub fn bernoulli(m: usize) -> Result<Bernoulli, SpecialError> {
    table()
        .get(m)
        .cloned()
        .ok_or(SpecialError::OutOfTable(m))
}

/// `(2^{2m+2} − 1)|B_{2m+2}| / (2m+2)!`. Matching `F(ν)` to `tan(νT/2)`
/// term by term gives `Σ g_n/Δ_n^{2m+2} = c_m T^{2m+1}` with this `c_m`.
pub fn tangent_coefficient(m: usize) -> Result<f64, SpecialError> {
    let k = 2 * m + 2;
    let b = bernoulli(k)?;
    let mut factorial = BigInt::one();
    for j in 2..=k {
        factorial *= BigInt::from(j);
    }
    let c = BigRational::from_integer(BigInt::from(2).pow(k as u32) - BigInt::one()) * b.exact.abs()
        / BigRational::from_integer(factorial);
    Ok(c.to_f64().expect("finite coefficient"))
}

fn factorial_f64(n: usize) -> f64 {
    (2..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `ψ^{(m)}(x)`; `m = 0` is the digamma function.
pub fn polygamma(m: usize, x: f64) -> Result<f64, SpecialError> {
    polygamma_with_threshold(m, x, POLYGAMMA_THRESHOLD)
}

/// Shifts `x` above `threshold` with `ψ^{(m)}(x) = ψ^{(m)}(x+1) + (−1)^{m+1} m!/x^{m+1}`,
/// then sums the asymptotic series with Bernoulli coefficients.
pub fn polygamma_with_threshold(m: usize, x: f64, threshold: f64) -> Result<f64, SpecialError> {
    if !x.is_finite() || x <= 0.0 {
        return Err(SpecialError::DomainError(x));
    }
    let mut x = x;
    let mut shift = 0.0;
    if m == 0 {
        while x < threshold {
            shift -= 1.0 / x;
            x += 1.0;
        }
    } else {
        let mf = factorial_f64(m);
        while x < threshold {
            shift += mf / x.powi(m as i32 + 1);
            x += 1.0;
        }
    }
    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
    let tail = if m == 0 {
        let mut s = x.ln() - 0.5 / x;
        let x2 = x * x;
        let mut xp = x2;
        let mut prev = f64::INFINITY;
        for k in 1..=BERNOULLI_MAX / 2 {
            let term = table()[2 * k].value / (2 * k) as f64 / xp;
            if term.abs() >= prev || term.abs() < 1e-18 * s.abs() {
                break;
            }
            s -= term;
            prev = term.abs();
            xp *= x2;
        }
        s
    } else {
        let mut s = factorial_f64(m - 1) / x.powi(m as i32) + factorial_f64(m) / (2.0 * x.powi(m as i32 + 1));
        // ratio = (2k+m−1)!/(2k)!
        let mut ratio = factorial_f64(m - 1);
        let mut xp = x.powi(m as i32);
        let mut prev = f64::INFINITY;
        for k in 1..=BERNOULLI_MAX / 2 {
            ratio *= (2 * k + m - 2) as f64 * (2 * k + m - 1) as f64 / ((2 * k - 1) as f64 * (2 * k) as f64);
            xp *= x * x;
            let term = table()[2 * k].value * ratio / xp;
            if term.abs() >= prev || term.abs() < 1e-18 * s.abs() {
                break;
            }
            s += term;
            prev = term.abs();
        }
        sign * s
    };
    Ok(if m == 0 { tail + shift } else { tail + sign * shift })
}
