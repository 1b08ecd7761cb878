//! Spectral matching conditions for symmetric absorber combs.
//!
//! For a symmetric lossless comb, `F(ν) = 2ν/κ + Σ_n 2g_nν/(Δ_n² − ν²)`.
//! Ideal memory needs `F(ν) = tan(νT/2)`. Matching the Taylor coefficients
//! of both sides gives one condition per odd order `2m+1`:
//!
//! ```text
//! Σ_n g_n / Δ_n^{2m+2} = c_m · T(0)^{2m+1},   c_m = (2^{2m+2} − 1)|B_{2m+2}| / (2m+2)!
//! ```
//!
//! with `T(0) = 4 Σ_n g_n/Δ_n²` in the broadband limit. The sums run over the
//! positive half of the comb.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, MemoryConfig};
use crate::model::{t0_analytic, ModelError};
use crate::optimize::OptimizationReport;
use crate::special::{polygamma, tangent_coefficient, SpecialError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("matching conditions need a symmetric comb")]
    AsymmetricConfig,
    #[error("at least one matching condition is required")]
    NoConditions,
    #[error("weights has {got} entries, expected {expected}")]
    WeightLength { got: usize, expected: usize },
    #[error("optimization needs every g_n > 0")]
    ZeroCoupling,
    #[error("optimizer stopped after {} evaluations without converging", .0.evaluations)]
    NotConverged(Box<OptimizationReport>),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Which center delay enters the right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchingForm {
    /// `T(0) = 4 Σ g_n/Δ_n²` (cavity term dropped).
    #[default]
    Broadband,
    /// `T(0) = 4/κ + 4 Σ g_n/Δ_n²`, exact for finite κ.
    WithCavity,
}

impl MatchingForm {
    /// Center delay of `config` under this form.
    pub fn center_delay(self, config: &MemoryConfig) -> f64 {
        let half: f64 = config
            .positive_half()
            .iter()
            .map(|&(d, g)| 4.0 * g / (d * d))
            .sum();
        match self {
            Self::Broadband => half,
            Self::WithCavity => half + 4.0 / config.kappa(),
        }
    }

    /// Reference delay for spectral-error evaluation: the truncated value for
    /// the broadband form and the true phase slope otherwise.
    pub fn reference_delay(self, config: &MemoryConfig) -> f64 {
        match self {
            Self::Broadband => self.center_delay(config),
            Self::WithCavity => t0_analytic(config),
        }
    }
}

/// Residuals of the matching conditions `m = 1..=M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchingResiduals {
    /// `|Σ g_n/Δ_n^{2m+2} − c_m t0^{2m+1}|`, index `m − 1`.
    pub residuals: Vec<f64>,
    pub t0: f64,
    pub weights: Vec<f64>,
}

impl MatchingResiduals {
    pub fn weighted_sum_of_squares(&self) -> f64 {
        self.residuals
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| w * r * r)
            .sum()
    }

    pub fn max(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// `4N − 1` conditions for an N-pair comb.
pub fn default_condition_count(half_count: usize) -> usize {
    (4 * half_count).saturating_sub(1).max(1)
}

/// Residuals with unit weights in the broadband form.
pub fn residuals(config: &MemoryConfig, conditions: usize) -> Result<MatchingResiduals, MatchError> {
    residuals_with(config, conditions, MatchingForm::Broadband, None)
}

pub fn residuals_with(
    config: &MemoryConfig,
    conditions: usize,
    form: MatchingForm,
    weights: Option<&[f64]>,
) -> Result<MatchingResiduals, MatchError> {
    if !config.check_symmetry() || config.half_count() == 0 {
        return Err(MatchError::AsymmetricConfig);
    }
    if conditions == 0 {
        return Err(MatchError::NoConditions);
    }
    let weights = match weights {
        Some(w) if w.len() != conditions => {
            return Err(MatchError::WeightLength {
                got: w.len(),
                expected: conditions,
            })
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; conditions],
    };
    let half = config.positive_half();
    let t0 = form.center_delay(config);
    let residuals = (1..=conditions)
        .map(|m| {
            let p = (2 * m + 2) as i32;
            let moment: f64 = half.iter().map(|&(d, g)| g / d.powi(p)).sum();
            Ok((moment - tangent_coefficient(m)? * t0.powi(2 * m as i32 + 1)).abs())
        })
        .collect::<Result<Vec<_>, SpecialError>>()?;
    Ok(MatchingResiduals {
        residuals,
        t0,
        weights,
    })
}

fn comb_factors(n: usize, shift: f64) -> (f64, f64) {
    assert!(n >= 1, "comb size N must be >= 1");
    let x = n as f64 + shift;
    let p1 = polygamma(1, x).expect("x > 0");
    let p3 = polygamma(3, x).expect("x > 0");
    (1.0 - p3 / PI.powi(4), 1.0 - 2.0 * p1 / (PI * PI))
}

/// Critical coupling of the equidistant comb `Δ_n = Δ(n − 1/2)`: the common
/// `g` that satisfies the `m = 1` condition exactly,
///
/// ```text
/// g_cr = (Δ/π) [1 − ψ⁽³⁾(N+1/2)/π⁴]^{1/2} [1 − 2ψ⁽¹⁾(N+1/2)/π²]^{−3/2}
/// ```
///
/// The brackets are the finite comb sums `Σ(n−1/2)^{-4}` and
/// `Σ(n−1/2)^{-2}` normalized by their infinite-comb limits.
pub fn g_critical(n: usize, delta: f64) -> f64 {
    let (a, b) = comb_factors(n, 0.5);
    delta / PI * a.sqrt() * b.powf(-1.5)
}

/// Center delay at `g_cr`: `(2π/Δ)(π g_cr/Δ)[1 − 2ψ⁽¹⁾(N+1/2)/π²]`.
pub fn t0_critical(n: usize, delta: f64) -> f64 {
    let (_, b) = comb_factors(n, 0.5);
    2.0 * PI / delta * (PI * g_critical(n, delta) / delta) * b
}

/// The same closed form with the polygamma argument at `N − 1/2`. It does
/// not satisfy the `m = 1` condition and diverges at `N = 1`; it is kept
/// for comparison only.
pub fn g_critical_lower_argument(n: usize, delta: f64) -> f64 {
    let (a, b) = comb_factors(n, -0.5);
    delta / PI * a.sqrt() * b.powf(-1.5)
}

/// Leading large-N behaviour `π g_cr/Δ ≈ 1 + 3/(π² N)`.
pub fn g_critical_asymptotic(n: usize, delta: f64) -> f64 {
    delta / PI * (1.0 + 3.0 / (PI * PI * n as f64))
}

/// Continuum-limit comparison `T(0) ≈ (2π/Δ)(1 + 1/(π² N))`.
pub fn t0_critical_asymptotic(n: usize, delta: f64) -> f64 {
    2.0 * PI / delta * (1.0 + 1.0 / (PI * PI * n as f64))
}
