//! Device parameter sets.
//!
//! All quantities are stored in units of the comb spacing `Δ` (so `Δ = 1`
//! internally). `unit_delta` remembers the physical value of `Δ` for export.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used when pairing absorbers for the symmetry check.
const SYMMETRY_RTOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("kappa must be finite and > 0, got {0}")]
    InvalidKappa(f64),
    #[error("unit_delta must be finite and > 0, got {0}")]
    InvalidUnit(f64),
    #[error("absorbers[{index}].{field}: {reason}")]
    InvalidAbsorber {
        index: usize,
        field: &'static str,
        reason: String,
    },
    #[error("absorber count must be even, got {0}")]
    OddAbsorberCount(usize),
    #[error("comb size N must be >= 1")]
    EmptyComb,
}

/// One resonant subsystem coupled to the cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Absorber {
    /// Detuning from the carrier, nonzero.
    pub detuning: f64,
    /// Effective linewidth `2|g⁰|²/κ`.
    pub g: f64,
    /// Intrinsic amplitude decay rate.
    pub gamma: f64,
}

impl Absorber {
    pub fn new(detuning: f64, g: f64, gamma: f64) -> Self {
        Self { detuning, g, gamma }
    }

    fn validate(&self, index: usize) -> Result<(), ConfigError> {
        let bad = |field, reason: &str| ConfigError::InvalidAbsorber {
            index,
            field,
            reason: reason.to_string(),
        };
        if !self.detuning.is_finite() {
            return Err(bad("detuning", "must be finite"));
        }
        if self.detuning == 0.0 {
            return Err(bad("detuning", "must be nonzero"));
        }
        if !self.g.is_finite() || self.g < 0.0 {
            return Err(bad("g", "must be finite and >= 0"));
        }
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(bad("gamma", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// Cavity coupling constant `g⁰ = sqrt(g κ / 2)`, taken real and positive.
    pub fn bare_coupling(&self, kappa: f64) -> f64 {
        (self.g * kappa / 2.0).sqrt()
    }
}

/// Full parameter set of a multi-absorber cavity memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryConfig {
    kappa: f64,
    absorbers: Vec<Absorber>,
    unit_delta: f64,
    symmetric: bool,
}

impl MemoryConfig {
    /// Validates per-field constraints. The `symmetric` flag is a declaration
    /// only; see [`MemoryConfig::check_symmetry`].
    pub fn new(
        kappa: f64,
        absorbers: Vec<Absorber>,
        symmetric: bool,
    ) -> Result<Self, ConfigError> {
        Self::with_unit(kappa, absorbers, symmetric, 1.0)
    }

    pub fn with_unit(
        kappa: f64,
        absorbers: Vec<Absorber>,
        symmetric: bool,
        unit_delta: f64,
    ) -> Result<Self, ConfigError> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(ConfigError::InvalidKappa(kappa));
        }
        if !unit_delta.is_finite() || unit_delta <= 0.0 {
            return Err(ConfigError::InvalidUnit(unit_delta));
        }
        if absorbers.len() % 2 != 0 {
            return Err(ConfigError::OddAbsorberCount(absorbers.len()));
        }
        for (i, a) in absorbers.iter().enumerate() {
            a.validate(i)?;
        }
        Ok(Self {
            kappa,
            absorbers,
            unit_delta,
            symmetric,
        })
    }

    /// Symmetric comb built from the positive half: each `(Δ, g)` gets a
    /// partner `(-Δ, g)`. Absorbers are stored in ascending detuning order.
    pub fn symmetric_from_half(
        kappa: f64,
        half: &[(f64, f64)],
        gamma: f64,
    ) -> Result<Self, ConfigError> {
        if half.is_empty() {
            return Err(ConfigError::EmptyComb);
        }
        let mut absorbers: Vec<Absorber> = half
            .iter()
            .flat_map(|&(d, g)| [Absorber::new(-d.abs(), g, gamma), Absorber::new(d.abs(), g, gamma)])
            .collect();
        absorbers.sort_by(|a, b| a.detuning.total_cmp(&b.detuning));
        Self::new(kappa, absorbers, true)
    }

    /// Equidistant comb `Δ_n = ±(n − 1/2)`, `n = 1..N`, with a common `g`.
    pub fn equidistant(n: usize, g: f64, gamma: f64, kappa: f64) -> Result<Self, ConfigError> {
        let half: Vec<(f64, f64)> = (1..=n).map(|k| (k as f64 - 0.5, g)).collect();
        Self::symmetric_from_half(kappa, &half, gamma)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn absorbers(&self) -> &[Absorber] {
        &self.absorbers
    }

    pub fn unit_delta(&self) -> f64 {
        self.unit_delta
    }

    pub fn is_declared_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Half the number of absorbers.
    pub fn half_count(&self) -> usize {
        self.absorbers.len() / 2
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self, ConfigError> {
        Self::with_unit(kappa, self.absorbers.clone(), self.symmetric, self.unit_delta)
    }

    /// Same config with every absorber's loss replaced.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self, ConfigError> {
        let absorbers = self
            .absorbers
            .iter()
            .map(|a| Absorber { gamma, ..*a })
            .collect();
        Self::with_unit(self.kappa, absorbers, self.symmetric, self.unit_delta)
    }

    /// Same config with every absorber's linewidth set to `g`.
    pub fn with_common_g(&self, g: f64) -> Result<Self, ConfigError> {
        let absorbers = self.absorbers.iter().map(|a| Absorber { g, ..*a }).collect();
        Self::with_unit(self.kappa, absorbers, self.symmetric, self.unit_delta)
    }

    pub fn lossless(&self) -> Self {
        self.with_gamma(0.0).expect("zero loss is always valid")
    }

    pub fn is_lossless(&self) -> bool {
        self.absorbers.iter().all(|a| a.gamma == 0.0)
    }

    /// Checks `g_{-n} = g_n`, `Δ_{-n} = -Δ_n`, `γ_{-n} = γ_n` by pairing each
    /// absorber with one unused partner.
    pub fn check_symmetry(&self) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= SYMMETRY_RTOL * a.abs().max(b.abs()).max(1e-300);
        let mut used = vec![false; self.absorbers.len()];
        for (i, a) in self.absorbers.iter().enumerate() {
            if used[i] {
                continue;
            }
            let partner = self.absorbers.iter().enumerate().position(|(j, b)| {
                j != i
                    && !used[j]
                    && close(a.detuning, -b.detuning)
                    && (close(a.g, b.g) || a.g == b.g)
                    && (close(a.gamma, b.gamma) || a.gamma == b.gamma)
            });
            match partner {
                Some(j) => {
                    used[i] = true;
                    used[j] = true;
                }
                None => return false,
            }
        }
        true
    }

    /// Positive-detuning half `(Δ_n, g_n)` sorted by detuning. Only
    /// meaningful for symmetric configs.
    pub fn positive_half(&self) -> Vec<(f64, f64)> {
        let mut half: Vec<(f64, f64)> = self
            .absorbers
            .iter()
            .filter(|a| a.detuning > 0.0)
            .map(|a| (a.detuning, a.g))
            .collect();
        half.sort_by(|a, b| a.0.total_cmp(&b.0));
        half
    }

    /// Largest absolute detuning, or 0 for an empty comb.
    pub fn span(&self) -> f64 {
        self.absorbers
            .iter()
            .map(|a| a.detuning.abs())
            .fold(0.0, f64::max)
    }

    /// Broadband-cavity diagnostic `NΔ/κ ≤ sqrt(γ_max)`.
    pub fn broadband_diagnostic(&self) -> BroadbandDiagnostic {
        let ratio = self.half_count() as f64 / self.kappa;
        let gamma_max = self.absorbers.iter().map(|a| a.gamma).fold(0.0, f64::max);
        let bound = gamma_max.sqrt();
        BroadbandDiagnostic {
            ratio,
            bound,
            satisfied: ratio <= bound && bound < 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BroadbandDiagnostic {
    /// `NΔ/κ`.
    pub ratio: f64,
    /// `sqrt(γ/Δ)` using the largest γ.
    pub bound: f64,
    pub satisfied: bool,
}
