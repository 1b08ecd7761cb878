//! Gaussian single-photon input pulse.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputPulse {
    /// Spectral width σ.
    pub sigma: f64,
    /// Spectral center ν₀.
    pub center: f64,
}

impl InputPulse {
    /// Panics unless `sigma` is finite and positive.
    pub fn new(sigma: f64) -> Self {
        Self::centered(sigma, 0.0)
    }

    pub fn centered(sigma: f64, center: f64) -> Self {
        assert!(sigma.is_finite() && sigma > 0.0, "pulse width must be > 0");
        Self { sigma, center }
    }

    /// Width `0.2·N·Δ` used for an N-pair comb.
    pub fn for_comb(n: usize) -> Self {
        Self::new(0.2 * n as f64)
    }

    /// `f_ν = (2πσ²)^(-1/4) exp(−(ν−ν₀)²/(4σ²))`, normalized so `∫|f|² = 1`.
    pub fn spectrum(&self, nu: f64) -> f64 {
        gaussian_spectrum(self, nu)
    }

    /// `∫ f_ν dν = 2σ√π (2πσ²)^(-1/4)`.
    pub fn spectrum_integral(&self) -> f64 {
        2.0 * self.sigma * PI.sqrt() * (2.0 * PI * self.sigma * self.sigma).powf(-0.25)
    }

    /// Time-domain amplitude `(2π)^(-1/2) ∫ e^{−iν(t−t_c)} f_ν dν`, in closed
    /// form: `(2σ²/π)^(1/4) exp(−σ²τ²) e^{−iν₀τ}` with `τ = t − t_c`.
    pub fn time_amplitude(&self, t: f64, t_center: f64) -> C64 {
        let tau = t - t_center;
        let s2 = self.sigma * self.sigma;
        let amp = (2.0 * s2 / PI).powf(0.25) * (-s2 * tau * tau).exp();
        C64::from_polar(amp, -self.center * tau)
    }

    /// Pulse center far enough from `t = 0` that the input there is
    /// `exp(−36)` of its peak.
    pub fn default_time_center(&self) -> f64 {
        2.0 * 3.0 / self.sigma
    }

    /// Half-width of the spectral band used for quadratures.
    pub fn band_half_width(&self) -> f64 {
        8.0 * self.sigma
    }
}

pub fn gaussian_spectrum(pulse: &InputPulse, nu: f64) -> f64 {
    let s2 = pulse.sigma * pulse.sigma;
    let x = nu - pulse.center;
    (2.0 * PI * s2).powf(-0.25) * (-x * x / (4.0 * s2)).exp()
}
