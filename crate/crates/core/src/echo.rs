//! Normalized echo intensity of the retrieved pulse.

use num_complex::Complex64 as C64;

use crate::config::MemoryConfig;
use crate::model::transfer_or_limit;
use crate::pulse::InputPulse;
use crate::quadrature::{integrate, QuadratureNotConverged, TrapezoidOptions};

/// `|∫ e^{−iνT} S(ν) f_ν dν|² / |∫ f_ν dν|²` for the memory's transfer
/// function.
pub fn echo_intensity(
    config: &MemoryConfig,
    recall_time: f64,
    pulse: &InputPulse,
    opts: &TrapezoidOptions,
) -> Result<f64, QuadratureNotConverged> {
    echo_intensity_with(|nu| transfer_or_limit(config, nu), recall_time, pulse, opts)
}

/// Same functional for an arbitrary transfer function.
pub fn echo_intensity_with<S>(
    transfer: S,
    recall_time: f64,
    pulse: &InputPulse,
    opts: &TrapezoidOptions,
) -> Result<f64, QuadratureNotConverged>
where
    S: Fn(f64) -> C64,
{
    let half = pulse.band_half_width();
    let (a, b) = (pulse.center - half, pulse.center + half);
    let overlap = integrate(a, b, opts, |nu| {
        C64::from_polar(pulse.spectrum(nu), -nu * recall_time) * transfer(nu)
    })?;
    Ok(overlap.norm_sqr() / pulse.spectrum_integral().powi(2))
}
