//! Frequency-domain model of absorbers in a single-mode cavity.
//!
//! `F(ν) = 2ν/κ + Σ g_n / (Δ_n − iγ_n − ν)` and `S(ν) = (1 + iF)/(1 − iF)`.
//! The delay is read off the continuous phase of `S`, unwrapped outward from
//! `ν = 0`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::config::MemoryConfig;
use crate::poly::{roots, RootOptions};
use crate::topology::cayley_polynomial;

/// Default floor applied to `δS²` before taking the decibel value.
pub const DBS_FLOOR: f64 = 1e-300;

/// Lossless grid points closer than this to a detuning are moved off it.
pub const POLE_OFFSET: f64 = 1e-6;

/// Guard on the wrapped phase step when unwrapping raw samples.
const RAW_UNWRAP_GUARD: f64 = 0.9 * PI;

/// Tolerance on the midpoint consistency check during unwrapping.
const MIDPOINT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("frequency {nu} hits the lossless pole of absorber {index}")]
    PoleHit { index: usize, nu: f64 },
    #[error("phase unwrap ambiguous between nu={lo} and nu={hi}; refine the grid")]
    UnwrapAmbiguity { lo: f64, hi: f64 },
    #[error("frequency grid must be strictly increasing and finite")]
    BadGrid,
    #[error("non-finite frequency {0}")]
    NonFinite(f64),
}

fn pole_hit(delta: f64, nu: f64) -> bool {
    (delta - nu).abs() <= 4.0 * f64::EPSILON * delta.abs().max(1.0)
}

/// `F(ν)`.
pub fn response_fn(config: &MemoryConfig, nu: f64) -> Result<C64, ModelError> {
    if !nu.is_finite() {
        return Err(ModelError::NonFinite(nu));
    }
    let mut f = C64::new(2.0 * nu / config.kappa(), 0.0);
    for (index, a) in config.absorbers().iter().enumerate() {
        if a.gamma == 0.0 && pole_hit(a.detuning, nu) {
            return Err(ModelError::PoleHit { index, nu });
        }
        f += a.g / C64::new(a.detuning - nu, -a.gamma);
    }
    Ok(f)
}

/// `dF/dν`.
pub fn response_derivative(config: &MemoryConfig, nu: f64) -> Result<C64, ModelError> {
    if !nu.is_finite() {
        return Err(ModelError::NonFinite(nu));
    }
    let mut df = C64::new(2.0 / config.kappa(), 0.0);
    for (index, a) in config.absorbers().iter().enumerate() {
        if a.gamma == 0.0 && pole_hit(a.detuning, nu) {
            return Err(ModelError::PoleHit { index, nu });
        }
        let d = C64::new(a.detuning - nu, -a.gamma);
        df += a.g / (d * d);
    }
    Ok(df)
}

fn cayley(f: C64) -> C64 {
    let i = C64::i();
    (1.0 + i * f) / (1.0 - i * f)
}

/// Transfer function `S(ν)`.
pub fn transfer_fn(config: &MemoryConfig, nu: f64) -> Result<C64, ModelError> {
    response_fn(config, nu).map(cayley)
}

/// `S(ν)` with lossless pole hits replaced by the limit `S → −1` (F → ∞).
/// Used by quadratures whose nodes cannot be moved.
pub(crate) fn transfer_or_limit(config: &MemoryConfig, nu: f64) -> C64 {
    match response_fn(config, nu) {
        Ok(f) => cayley(f),
        Err(_) => C64::new(-1.0, 0.0),
    }
}

/// `η(ν) = |S(ν)|²`.
pub fn spectral_efficiency(config: &MemoryConfig, nu: f64) -> Result<f64, ModelError> {
    transfer_fn(config, nu).map(|s| s.norm_sqr())
}

/// `δS²(ν) = |S(ν)² − exp(2iνT₀)|`.
pub fn spectral_error(config: &MemoryConfig, nu: f64, t0: f64) -> Result<f64, ModelError> {
    transfer_fn(config, nu).map(|s| spectral_error_of(s, nu, t0))
}

pub fn spectral_error_of(s: C64, nu: f64, t0: f64) -> f64 {
    (s * s - C64::from_polar(1.0, 2.0 * nu * t0)).norm()
}

/// Decibel rendering of a spectral error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dbs {
    pub value: f64,
    /// Set when the input was below the floor and got clamped.
    pub clamped: bool,
}

/// `10 log10(δS²)` with `δS²` clamped at `floor`.
pub fn dbs(delta_s2: f64, floor: f64) -> Dbs {
    let clamped = !(delta_s2 >= floor);
    let v = if clamped { floor } else { delta_s2 };
    Dbs {
        value: 10.0 * v.log10(),
        clamped,
    }
}

/// Slope of the continuous phase of `S`: `Re(2F'/(1 + F²))`.
pub fn phase_slope(config: &MemoryConfig, nu: f64) -> Result<f64, ModelError> {
    let f = response_fn(config, nu)?;
    let df = response_derivative(config, nu)?;
    Ok((2.0 * df / (1.0 + f * f)).re)
}

/// Full delay at the band center: the phase slope of `S` at `ν = 0`,
/// including the cavity term `4/κ` for symmetric lossless combs.
pub fn t0_analytic(config: &MemoryConfig) -> f64 {
    phase_slope(config, 0.0).expect("detunings are nonzero so nu = 0 is never a pole")
}

/// Broadband truncation `2 Σ g_n/Δ_n²` over all absorbers, i.e. `4 Σ_{n>0}`
/// for a symmetric comb. The cavity term is dropped.
pub fn t0_truncated(config: &MemoryConfig) -> f64 {
    config
        .absorbers()
        .iter()
        .map(|a| 2.0 * a.g / (a.detuning * a.detuning))
        .sum()
}

/// Both center delays side by side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayDiagnostic {
    pub full: f64,
    pub truncated: f64,
    pub cavity_term: f64,
}

pub fn delay_diagnostic(config: &MemoryConfig) -> DelayDiagnostic {
    let full = t0_analytic(config);
    let truncated = t0_truncated(config);
    DelayDiagnostic {
        full,
        truncated,
        cavity_term: full - truncated,
    }
}

fn wrap(phase: f64) -> f64 {
    let mut p = phase % (2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    } else if p <= -PI {
        p += 2.0 * PI;
    }
    p
}

/// Zeros and poles of `S`, which is `−Π(ν − z)/Π(ν − p)`. Each factor's
/// phase is continuous along the real axis, so their sum gives the exact
/// phase change over any interval regardless of sampling.
struct Factorization {
    zeros: Vec<C64>,
    poles: Vec<C64>,
}

impl Factorization {
    fn new(config: &MemoryConfig) -> Option<Self> {
        let opts = RootOptions::default();
        Some(Self {
            zeros: roots(&cayley_polynomial(config, 1.0), &opts).ok()?,
            poles: roots(&cayley_polynomial(config, -1.0), &opts).ok()?,
        })
    }

    fn phase_change(&self, a: f64, b: f64) -> f64 {
        let turn = |r: &C64| (C64::new(b, 0.0) - r).arg() - (C64::new(a, 0.0) - r).arg();
        self.zeros.iter().map(turn).sum::<f64>() - self.poles.iter().map(turn).sum::<f64>()
    }
}

/// Continuous phase of `S` at a sorted set of points, walking outward from
/// `ν = 0`. Each wrapped step is checked against its midpoint and against
/// the phase change implied by the zeros and poles of `S`; any mismatch
/// means the step hides a winding.
fn unwrapped_phase_on_path(config: &MemoryConfig, path: &[f64]) -> Result<Vec<f64>, ModelError> {
    let zero = path
        .iter()
        .position(|&v| v == 0.0)
        .expect("path contains the anchor");
    let arg = |nu: f64| transfer_fn(config, nu).map(|s| s.arg());
    let factors = Factorization::new(config);
    let mut phase = vec![0.0; path.len()];
    phase[zero] = arg(0.0)?;
    let step = |from: usize, to: usize, phase: &mut Vec<f64>| -> Result<(), ModelError> {
        let (a, b) = (path[from], path[to]);
        let pa = arg(a)?;
        let pb = arg(b)?;
        let pm = arg(0.5 * (a + b))?;
        let full = wrap(pb - pa);
        let halves = wrap(pm - pa) + wrap(pb - pm);
        let windings = factors
            .as_ref()
            .map_or(0.0, |f| ((f.phase_change(a, b) - full) / (2.0 * PI)).round());
        if (halves - full).abs() > MIDPOINT_TOL || windings != 0.0 {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            return Err(ModelError::UnwrapAmbiguity { lo, hi });
        }
        phase[to] = phase[from] + full;
        Ok(())
    };
    for k in zero + 1..path.len() {
        step(k - 1, k, &mut phase)?;
    }
    for k in (0..zero).rev() {
        step(k + 1, k, &mut phase)?;
    }
    Ok(phase)
}

fn check_grid(grid: &[f64]) -> Result<(), ModelError> {
    if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ModelError::BadGrid);
    }
    Ok(())
}

/// Delay `T(ν) = φ(ν)/ν` on a strictly increasing grid, where `φ` is the
/// phase of `S` unwrapped along the grid. At `ν = 0` the analytic phase
/// slope is returned. If the grid does not reach zero, bridging points with
/// the grid's smallest spacing connect it to the anchor.
pub fn delay_curve(config: &MemoryConfig, grid: &[f64]) -> Result<Vec<f64>, ModelError> {
    check_grid(grid)?;
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    let spacing = grid
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
        .min(0.01);
    let mut path: Vec<f64> = grid.to_vec();
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if lo > 0.0 {
        let k = (lo / spacing).ceil() as usize;
        path.extend((0..k).map(|j| j as f64 * lo / k as f64));
    } else if hi < 0.0 {
        let k = (-hi / spacing).ceil() as usize;
        path.extend((0..k).map(|j| j as f64 * hi / k as f64));
    } else if !grid.contains(&0.0) {
        path.push(0.0);
    }
    path.sort_by(f64::total_cmp);
    path.dedup();
    let phase = unwrapped_phase_on_path(config, &path)?;
    grid.iter()
        .map(|&nu| {
            if nu == 0.0 {
                phase_slope(config, 0.0)
            } else {
                let k = path.binary_search_by(|p| p.total_cmp(&nu)).expect("grid point on path");
                Ok(phase[k] / nu)
            }
        })
        .collect()
}

/// Delay at a single frequency. The unwrap path from zero is refined until
/// the midpoint checks pass.
pub fn delay_time(config: &MemoryConfig, nu: f64) -> Result<f64, ModelError> {
    if !nu.is_finite() {
        return Err(ModelError::NonFinite(nu));
    }
    if nu == 0.0 {
        return phase_slope(config, 0.0);
    }
    let mut steps = ((nu.abs() / 0.01).ceil() as usize).max(1);
    for _ in 0..12 {
        let mut path: Vec<f64> = (0..=steps).map(|j| nu * j as f64 / steps as f64).collect();
        if nu < 0.0 {
            path.reverse();
        }
        match unwrapped_phase_on_path(config, &path) {
            Ok(phase) => {
                let idx = if nu < 0.0 { 0 } else { steps };
                return Ok(phase[idx] / nu);
            }
            Err(ModelError::UnwrapAmbiguity { .. }) => steps *= 4,
            Err(e) => return Err(e),
        }
    }
    Err(ModelError::UnwrapAmbiguity { lo: nu.min(0.0), hi: nu.max(0.0) })
}

/// Delay recovered from raw samples `(ν, S)` without access to the model.
/// Unwrapping starts at the sample nearest `ν = 0`, whose principal phase is
/// taken as continuous with `φ(0)`. At an exact `ν = 0` sample the slope is
/// the symmetric difference of the neighbouring unwrapped phases.
pub fn delay_from_samples(grid: &[f64], s: &[C64]) -> Result<Vec<f64>, ModelError> {
    check_grid(grid)?;
    if grid.len() != s.len() || grid.is_empty() {
        return Err(ModelError::BadGrid);
    }
    let anchor = (0..grid.len())
        .min_by(|&a, &b| grid[a].abs().total_cmp(&grid[b].abs()))
        .unwrap();
    let mut phase = vec![0.0; grid.len()];
    phase[anchor] = s[anchor].arg();
    let mut step = |from: usize, to: usize| -> Result<(), ModelError> {
        let d = wrap(s[to].arg() - s[from].arg());
        if d.abs() > RAW_UNWRAP_GUARD {
            return Err(ModelError::UnwrapAmbiguity {
                lo: grid[from.min(to)],
                hi: grid[from.max(to)],
            });
        }
        phase[to] = phase[from] + d;
        Ok(())
    };
    for k in anchor + 1..grid.len() {
        step(k - 1, k)?;
    }
    for k in (0..anchor).rev() {
        step(k + 1, k)?;
    }
    Ok(grid
        .iter()
        .enumerate()
        .map(|(k, &nu)| {
            if nu != 0.0 {
                phase[k] / nu
            } else if k > 0 && k + 1 < grid.len() {
                (phase[k + 1] - phase[k - 1]) / (grid[k + 1] - grid[k - 1])
            } else {
                let j = if k == 0 { 1 } else { k - 1 };
                (phase[j] - phase[k]) / (grid[j] - grid[k])
            }
        })
        .collect())
}

/// Uniform grid on `[lo, hi]` with lossless detunings avoided by at least
/// [`POLE_OFFSET`].
pub fn uniform_grid(
    lo: f64,
    hi: f64,
    points: usize,
    config: &MemoryConfig,
) -> Result<Vec<f64>, ModelError> {
    if !lo.is_finite() || !hi.is_finite() || points == 0 || (points > 1 && hi <= lo) {
        return Err(ModelError::BadGrid);
    }
    let mut grid: Vec<f64> = if points == 1 {
        vec![lo]
    } else {
        (0..points)
            .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
            .collect()
    };
    for nu in grid.iter_mut() {
        for a in config.absorbers().iter().filter(|a| a.gamma == 0.0) {
            if (*nu - a.detuning).abs() < POLE_OFFSET {
                *nu = a.detuning + POLE_OFFSET;
            }
        }
    }
    check_grid(&grid)?;
    Ok(grid)
}

/// Transfer function and derived scalar fields on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSample {
    pub nu_grid: Vec<f64>,
    pub s_values: Vec<C64>,
    pub delay: Vec<f64>,
    pub efficiency: Vec<f64>,
    pub error: Vec<f64>,
    pub dbs: Vec<Dbs>,
    /// Reference delay used for `error`.
    pub t0: f64,
}

impl SpectrumSample {
    pub fn compute(config: &MemoryConfig, grid: &[f64], t0: f64) -> Result<Self, ModelError> {
        check_grid(grid)?;
        let s_values = grid
            .iter()
            .map(|&nu| transfer_fn(config, nu))
            .collect::<Result<Vec<_>, _>>()?;
        let delay = delay_curve(config, grid)?;
        let efficiency = s_values.iter().map(|s| s.norm_sqr()).collect();
        let error: Vec<f64> = s_values
            .iter()
            .zip(grid)
            .map(|(&s, &nu)| spectral_error_of(s, nu, t0))
            .collect();
        let dbs = error.iter().map(|&e| dbs(e, DBS_FLOOR)).collect();
        Ok(Self {
            nu_grid: grid.to_vec(),
            s_values,
            delay,
            efficiency,
            error,
            dbs,
            t0,
        })
    }

    pub fn max_error(&self) -> f64 {
        self.error.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_efficiency(&self) -> f64 {
        self.efficiency.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Largest `δS²` over a band sampled with `points` uniform nodes.
pub fn band_error(
    config: &MemoryConfig,
    band: (f64, f64),
    points: usize,
    t0: f64,
) -> Result<f64, ModelError> {
    let grid = uniform_grid(band.0, band.1, points, config)?;
    grid.iter().try_fold(0.0_f64, |acc, &nu| {
        spectral_error(config, nu, t0).map(|e| acc.max(e))
    })
}
