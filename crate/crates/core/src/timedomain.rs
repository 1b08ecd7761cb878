//! Time-domain input–output simulation.
//!
//! Equations of motion, with `g⁰_n = sqrt(g_n κ / 2)`:
//!
//! ```text
//! ds_n/dt = −(iΔ_n + γ_n) s_n − g⁰_n a
//! da/dt   = −(κ/2) a + Σ g⁰_n s_n + √κ a_in
//! a_out   = √κ a − a_in
//! ```
//!
//! Energy flow: `d/dt (|a|² + Σ|s_n|²) = |a_in|² − |a_out|² − 2 Σ γ_n |s_n|²`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

use crate::config::MemoryConfig;
use crate::model::transfer_or_limit;
use crate::pulse::InputPulse;
use crate::quadrature::{integrate_vec, QuadratureNotConverged, TrapezoidOptions};
use crate::topology::{resonance_lines, TopologyError, TopologyOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("time grid must have at least two strictly increasing finite points")]
    BadGrid,
    #[error("step limit {0} reached")]
    StepLimit(usize),
    #[error("state did not ring down below {threshold:e} by t = {t}")]
    RingDownIncomplete { threshold: f64, t: f64 },
    #[error("state became non-finite at t = {0}")]
    NonFinite(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureNotConverged),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    /// Runge–Kutta unless κ exceeds the stiffness threshold.
    Auto,
    /// Dormand–Prince 5(4); falls back to the exponential scheme if the step underflows.
    RungeKutta,
    Exponential,
}

#[derive(Debug, Clone, Copy)]
pub struct SimulationOptions {
    pub rtol: f64,
    pub atol: f64,
    pub method: Method,
    /// κ above which `Auto` picks the exponential scheme.
    pub stiff_kappa: f64,
    pub max_steps: usize,
    /// Extend the grid until the stored energy falls below this fraction of
    /// the input energy.
    pub ring_down: Option<f64>,
    /// Latest time the ring-down extension may reach.
    pub ring_down_limit: f64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-13,
            method: Method::Auto,
            stiff_kappa: 1e3,
            max_steps: 10_000_000,
            ring_down: None,
            ring_down_limit: 1e5,
        }
    }
}

/// Energy totals over the simulated window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBudget {
    pub input: f64,
    pub output: f64,
    pub absorbed: f64,
    pub stored_final: f64,
}

impl EnergyBudget {
    /// `input − output − absorbed − stored_final`; zero up to quadrature error.
    pub fn imbalance(&self) -> f64 {
        self.input - self.output - self.absorbed - self.stored_final
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeTrace {
    pub t: Vec<f64>,
    pub a_in: Vec<C64>,
    pub a_cavity: Vec<C64>,
    /// `s_modes[n][k]`: amplitude of absorber `n` at `t[k]`.
    pub s_modes: Vec<Vec<C64>>,
    pub a_out: Vec<C64>,
    pub t_center: f64,
    pub method: Method,
    pub energy: EnergyBudget,
}

struct System {
    kappa: f64,
    sqrt_kappa: f64,
    coupling: Vec<f64>,
    diag: Vec<C64>,
    gamma: Vec<f64>,
    pulse: InputPulse,
    t_center: f64,
}

impl System {
    fn new(config: &MemoryConfig, pulse: &InputPulse, t_center: f64) -> Self {
        let kappa = config.kappa();
        Self {
            kappa,
            sqrt_kappa: kappa.sqrt(),
            coupling: config.absorbers().iter().map(|a| a.bare_coupling(kappa)).collect(),
            diag: config.absorbers().iter().map(|a| C64::new(-a.gamma, -a.detuning)).collect(),
            gamma: config.absorbers().iter().map(|a| a.gamma).collect(),
            pulse: *pulse,
            t_center,
        }
    }

    fn dim(&self) -> usize {
        self.coupling.len() + 1
    }

    fn input(&self, t: f64) -> C64 {
        self.pulse.time_amplitude(t, self.t_center)
    }

    fn rhs(&self, t: f64, x: &[C64], out: &mut [C64]) {
        let a = x[0];
        let mut da = -0.5 * self.kappa * a + self.sqrt_kappa * self.input(t);
        for (n, &g0) in self.coupling.iter().enumerate() {
            da += g0 * x[n + 1];
            out[n + 1] = self.diag[n] * x[n + 1] - g0 * a;
        }
        out[0] = da;
    }

    fn matrix(&self) -> DMatrix<C64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        m[(0, 0)] = C64::new(-0.5 * self.kappa, 0.0);
        for (n, &g0) in self.coupling.iter().enumerate() {
            m[(0, n + 1)] = C64::new(g0, 0.0);
            m[(n + 1, 0)] = C64::new(-g0, 0.0);
            m[(n + 1, n + 1)] = self.diag[n];
        }
        m
    }

    fn stored(&self, x: &[C64]) -> f64 {
        x.iter().map(|v| v.norm_sqr()).sum()
    }

    fn fastest_rate(&self) -> f64 {
        let detuning = self.diag.iter().map(|d| d.norm()).fold(0.0, f64::max);
        0.5 * self.kappa + detuning + self.pulse.sigma + self.pulse.center.abs()
    }
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct RungeKutta<'a> {
    sys: &'a System,
    rtol: f64,
    atol: f64,
    h: f64,
    steps: usize,
    max_steps: usize,
    k: Vec<Vec<C64>>,
    stage: Vec<C64>,
    fsal_valid: bool,
}

enum Advance {
    Done,
    Underflow(f64),
}

impl<'a> RungeKutta<'a> {
    fn new(sys: &'a System, opts: &SimulationOptions) -> Self {
        let d = sys.dim();
        Self {
            sys,
            rtol: opts.rtol,
            atol: opts.atol,
            h: 0.01 / sys.fastest_rate(),
            steps: 0,
            max_steps: opts.max_steps,
            k: vec![vec![C64::new(0.0, 0.0); d]; 7],
            stage: vec![C64::new(0.0, 0.0); d],
            fsal_valid: false,
        }
    }

    /// Integrates `x` from `t0` to exactly `t1`.
    fn advance(&mut self, t0: f64, t1: f64, x: &mut [C64]) -> Result<Advance, SimulationError> {
        let d = x.len();
        let mut t = t0;
        let mut next = vec![C64::new(0.0, 0.0); d];
        while t < t1 {
            if self.steps >= self.max_steps {
                return Err(SimulationError::StepLimit(self.max_steps));
            }
            let last = t + self.h >= t1;
            let h = if last { t1 - t } else { self.h };
            if h < 1e-12 * t.abs().max(1.0) && !last {
                return Ok(Advance::Underflow(t));
            }
            if !self.fsal_valid {
                self.sys.rhs(t, x, &mut self.k[0]);
                self.fsal_valid = true;
            }
            for s in 1..7 {
                for i in 0..d {
                    let mut acc = x[i];
                    for (j, &a) in A[s].iter().enumerate().take(s) {
                        if a != 0.0 {
                            acc += h * a * self.k[j][i];
                        }
                    }
                    self.stage[i] = acc;
                }
                if s == 6 {
                    next.copy_from_slice(&self.stage);
                }
                let tail = &mut self.k[s];
                self.sys.rhs(t + C[s] * h, &self.stage, tail);
            }
            let mut err = 0.0;
            for i in 0..d {
                let e: C64 = (0..7).map(|s| E[s] * self.k[s][i]).sum::<C64>() * h;
                let scale = self.atol + self.rtol * x[i].norm().max(next[i].norm());
                err += (e.norm() / scale).powi(2);
            }
            let err = (err / d as f64).sqrt();
            self.steps += 1;
            if !err.is_finite() {
                return Err(SimulationError::NonFinite(t));
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                x.copy_from_slice(&next);
                self.k.swap(0, 6);
                if !last || h >= self.h {
                    self.h *= factor;
                }
            } else {
                self.h = h * factor;
            }
        }
        Ok(Advance::Done)
    }
}

/// Exact propagator for a linear system whose input is interpolated by a
/// polynomial on each step.
struct Exponential<'a> {
    sys: &'a System,
    a: DMatrix<C64>,
}

const EXP_ORDER: usize = 7;

impl<'a> Exponential<'a> {
    fn new(sys: &'a System) -> Self {
        Self { sys, a: sys.matrix() }
    }

    fn advance(&self, t0: f64, t1: f64, x: &mut [C64]) {
        // keep the input polynomial well resolved on each substep
        let scale = self.sys.pulse.sigma + self.sys.pulse.center.abs();
        let pieces = ((t1 - t0) * scale / 0.2).ceil().max(1.0) as usize;
        let h = (t1 - t0) / pieces as f64;
        for p in 0..pieces {
            self.step(t0 + p as f64 * h, h, x);
        }
    }

    fn step(&self, t0: f64, h: f64, x: &mut [C64]) {
        let n = self.sys.dim();
        let p = EXP_ORDER;
        // input u(t0 + hτ) ≈ Σ d_k τ^k from Chebyshev nodes on [0, 1]
        let nodes: Vec<f64> = (0..p).map(|i| 0.5 - 0.5 * ((2 * i + 1) as f64 * PI / (2 * p) as f64).cos()).collect();
        let vander = DMatrix::from_fn(p, p, |i, k| C64::new(nodes[i].powi(k as i32), 0.0));
        let rhs = DMatrix::from_fn(p, 1, |i, _| self.sys.input(t0 + h * nodes[i]));
        let d = vander.lu().solve(&rhs).expect("Chebyshev Vandermonde is nonsingular");
        // x' = Ax + Σ_j w_j s^{j−1}/(j−1)!  with  w_j = √κ e_0 d_{j−1} (j−1)! / h^{j−1}
        let mut aug = DMatrix::zeros(n + p, n + p);
        aug.view_mut((0, 0), (n, n)).copy_from(&self.a);
        let mut fact = 1.0;
        for j in 1..=p {
            if j > 1 {
                fact *= (j - 1) as f64;
            }
            let w = self.sys.sqrt_kappa * d[j - 1] * fact / h.powi(j as i32 - 1);
            aug[(0, n + p - j)] = w;
        }
        for i in 0..p - 1 {
            aug[(n + i, n + i + 1)] = C64::new(1.0, 0.0);
        }
        let prop = (aug * C64::new(h, 0.0)).exp();
        let mut v = vec![C64::new(0.0, 0.0); n];
        for (r, vr) in v.iter_mut().enumerate() {
            let mut acc = prop[(r, n + p - 1)];
            for (c, &xc) in x.iter().enumerate() {
                acc += prop[(r, c)] * xc;
            }
            *vr = acc;
        }
        x.copy_from_slice(&v);
    }
}

fn check_grid(t: &[f64]) -> Result<(), SimulationError> {
    if t.len() < 2 || t.iter().any(|v| !v.is_finite()) || t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SimulationError::BadGrid);
    }
    Ok(())
}

/// Composite Simpson on a possibly non-uniform grid, trapezoid on a final
/// odd interval.
pub fn simpson(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let (h0, h1) = (t[i + 1] - t[i], t[i + 2] - t[i + 1]);
        let hs = h0 + h1;
        sum += hs / 6.0
            * (y[i] * (2.0 - h1 / h0) + y[i + 1] * hs * hs / (h0 * h1) + y[i + 2] * (2.0 - h0 / h1));
        i += 2;
    }
    if i + 1 < n {
        sum += 0.5 * (t[i + 1] - t[i]) * (y[i] + y[i + 1]);
    }
    sum
}

/// Integrates the equations of motion from rest at `grid[0]`, reporting
/// the state at every grid point.
pub fn simulate(
    config: &MemoryConfig,
    pulse: &InputPulse,
    t_center: f64,
    grid: &[f64],
    opts: &SimulationOptions,
) -> Result<TimeTrace, SimulationError> {
    check_grid(grid)?;
    let sys = System::new(config, pulse, t_center);
    let stiff = config.kappa() > opts.stiff_kappa;
    let mut method = match opts.method {
        Method::Auto if stiff => Method::Exponential,
        Method::Auto => Method::RungeKutta,
        m => m,
    };
    let mut rk = RungeKutta::new(&sys, opts);
    let expo = Exponential::new(&sys);
    let mut x = vec![C64::new(0.0, 0.0); sys.dim()];
    let mut t = grid.to_vec();
    let mut states = vec![x.clone()];
    let spacing = t[t.len() - 1] - t[t.len() - 2];
    let mut k = 1;
    let input_energy = 1.0;
    loop {
        if k == t.len() {
            let Some(threshold) = opts.ring_down else { break };
            let pulse_over = t[k - 1] - t_center > 8.0 / pulse.sigma;
            if pulse_over && sys.stored(&x) <= threshold * input_energy {
                break;
            }
            if t[k - 1] >= opts.ring_down_limit {
                return Err(SimulationError::RingDownIncomplete { threshold, t: t[k - 1] });
            }
            t.push(t[k - 1] + spacing);
        }
        let (t0, t1) = (t[k - 1], t[k]);
        match method {
            Method::Exponential => expo.advance(t0, t1, &mut x),
            _ => {
                if let Advance::Underflow(tu) = rk.advance(t0, t1, &mut x)? {
                    method = Method::Exponential;
                    expo.advance(tu, t1, &mut x);
                }
            }
        }
        if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(SimulationError::NonFinite(t1));
        }
        states.push(x.clone());
        k += 1;
    }
    let a_in: Vec<C64> = t.iter().map(|&tk| sys.input(tk)).collect();
    let a_cavity: Vec<C64> = states.iter().map(|s| s[0]).collect();
    let a_out: Vec<C64> = a_cavity.iter().zip(&a_in).map(|(a, i)| sys.sqrt_kappa * a - i).collect();
    let s_modes: Vec<Vec<C64>> = (1..sys.dim()).map(|n| states.iter().map(|s| s[n]).collect()).collect();
    let loss: Vec<f64> = states
        .iter()
        .map(|s| 2.0 * sys.gamma.iter().zip(&s[1..]).map(|(g, v)| g * v.norm_sqr()).sum::<f64>())
        .collect();
    let energy = EnergyBudget {
        input: simpson(&t, &a_in.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>()),
        output: simpson(&t, &a_out.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>()),
        absorbed: simpson(&t, &loss),
        stored_final: sys.stored(states.last().expect("non-empty")),
    };
    Ok(TimeTrace {
        t,
        a_in,
        a_cavity,
        s_modes,
        a_out,
        t_center,
        method,
        energy,
    })
}

/// `a_out(t) = (2π)^(-1/2) ∫ e^{−iν(t−t_c)} S(ν) f_ν dν` by trapezoid
/// quadrature over `ν₀ ± max(10σ, 2·span)`. The initial step is tied to the
/// narrowest pole so the rule does not alias the slowest ring-down tail
/// back into the window.
pub fn output_via_tf(
    config: &MemoryConfig,
    pulse: &InputPulse,
    t_center: f64,
    grid: &[f64],
    opts: &TrapezoidOptions,
) -> Result<Vec<C64>, SimulationError> {
    check_grid(grid)?;
    let half = (10.0 * pulse.sigma).max(2.0 * config.span());
    let (lo, hi) = (pulse.center - half, pulse.center + half);
    let narrowest = if config.absorbers().is_empty() {
        0.5 * config.kappa()
    } else {
        let lines = resonance_lines(config, &TopologyOptions::default())?;
        lines.poles.iter().map(|p| -p.im).fold(0.5 * config.kappa(), f64::min)
    };
    let reach = grid.iter().map(|t| (t - t_center).abs()).fold(0.0, f64::max);
    let step = 2.0 * PI / (reach + 40.0 / narrowest.max(1e-12));
    let local = TrapezoidOptions {
        max_step: opts.max_step.min(step),
        ..*opts
    };
    let norm = (2.0 * PI).sqrt();
    let out = integrate_vec(lo, hi, grid.len(), &local, |nu, w, acc| {
        let amp = w * pulse.spectrum(nu) * transfer_or_limit(config, nu) / norm;
        for (o, &tk) in acc.iter_mut().zip(grid) {
            *o += amp * C64::from_polar(1.0, -nu * (tk - t_center));
        }
    })?;
    Ok(out)
}

/// `‖a − b‖₂ / ‖b‖₂` on a common grid.
pub fn relative_l2(a: &[C64], b: &[C64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let base: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (diff / base).sqrt()
}

/// Uniform grid with `points` samples on `[t0, t1]`.
pub fn time_grid(t0: f64, t1: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|k| t0 + (t1 - t0) * k as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Absorber;
    use crate::model::t0_analytic;

    fn comb() -> MemoryConfig {
        MemoryConfig::symmetric_from_half(100.0, &[(0.5, 0.318), (1.92, 1.09)], 0.0).unwrap()
    }

    #[test]
    fn empty_comb_reflects_the_pulse() {
        let c = MemoryConfig::new(50.0, vec![], false).unwrap();
        let p = InputPulse::new(0.4);
        let tc = p.default_time_center();
        let grid = time_grid(0.0, 2.0 * tc, 601);
        let tr = simulate(&c, &p, tc, &grid, &SimulationOptions::default()).unwrap();
        // S = (1 + 2iν/κ)/(1 − 2iν/κ) ≈ e^{4iν/κ}: a delayed copy of the input
        let delayed: Vec<C64> = grid.iter().map(|&t| p.time_amplitude(t - 4.0 / 50.0, tc)).collect();
        assert!(relative_l2(&tr.a_out, &delayed) < 1e-3);
        assert!(tr.s_modes.is_empty());
    }

    #[test]
    fn matches_transfer_function_oracle() {
        let c = comb().with_gamma(1e-3).unwrap();
        let p = InputPulse::new(0.4);
        let tc = p.default_time_center();
        let grid = time_grid(0.0, tc + 2.0 * t0_analytic(&c), 801);
        let tr = simulate(&c, &p, tc, &grid, &SimulationOptions::default()).unwrap();
        let tf = output_via_tf(&c, &p, tc, &grid, &TrapezoidOptions { rtol: 1e-10, ..Default::default() }).unwrap();
        let err = relative_l2(&tr.a_out, &tf);
        assert!(err < 1e-6, "relative L2 {err:e}");
    }

    #[test]
    fn exponential_scheme_agrees_with_runge_kutta() {
        let c = comb().with_gamma(1e-3).unwrap();
        let p = InputPulse::new(0.4);
        let tc = p.default_time_center();
        let grid = time_grid(0.0, tc + 10.0, 401);
        let rk = simulate(&c, &p, tc, &grid, &SimulationOptions::default()).unwrap();
        let ex = simulate(&c, &p, tc, &grid, &SimulationOptions { method: Method::Exponential, ..Default::default() }).unwrap();
        assert_eq!(ex.method, Method::Exponential);
        assert!(relative_l2(&ex.a_out, &rk.a_out) < 1e-7);
    }

    #[test]
    fn response_is_linear_in_the_input() {
        // doubling the pulse amplitude is the same as doubling √κ a_in; compare via
        // superposition of two time-shifted pulses
        let c = comb().with_gamma(1e-3).unwrap();
        let p = InputPulse::new(0.4);
        let grid = time_grid(0.0, 40.0, 401);
        let opts = SimulationOptions::default();
        let one = simulate(&c, &p, 15.0, &grid, &opts).unwrap();
        let two = simulate(&c, &p, 18.0, &grid, &opts).unwrap();
        let sum: Vec<C64> = one.a_out.iter().zip(&two.a_out).map(|(a, b)| a + b).collect();
        let tf: Vec<C64> = {
            let topts = TrapezoidOptions { rtol: 1e-10, ..Default::default() };
            let a = output_via_tf(&c, &p, 15.0, &grid, &topts).unwrap();
            let b = output_via_tf(&c, &p, 18.0, &grid, &topts).unwrap();
            a.iter().zip(&b).map(|(x, y)| x + y).collect()
        };
        assert!(relative_l2(&sum, &tf) < 1e-6);
    }

    #[test]
    fn lossless_run_conserves_energy() {
        let c = comb();
        let p = InputPulse::new(0.4);
        let tc = p.default_time_center();
        let grid = time_grid(0.0, 40.0, 2001);
        let opts = SimulationOptions { ring_down: Some(1e-9), ..Default::default() };
        let tr = simulate(&c, &p, tc, &grid, &opts).unwrap();
        assert!((tr.energy.input - 1.0).abs() < 1e-9);
        assert_eq!(tr.energy.absorbed, 0.0);
        assert!(tr.energy.imbalance().abs() < 1e-6, "{:?}", tr.energy);
        assert!((tr.energy.output - 1.0).abs() < 1e-6);
    }

    #[test]
    fn loss_reduces_output() {
        let p = InputPulse::new(0.4);
        let tc = p.default_time_center();
        let grid = time_grid(0.0, 40.0, 2001);
        let opts = SimulationOptions { ring_down: Some(1e-9), ..Default::default() };
        let mut last = f64::INFINITY;
        for gamma in [0.0, 1e-3, 1e-2] {
            let tr = simulate(&comb().with_gamma(gamma).unwrap(), &p, tc, &grid, &opts).unwrap();
            assert!(tr.energy.output < last);
            assert!(tr.energy.imbalance().abs() < 1e-6);
            last = tr.energy.output;
        }
    }

    #[test]
    fn echo_appears_near_the_delay_time() {
        let c = comb();
        let p = InputPulse::new(0.4);
        let tc = p.default_time_center();
        let grid = time_grid(0.0, tc + 12.0, 1201);
        let tr = simulate(&c, &p, tc, &grid, &SimulationOptions::default()).unwrap();
        let peak = (0..grid.len()).max_by(|&i, &j| tr.a_out[i].norm().total_cmp(&tr.a_out[j].norm())).unwrap();
        assert!((grid[peak] - tc - t0_analytic(&c)).abs() < 0.3, "peak at {}", grid[peak] - tc);
    }

    #[test]
    fn rejects_bad_grids() {
        let c = MemoryConfig::new(10.0, vec![Absorber::new(0.5, 0.1, 0.0), Absorber::new(-0.5, 0.1, 0.0)], true).unwrap();
        let p = InputPulse::new(0.4);
        assert_eq!(simulate(&c, &p, 1.0, &[0.0], &SimulationOptions::default()).unwrap_err(), SimulationError::BadGrid);
        assert!(output_via_tf(&c, &p, 1.0, &[1.0, 0.5], &TrapezoidOptions::default()).is_err());
    }

    #[test]
    fn simpson_is_exact_for_quadratics() {
        let t = [0.0, 0.3, 0.5, 1.1, 1.4];
        let y: Vec<f64> = t.iter().map(|x| 3.0 * x * x - x).collect();
        let exact = 1.4f64.powi(3) - 1.4 * 1.4 / 2.0;
        assert!((simpson(&t, &y) - exact).abs() < 1e-12);
    }
}
