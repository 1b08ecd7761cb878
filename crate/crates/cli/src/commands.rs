use std::path::{Path, PathBuf};

use qmem_core::echo::echo_intensity;
use qmem_core::matching::{g_critical, t0_critical};
use qmem_core::model::{delay_time, t0_analytic, transfer_fn, uniform_grid, DBS_FLOOR};
use qmem_core::quadrature::TrapezoidOptions;
use qmem_core::timedomain::{relative_l2, time_grid, Method};
use qmem_core::{
    line_trajectories, optimize, output_via_tf, simulate, transition_point, InputPulse, MatchError, MatchingForm,
    MemoryConfig, Objective, OptimizeOptions, SimulationOptions, SpectrumSample, TopologyOptions,
};
use rayon::prelude::*;
use serde_json::json;

use crate::config_file::ConfigFile;
use crate::error::CliError;
use crate::output::{emit, num, Manifest, Table};

/// Device file plus command-line overrides.
pub struct Input {
    pub file: ConfigFile,
    pub config: MemoryConfig,
    pub overrides: Vec<String>,
}

impl Input {
    pub fn load(path: &Path, gamma: Option<f64>, kappa: Option<f64>) -> Result<Self, CliError> {
        let file = ConfigFile::load(path)?;
        let mut config = file.to_config()?;
        let mut overrides = Vec::new();
        let bad = |e: qmem_core::ConfigError| CliError::Config(format!("override: {e}"));
        if let Some(g) = gamma {
            config = config.with_gamma(g).map_err(bad)?;
            overrides.push(format!("gamma={}", num(g)));
        }
        if let Some(k) = kappa {
            config = config.with_kappa(k).map_err(bad)?;
            overrides.push(format!("kappa={}", num(k)));
        }
        Ok(Self {
            file,
            config,
            overrides,
        })
    }

    pub fn manifest(&self, command: &str, seed: u64) -> Manifest {
        Manifest::new(command, self.file.hash(), self.overrides.clone(), seed)
    }

    fn pairs(&self) -> usize {
        self.config.absorbers().len() / 2
    }

    /// `σ = 0.2·N` in units of the spacing.
    fn default_pulse(&self) -> InputPulse {
        InputPulse::for_comb(self.pairs().max(1))
    }
}

fn range_points(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if !lo.is_finite() || !hi.is_finite() || hi < lo || points == 0 {
        return Err(CliError::Config(format!("invalid range {lo}:{hi} with {points} points")));
    }
    if lo == hi || points == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect())
}

fn pulse_with(sigma: Option<f64>, input: &Input) -> Result<InputPulse, CliError> {
    match sigma {
        Some(s) if s.is_finite() && s > 0.0 => Ok(InputPulse::new(s)),
        Some(s) => Err(CliError::Config(format!("--sigma must be > 0, got {s}"))),
        None => Ok(input.default_pulse()),
    }
}

pub struct SpectrumArgs {
    pub band: (f64, f64),
    pub points: usize,
    pub t0: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

pub fn spectrum(input: &Input, a: &SpectrumArgs) -> Result<(), CliError> {
    if a.band.1 <= a.band.0 && a.points > 1 {
        return Err(CliError::Config(format!("--band must satisfy LO < HI, got {}:{}", a.band.0, a.band.1)));
    }
    let grid = uniform_grid(a.band.0, a.band.1, a.points, &input.config).map_err(|e| CliError::Config(e.to_string()))?;
    let t0 = a.t0.unwrap_or_else(|| t0_analytic(&input.config.lossless()));
    let s = SpectrumSample::compute(&input.config, &grid, t0).map_err(CliError::numeric)?;
    let header = ["nu", "re_S", "im_S", "eta", "delay", "delta_S2", "dbs"];
    let mut t = Table::new(input.manifest("spectrum", a.seed), header.iter().map(|h| h.to_string()).collect());
    t.note("band", format!("{}:{}", num(a.band.0), num(a.band.1)));
    t.note("points", a.points.to_string());
    t.note("t0", num(t0));
    t.note("dbs_floor", num(DBS_FLOOR));
    t.note("dbs_clamped", s.dbs.iter().filter(|d| d.clamped).count().to_string());
    for k in 0..grid.len() {
        t.row(vec![
            num(grid[k]),
            num(s.s_values[k].re),
            num(s.s_values[k].im),
            num(s.efficiency[k]),
            num(s.delay[k]),
            num(s.error[k]),
            num(s.dbs[k].value),
        ]);
    }
    t.footer(format!(
        "summary: max_delta_S2={} min_eta={}",
        num(s.max_error()),
        num(s.min_efficiency())
    ));
    emit(&t.render(), a.out.as_deref())
}

pub struct TopologyArgs {
    pub g_range: (f64, f64),
    pub steps: usize,
    pub sigma: Option<f64>,
    pub recall: Option<f64>,
    pub tolerance: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

pub fn topology(input: &Input, a: &TopologyArgs) -> Result<(), CliError> {
    let n = input.pairs();
    if n == 0 {
        return Err(CliError::Config("topology needs at least one absorber pair".into()));
    }
    let grid = range_points(a.g_range.0, a.g_range.1, a.steps)?;
    let opts = TopologyOptions::default();
    let traj = line_trajectories(&input.config, &grid, &opts).map_err(CliError::numeric)?;
    let pulse = pulse_with(a.sigma, input)?;
    let recall = a.recall.unwrap_or_else(|| t0_critical(n, 1.0));
    let qopts = TrapezoidOptions {
        rtol: a.tolerance,
        ..Default::default()
    };
    let echo: Vec<f64> = grid
        .par_iter()
        .map(|&g| {
            let c = input.config.with_common_g(g).map_err(|e| CliError::Config(e.to_string()))?;
            echo_intensity(&c, recall, &pulse, &qopts).map_err(CliError::numeric)
        })
        .collect::<Result<_, _>>()?;

    let lines = traj.branches.len();
    let mut header = vec!["g".to_string()];
    header.extend((1..=lines).map(|i| format!("E_{i}")));
    header.extend((1..=lines).map(|i| format!("W_{i}")));
    header.push("n_distinct_lines".into());
    header.push("I_echo".into());
    let mut t = Table::new(input.manifest("topology", a.seed), header);
    t.note("g_range", format!("{}:{}", num(a.g_range.0), num(a.g_range.1)));
    t.note("steps", grid.len().to_string());
    t.note("sigma", num(pulse.sigma));
    t.note("recall_time", num(recall));
    t.note("merge_tolerance", num(opts.tol_merge));
    for (k, &g) in grid.iter().enumerate() {
        let mut row = vec![num(g)];
        row.extend(traj.positions_at(k).into_iter().map(num));
        row.extend(traj.widths_at(k).into_iter().map(num));
        row.push(traj.line_counts[k].to_string());
        row.push(num(echo[k]));
        t.row(row);
    }
    let peak = (0..grid.len()).max_by(|&i, &j| echo[i].total_cmp(&echo[j])).expect("non-empty grid");
    let mut summary = format!("summary: merges={}", traj.merge_events.len());
    for e in &traj.merge_events {
        let g_star = transition_point(&input.config, (e.g_before, e.g_after), 1e-10 * e.g_after.max(1.0), &opts)
            .map_err(CliError::numeric)?;
        let branches: Vec<String> = e.branches.iter().map(|(i, j)| format!("{}+{}", i + 1, j + 1)).collect();
        summary += &format!(
            " g_star={} window={}:{} lines={}->{} branches={}",
            num(g_star),
            num(e.g_before),
            num(e.g_after),
            e.lines_before,
            e.lines_after,
            branches.join("|")
        );
    }
    summary += &format!(" echo_peak={} at_g={}", num(echo[peak]), num(grid[peak]));
    t.footer(summary);
    emit(&t.render(), a.out.as_deref())
}

pub struct OptimizeArgs {
    pub objective: Objective,
    pub form: MatchingForm,
    pub conditions: Option<usize>,
    pub band: (f64, f64),
    pub points: usize,
    pub tolerance: Option<f64>,
    pub max_evaluations: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

pub fn optimize_cmd(input: &Input, a: &OptimizeArgs) -> Result<(), CliError> {
    let defaults = OptimizeOptions::default();
    let opts = OptimizeOptions {
        objective: a.objective,
        conditions: a.conditions,
        form: a.form,
        band: a.band,
        band_points: a.points,
        xtol: a.tolerance.unwrap_or(defaults.xtol),
        max_evaluations: a.max_evaluations.unwrap_or(defaults.max_evaluations),
        seed: a.seed,
        ..defaults
    };
    let (report, failure) = match optimize(&input.config, &opts) {
        Ok(r) => (r, None),
        Err(MatchError::NotConverged(r)) => {
            let msg = format!("optimizer did not converge after {} evaluations", r.evaluations);
            (*r, Some(CliError::Numeric(msg)))
        }
        Err(e) => return Err(e.into()),
    };
    let manifest = input.manifest("optimize", a.seed);
    let mut final_file = ConfigFile::from_config(&report.final_config);
    final_file.manifest = Some(serde_json::to_value(&manifest).expect("manifest serializes"));
    let doc = json!({
        "manifest": manifest,
        "objective": report.objective,
        "form": report.form,
        "conditions": report.conditions,
        "converged": report.converged,
        "iterations": report.iterations,
        "evaluations": report.evaluations,
        "initial_objective": report.initial_objective,
        "final_objective": report.final_objective,
        "initial_band_error": report.initial_band_error,
        "band_error": report.band_error,
        "band": [a.band.0, a.band.1],
        "initial_residuals": report.initial_residuals.residuals,
        "final_residuals": report.final_residuals.residuals,
        "final_t0": report.final_residuals.t0,
        "initial_config": ConfigFile::from_config(&report.initial_config),
        "final_config": ConfigFile::from_config(&report.final_config),
        "residual_history": report.residual_history,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    if let Some(out) = &a.out {
        emit(&final_file.to_json(), Some(out))?;
    }
    emit(&text, a.report.as_deref())?;
    match failure {
        Some(e) => Err(e),
        None => {
            if !report.converged {
                eprintln!("warning: converged=false, some residual or the band error increased");
            }
            Ok(())
        }
    }
}

pub struct EchoArgs {
    pub sigma: Option<f64>,
    pub recall: Option<f64>,
    pub recall_range: Option<(f64, f64)>,
    pub points: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

pub fn echo(input: &Input, a: &EchoArgs) -> Result<(), CliError> {
    let pulse = pulse_with(a.sigma, input)?;
    let times = match (a.recall_range, a.recall) {
        (Some((lo, hi)), _) => range_points(lo, hi, a.points)?,
        (None, Some(t)) => vec![t],
        (None, None) => vec![t0_analytic(&input.config.lossless())],
    };
    let qopts = TrapezoidOptions {
        rtol: a.tolerance,
        ..Default::default()
    };
    let values: Vec<f64> = times
        .par_iter()
        .map(|&t| echo_intensity(&input.config, t, &pulse, &qopts).map_err(CliError::numeric))
        .collect::<Result<_, _>>()?;
    let mut t = Table::new(
        input.manifest("echo", a.seed),
        vec!["recall_time".into(), "sigma".into(), "I_echo".into()],
    );
    t.note("quadrature_rtol", num(a.tolerance));
    for (tt, v) in times.iter().zip(&values) {
        t.row(vec![num(*tt), num(pulse.sigma), num(*v)]);
    }
    emit(&t.render(), a.out.as_deref())
}

pub struct SimulateArgs {
    pub sigma: Option<f64>,
    pub t_end: Option<f64>,
    pub points: usize,
    pub method: Method,
    pub tolerance: f64,
    pub ring_down: Option<f64>,
    pub oracle: bool,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

pub fn simulate_cmd(input: &Input, a: &SimulateArgs) -> Result<(), CliError> {
    let pulse = pulse_with(a.sigma, input)?;
    let tc = pulse.default_time_center();
    let t0 = t0_analytic(&input.config.lossless());
    let t_end = a.t_end.unwrap_or(tc + 2.0 * t0.abs() + 10.0);
    if !(t_end > 0.0) || a.points < 2 {
        return Err(CliError::Config("--t-end must be > 0 and --points >= 2".into()));
    }
    let grid = time_grid(0.0, t_end, a.points);
    let opts = SimulationOptions {
        rtol: a.tolerance,
        method: a.method,
        ring_down: a.ring_down,
        ..Default::default()
    };
    let tr = simulate(&input.config, &pulse, tc, &grid, &opts).map_err(CliError::numeric)?;
    let oracle = if a.oracle {
        let topts = TrapezoidOptions {
            rtol: 1e-10,
            ..Default::default()
        };
        Some(output_via_tf(&input.config, &pulse, tc, &tr.t, &topts).map_err(CliError::numeric)?)
    } else {
        None
    };
    let mut header: Vec<String> = ["t", "re_a_in", "im_a_in", "re_a_out", "im_a_out", "re_a_cavity", "im_a_cavity"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if oracle.is_some() {
        header.push("re_a_out_tf".into());
        header.push("im_a_out_tf".into());
    }
    let mut t = Table::new(input.manifest("simulate", a.seed), header);
    t.note("sigma", num(pulse.sigma));
    t.note("t_center", num(tc));
    t.note("method", format!("{:?}", tr.method));
    t.note("rtol", num(a.tolerance));
    for k in 0..tr.t.len() {
        let mut row = vec![
            num(tr.t[k]),
            num(tr.a_in[k].re),
            num(tr.a_in[k].im),
            num(tr.a_out[k].re),
            num(tr.a_out[k].im),
            num(tr.a_cavity[k].re),
            num(tr.a_cavity[k].im),
        ];
        if let Some(o) = &oracle {
            row.push(num(o[k].re));
            row.push(num(o[k].im));
        }
        t.row(row);
    }
    let e = tr.energy;
    t.footer(format!(
        "energy: input={} output={} absorbed={} stored_final={} imbalance={}",
        num(e.input),
        num(e.output),
        num(e.absorbed),
        num(e.stored_final),
        num(e.imbalance())
    ));
    if let Some(o) = &oracle {
        t.footer(format!("oracle_relative_l2={}", num(relative_l2(&tr.a_out, o))));
    }
    emit(&t.render(), a.out.as_deref())
}

pub struct ValidateArgs {
    pub tolerance: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

struct Check {
    name: &'static str,
    status: &'static str,
    value: f64,
    tolerance: f64,
}

impl Check {
    fn measured(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            status: if value <= tolerance { "PASS" } else { "FAIL" },
            value,
            tolerance,
        }
    }
}

pub fn validate(input: &Input, a: &ValidateArgs) -> Result<(), CliError> {
    let c = &input.config;
    let lossless = c.lossless();
    let mut checks = Vec::new();

    let reach = c.span() + 2.0;
    let grid = uniform_grid(-reach, reach, 1000, &lossless).map_err(CliError::numeric)?;
    let unimodular = grid
        .iter()
        .filter_map(|&nu| transfer_fn(&lossless, nu).ok())
        .map(|s| (s.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    checks.push(Check::measured("unimodularity", unimodular, 1e-12));

    if c.is_declared_symmetric() {
        let mirror = if c.check_symmetry() {
            grid.iter()
                .filter_map(|&nu| Some((transfer_fn(&lossless, nu).ok()?, transfer_fn(&lossless, -nu).ok()?)))
                .map(|(p, m)| (p - m.conj()).norm())
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        checks.push(Check::measured("symmetry", mirror, 1e-12));
    } else {
        checks.push(Check {
            name: "symmetry",
            status: "SKIP",
            value: 0.0,
            tolerance: 1e-12,
        });
    }

    // T(0) = 2F'(0)/(1 + F(0)²) with F(0) = Σ g/Δ and F'(0) = 2/κ + Σ g/Δ²
    let f0: f64 = lossless.absorbers().iter().map(|x| x.g / x.detuning).sum();
    let df0: f64 = 2.0 / c.kappa() + lossless.absorbers().iter().map(|x| x.g / (x.detuning * x.detuning)).sum::<f64>();
    let expected = 2.0 * df0 / (1.0 + f0 * f0);
    let at = |nu: f64| delay_time(&lossless, nu).map_err(CliError::numeric);
    // (φ(h) − φ(−h))/2h = (T(h) + T(−h))/2, then Richardson on h and 2h
    let slope = |h: f64| -> Result<f64, CliError> { Ok(0.5 * (at(h)? + at(-h)?)) };
    let h = 1e-4;
    let extrapolated = (4.0 * slope(h)? - slope(2.0 * h)?) / 3.0;
    let delay_gap = (at(0.0)? - expected).abs().max((extrapolated - expected).abs());
    checks.push(Check::measured("delay_identity", delay_gap, 1e-8));

    let pulse = input.default_pulse();
    let tc = pulse.default_time_center();
    let horizon = tc + 2.0 * t0_analytic(&lossless).abs().min(30.0) + 10.0;
    let tgrid = time_grid(0.0, horizon, 801);
    let tr = simulate(c, &pulse, tc, &tgrid, &SimulationOptions::default()).map_err(CliError::numeric)?;
    let topts = TrapezoidOptions {
        rtol: 1e-10,
        ..Default::default()
    };
    let tf = output_via_tf(c, &pulse, tc, &tgrid, &topts).map_err(CliError::numeric)?;
    checks.push(Check::measured("time_frequency_equivalence", relative_l2(&tr.a_out, &tf), a.tolerance));

    let ring = SimulationOptions {
        ring_down: Some(1e-9),
        ..Default::default()
    };
    let tr = simulate(c, &pulse, tc, &tgrid, &ring).map_err(CliError::numeric)?;
    let e = tr.energy;
    let mut balance = e.imbalance().abs();
    if c.is_lossless() {
        balance = balance.max((e.output - e.input).abs());
    }
    checks.push(Check::measured("energy_balance", balance, 1e-6));

    let mut t = Table::new(
        input.manifest("validate", a.seed),
        vec!["check".into(), "status".into(), "value".into(), "tolerance".into()],
    );
    for ch in &checks {
        t.row(vec![ch.name.into(), ch.status.into(), num(ch.value), num(ch.tolerance)]);
    }
    emit(&t.render(), a.out.as_deref())?;
    let failed: Vec<&str> = checks.iter().filter(|c| c.status == "FAIL").map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("failed checks: {}", failed.join(", "))))
    }
}

pub struct GenCombArgs {
    pub n: usize,
    pub delta: f64,
    pub g: Option<f64>,
    pub gamma: f64,
    pub kappa: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

/// Equidistant comb `±Δ(n − 1/2)`. Inputs are in the same physical unit as
/// `delta` and are stored divided by it.
pub fn gen_comb(a: &GenCombArgs) -> Result<(), CliError> {
    if a.n == 0 || !(a.delta > 0.0) || !a.delta.is_finite() {
        return Err(CliError::Config("--n must be >= 1 and --delta > 0".into()));
    }
    let g = a.g.unwrap_or(g_critical(a.n, a.delta));
    let kappa = a.kappa.unwrap_or(100.0 * a.delta);
    let config = MemoryConfig::equidistant(a.n, g / a.delta, a.gamma / a.delta, kappa / a.delta)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut file = ConfigFile::from_config(&config);
    file.delta_unit = a.delta;
    file.to_config()?;
    let overrides = vec![
        format!("n={}", a.n),
        format!("delta={}", num(a.delta)),
        format!("g={}", num(g)),
        format!("gamma={}", num(a.gamma)),
        format!("kappa={}", num(kappa)),
    ];
    let manifest = Manifest::new("gen-comb", file.hash(), overrides, a.seed);
    file.manifest = Some(serde_json::to_value(&manifest).expect("manifest serializes"));
    emit(&file.to_json(), a.out.as_deref())
}
