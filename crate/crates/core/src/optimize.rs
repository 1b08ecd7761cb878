//! Multiparametric optimization of a symmetric comb's `{g_n, Δ_n}`.
//!
//! Free parameters live in an unconstrained space: `ln g_n` for couplings
//! and `ln` of the first detuning and of successive detuning gaps, so every
//! iterate is a valid ordered comb. Residual-based objectives are invariant
//! under joint scaling of `(g, Δ)`, so the innermost detuning is held
//! fixed for them by default.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::MemoryConfig;
use crate::matching::{default_condition_count, residuals_with, MatchError, MatchingForm, MatchingResiduals};
use crate::model::band_error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Weighted sum of squared matching residuals.
    Residuals,
    /// Largest `δS²` over the band.
    BandError,
    /// `w·R/R₀ + (1−w)·B/B₀`, each term normalized by its starting value.
    Mixed { weight: f64 },
}

impl Objective {
    fn uses_residuals(self) -> bool {
        !matches!(self, Objective::BandError)
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    pub objective: Objective,
    /// Number of matching conditions; `None` means `4N − 1`.
    pub conditions: Option<usize>,
    pub weights: Option<Vec<f64>>,
    pub form: MatchingForm,
    pub band: (f64, f64),
    pub band_points: usize,
    /// Hold the innermost detuning fixed. `None` picks by objective.
    pub fix_inner_detuning: Option<bool>,
    pub max_evaluations: usize,
    /// Simplex size tolerance in the transformed coordinates.
    pub xtol: f64,
    /// Relative spread tolerance on objective values across the simplex.
    pub ftol: f64,
    /// Absolute floor on the spread tolerance, for objectives that reach zero.
    pub fatol: f64,
    pub initial_scale: f64,
    /// For the residual objective, solve with 1, 2, …, M conditions in turn,
    /// each stage starting from the previous optimum.
    pub continuation: bool,
    pub seed: u64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            objective: Objective::Residuals,
            conditions: None,
            weights: None,
            form: MatchingForm::Broadband,
            band: (-0.6, 0.6),
            band_points: 241,
            fix_inner_detuning: None,
            max_evaluations: 50_000,
            xtol: 1e-10,
            ftol: 1e-14,
            fatol: 1e-30,
            initial_scale: 0.05,
            continuation: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationReport {
    pub objective: Objective,
    pub form: MatchingForm,
    pub conditions: usize,
    pub initial_config: MemoryConfig,
    pub final_config: MemoryConfig,
    pub initial_residuals: MatchingResiduals,
    pub final_residuals: MatchingResiduals,
    /// Largest residual of the best point after each iteration.
    pub residual_history: Vec<f64>,
    /// Best objective value after each iteration, for the condition count
    /// in force at that iteration.
    pub objective_history: Vec<f64>,
    /// Condition count of each history entry; increases by stage when
    /// `continuation` is on.
    pub history_conditions: Vec<usize>,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub initial_band_error: f64,
    pub band_error: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Maps between the unconstrained search space and a symmetric comb.
struct Parametrization {
    template: MemoryConfig,
    n: usize,
    fixed_inner: Option<f64>,
}

impl Parametrization {
    fn encode(&self, half: &[(f64, f64)]) -> Vec<f64> {
        let mut x = Vec::with_capacity(2 * self.n);
        let mut prev = 0.0;
        for (k, &(d, _)) in half.iter().enumerate() {
            if !(k == 0 && self.fixed_inner.is_some()) {
                x.push((d - prev).ln());
            }
            prev = d;
        }
        x.extend(half.iter().map(|&(_, g)| g.ln()));
        x
    }

    fn decode(&self, x: &[f64]) -> Vec<(f64, f64)> {
        let nd = if self.fixed_inner.is_some() { self.n - 1 } else { self.n };
        let mut half = Vec::with_capacity(self.n);
        let mut d = 0.0;
        let mut it = x[..nd].iter();
        for k in 0..self.n {
            d = match (k, self.fixed_inner) {
                (0, Some(inner)) => inner,
                _ => d + it.next().expect("detuning coordinate").exp(),
            };
            half.push((d, x[nd + k].exp()));
        }
        half
    }

    fn config(&self, x: &[f64]) -> Result<MemoryConfig, MatchError> {
        let gamma = self.template.absorbers().first().map_or(0.0, |a| a.gamma);
        let half = self.decode(x);
        let c = MemoryConfig::symmetric_from_half(self.template.kappa(), &half, gamma)?;
        Ok(MemoryConfig::with_unit(
            c.kappa(),
            c.absorbers().to_vec(),
            true,
            self.template.unit_delta(),
        )?)
    }
}

struct Evaluator<'a> {
    opts: &'a OptimizeOptions,
    conditions: usize,
    residual_scale: f64,
    band_scale: f64,
    /// Reference delay for band objectives, fixed at the starting comb's.
    band_t0: Option<f64>,
    evaluations: usize,
}

impl Evaluator<'_> {
    fn residuals(&self, c: &MemoryConfig) -> Result<MatchingResiduals, MatchError> {
        self.residuals_with_count(c, self.conditions)
    }

    /// Weights apply to the leading `count` conditions.
    fn residuals_with_count(&self, c: &MemoryConfig, count: usize) -> Result<MatchingResiduals, MatchError> {
        let weights = self.opts.weights.as_deref().map(|w| &w[..count.min(w.len())]);
        residuals_with(c, count, self.opts.form, weights)
    }

    fn band(&self, c: &MemoryConfig) -> Result<f64, MatchError> {
        let t0 = self.band_t0.unwrap_or_else(|| self.opts.form.reference_delay(c));
        Ok(band_error(c, self.opts.band, self.opts.band_points, t0)?)
    }

    fn objective(&mut self, c: &MemoryConfig) -> Result<f64, MatchError> {
        self.evaluations += 1;
        Ok(match self.opts.objective {
            Objective::Residuals => self.residuals(c)?.weighted_sum_of_squares(),
            Objective::BandError => self.band(c)?,
            Objective::Mixed { weight } => {
                let r = self.residuals(c)?.weighted_sum_of_squares() / self.residual_scale;
                let b = self.band(c)? / self.band_scale;
                weight * r + (1.0 - weight) * b
            }
        })
    }
}

const MAX_RESTARTS: usize = 40;
const MONOTONE_RTOL: f64 = 1e-9;
const STALL_GAIN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pass {
    Converged,
    Stalled,
    Budget,
}

#[derive(Default)]
struct History {
    objective: Vec<f64>,
    residual: Vec<f64>,
    conditions: Vec<usize>,
}

struct Search {
    best_x: Vec<f64>,
    best_f: f64,
    history: History,
    rng: ChaCha8Rng,
}

impl Search {
    /// Restarted Nelder–Mead on the current stage objective.
    fn descend<F>(
        &mut self,
        f: &F,
        eval: &mut Evaluator,
        param: &Parametrization,
        opts: &OptimizeOptions,
        stage: usize,
        conditions: usize,
    ) -> Result<Pass, MatchError>
    where
        F: Fn(&[f64], &mut Evaluator) -> Result<f64, MatchError>,
    {
        let dim = self.best_x.len();
        let (alpha, gamma, rho, shrink) = (1.0, 2.0, 0.5, 0.5);
        // a pass that improves by less than this fraction over `window`
        // iterations is creeping along a valley and gets a fresh simplex
        let window = 100 * (dim + 1);
        let creep = 1e-4;
        let mut converged_once = false;
        let mut iterations = 0usize;
        for restart in 0..MAX_RESTARTS {
            let mut simplex: Vec<(Vec<f64>, f64)> = vec![(self.best_x.clone(), self.best_f)];
            for k in 0..dim {
                let mut x = self.best_x.clone();
                let jitter = if restart == 0 { 1.0 } else { self.rng.random_range(0.8..1.2) };
                x[k] += opts.initial_scale * jitter;
                let fx = f(&x, eval)?;
                simplex.push((x, fx));
            }
            let start_f = self.best_f;
            let mut pass = Pass::Budget;
            let mut checkpoint = (iterations, self.best_f);
            while eval.evaluations < opts.max_evaluations {
                simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
                let fb = simplex[0].1;
                let spread = simplex.iter().map(|s| (s.1 - fb).abs()).fold(0.0, f64::max);
                let size = simplex
                    .iter()
                    .skip(1)
                    .map(|s| s.0.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                    .fold(0.0, f64::max);
                // an objective at the absolute floor is a global minimum
                if fb <= opts.fatol || (size <= opts.xtol && spread <= opts.ftol * fb.abs() + opts.fatol) {
                    pass = Pass::Converged;
                    break;
                }
                if iterations - checkpoint.0 >= window {
                    if checkpoint.1 - self.best_f <= creep * checkpoint.1 {
                        pass = Pass::Stalled;
                        break;
                    }
                    checkpoint = (iterations, self.best_f);
                }
                iterations += 1;
                let centroid: Vec<f64> = (0..dim)
                    .map(|j| simplex[..dim].iter().map(|s| s.0[j]).sum::<f64>() / dim as f64)
                    .collect();
                let worst = simplex[dim].clone();
                let along = |t: f64| -> Vec<f64> {
                    centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
                };
                let xr = along(alpha);
                let fr = f(&xr, eval)?;
                if fr < simplex[0].1 {
                    let xe = along(alpha * gamma);
                    let fe = f(&xe, eval)?;
                    simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
                } else if fr < simplex[dim - 1].1 {
                    simplex[dim] = (xr, fr);
                } else {
                    // outside contraction when the reflection helped, inside otherwise
                    let t = if fr < worst.1 { alpha * rho } else { -rho };
                    let xc = along(t);
                    let fc = f(&xc, eval)?;
                    if fc < worst.1.min(fr) {
                        simplex[dim] = (xc, fc);
                    } else {
                        let x_best = simplex[0].0.clone();
                        for s in simplex.iter_mut().skip(1) {
                            s.0 = x_best.iter().zip(&s.0).map(|(b, x)| b + shrink * (x - b)).collect();
                            s.1 = f(&s.0, eval)?;
                        }
                    }
                }
                let best = simplex.iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty simplex");
                if best.1 < self.best_f {
                    self.best_f = best.1;
                    self.best_x = best.0.clone();
                }
                self.history.objective.push(self.best_f);
                self.history.conditions.push(stage);
                let c = param.config(&self.best_x)?;
                self.history.residual.push(eval.residuals_with_count(&c, conditions)?.max());
            }
            if pass == Pass::Budget {
                return Ok(Pass::Budget);
            }
            converged_once |= pass == Pass::Converged;
            // a restart that cannot improve on a converged pass confirms the minimum
            let improved = start_f - self.best_f > 1e-12 * self.best_f.abs() + opts.fatol;
            if restart > 0 && converged_once && !improved {
                return Ok(Pass::Converged);
            }
        }
        Ok(Pass::Stalled)
    }
}

/// Runs a restarted Nelder–Mead descent from `initial`.
pub fn optimize(initial: &MemoryConfig, opts: &OptimizeOptions) -> Result<OptimizationReport, MatchError> {
    if !initial.check_symmetry() || initial.half_count() == 0 {
        return Err(MatchError::AsymmetricConfig);
    }
    let half = initial.positive_half();
    if half.iter().any(|&(_, g)| g <= 0.0) {
        return Err(MatchError::ZeroCoupling);
    }
    let n = half.len();
    let conditions = opts.conditions.unwrap_or_else(|| default_condition_count(n));
    if let Some(w) = &opts.weights {
        if w.len() != conditions {
            return Err(MatchError::WeightLength {
                got: w.len(),
                expected: conditions,
            });
        }
    }
    let fix = opts
        .fix_inner_detuning
        .unwrap_or(opts.objective.uses_residuals());
    let param = Parametrization {
        template: initial.clone(),
        n,
        fixed_inner: fix.then_some(half[0].0),
    };

    let mut eval = Evaluator {
        opts,
        conditions,
        residual_scale: 1.0,
        band_scale: 1.0,
        // a band objective with a floating reference is minimised by a comb
        // that stores nothing, so the target delay is pinned
        band_t0: (opts.objective != Objective::Residuals).then(|| opts.form.reference_delay(initial)),
        evaluations: 0,
    };
    let initial_residuals = eval.residuals(initial)?;
    let initial_band_error = eval.band(initial)?;
    eval.residual_scale = initial_residuals.weighted_sum_of_squares().max(f64::MIN_POSITIVE);
    eval.band_scale = initial_band_error.max(f64::MIN_POSITIVE);

    let x0 = param.encode(&half);

    let f = |x: &[f64], eval: &mut Evaluator| -> Result<f64, MatchError> {
        let v = eval.objective(&param.config(x)?)?;
        Ok(if v.is_finite() { v } else { f64::INFINITY })
    };

    // graduated matching: one more Taylor condition per stage
    let stages: Vec<usize> = if opts.continuation && opts.objective == Objective::Residuals {
        (1..=conditions).collect()
    } else {
        vec![conditions]
    };
    let initial_objective = f(&x0, &mut eval)?;
    let mut search = Search {
        best_x: x0.clone(),
        best_f: 0.0,
        history: History::default(),
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
    };
    let mut simplex_converged = false;
    for &m in &stages {
        eval.conditions = m;
        search.best_f = f(&search.best_x, &mut eval)?;
        // the staged path must not end worse than where it started
        if m == conditions && stages.len() > 1 && initial_objective <= search.best_f {
            search.best_x = x0.clone();
            search.best_f = initial_objective;
        }
        let pass = search.descend(&f, &mut eval, &param, opts, m, conditions)?;
        simplex_converged = pass == Pass::Converged;
        if pass == Pass::Budget {
            break;
        }
    }
    eval.conditions = conditions;
    let Search { mut best_x, history, .. } = search;
    let mut best_f = f(&best_x, &mut eval)?;
    // gains below this are search noise; keep the starting point
    if initial_objective - best_f <= STALL_GAIN * initial_objective {
        best_x = x0;
        best_f = initial_objective;
    }
    let iterations = history.objective.len();

    let final_config = param.config(&best_x)?;
    let final_residuals = eval.residuals(&final_config)?;
    let final_band_error = eval.band(&final_config)?;
    // component-wise comparison with a rounding-level slack
    let no_worse = |f: f64, i: f64| f <= i * (1.0 + MONOTONE_RTOL) + f64::MIN_POSITIVE;
    let monotone = if opts.objective.uses_residuals() {
        final_residuals
            .residuals
            .iter()
            .zip(&initial_residuals.residuals)
            .all(|(&f, &i)| no_worse(f, i))
    } else {
        no_worse(final_band_error, initial_band_error)
    };
    let report = OptimizationReport {
        objective: opts.objective,
        form: opts.form,
        conditions,
        initial_config: initial.clone(),
        final_config,
        initial_residuals,
        final_residuals,
        residual_history: history.residual,
        objective_history: history.objective,
        history_conditions: history.conditions,
        initial_objective,
        final_objective: best_f,
        initial_band_error,
        band_error: final_band_error,
        converged: simplex_converged && monotone,
        iterations,
        evaluations: eval.evaluations,
    };
    if !simplex_converged {
        return Err(MatchError::NotConverged(Box::new(report)));
    }
    Ok(report)
}
