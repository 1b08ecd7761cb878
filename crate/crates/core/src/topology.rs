//! Resonance-line structure of the coupled cavity–comb system.
//!
//! The poles of `S(ν)` are the roots of
//! `P(ν) = (1 − 2iν/κ) Π(a_k − ν) − i Σ_n g_n Π_{k≠n}(a_k − ν)`, `a_k = Δ_k − iγ_k`.
//! One of the `2N + 1` roots belongs to the cavity (near `−iκ/2`) and is
//! excluded from the line set.

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, MemoryConfig};
use crate::poly::{roots, Poly, RootError, RootOptions};

/// Relative `|Re p|` below which a root counts as lying on the imaginary axis.
const AXIS_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("absorbers {0} and {1} share detuning and decay; the polynomial has a dark root")]
    DegenerateDetunings(usize, usize),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("branch assignment at g = {g} is ambiguous away from a merge")]
    BranchMatchingAmbiguous { g: f64 },
    #[error("line count is {count} at both ends of [{lo}, {hi}]")]
    NoTransitionInBracket { lo: f64, hi: f64, count: usize },
    #[error("g grid must be non-empty, finite and strictly increasing")]
    BadGrid,
}

#[derive(Debug, Clone, Copy)]
pub struct TopologyOptions {
    /// Two line positions closer than this count as one line.
    pub tol_merge: f64,
    /// Relative cost gap below which two branch assignments are tied.
    pub tie_rtol: f64,
    pub roots: RootOptions,
}

impl Default for TopologyOptions {
    fn default() -> Self {
        Self {
            tol_merge: 1e-4,
            tie_rtol: 1e-9,
            roots: RootOptions::default(),
        }
    }
}

pub fn pole_polynomial(config: &MemoryConfig) -> Result<Poly, TopologyError> {
    let abs = config.absorbers();
    for i in 0..abs.len() {
        for j in i + 1..abs.len() {
            if abs[i].detuning == abs[j].detuning && abs[i].gamma == abs[j].gamma {
                return Err(TopologyError::DegenerateDetunings(i, j));
            }
        }
    }
    Ok(cayley_polynomial(config, -1.0))
}

/// `(1 + 2iσν/κ) Π(a_k − ν) + iσ Σ_n g_n Π_{k≠n}(a_k − ν)`: the zeros of
/// `S` for `σ = 1`, its poles for `σ = −1`.
pub(crate) fn cayley_polynomial(config: &MemoryConfig, sign: f64) -> Poly {
    let one = C64::new(1.0, 0.0);
    let a: Vec<C64> = config.absorbers().iter().map(|x| C64::new(x.detuning, -x.gamma)).collect();
    let product_except = |skip: Option<usize>| {
        let mut p = Poly::constant(one);
        for (k, &ak) in a.iter().enumerate() {
            if Some(k) != skip {
                p.mul_linear(ak, -one);
            }
        }
        p
    };
    let mut p = product_except(None);
    p.mul_linear(one, C64::new(0.0, sign * 2.0 / config.kappa()));
    for (n, x) in config.absorbers().iter().enumerate() {
        p.add_scaled(&product_except(Some(n)), C64::new(0.0, sign * x.g));
    }
    p
}

/// Poles of one configuration, split into comb lines and the cavity root.
#[derive(Debug, Clone, Serialize)]
pub struct ResonanceLineSet {
    /// Comb-derived poles sorted by real part.
    pub poles: Vec<C64>,
    pub cavity_pole: C64,
    pub positions: Vec<f64>,
    /// Full widths `−2 Im ν_p`.
    pub widths: Vec<f64>,
    pub config: MemoryConfig,
}

impl ResonanceLineSet {
    pub fn distinct_lines(&self, tol: f64) -> usize {
        distinct_count(&self.positions, tol)
    }
}

/// Number of clusters in `positions` when neighbours closer than `tol` merge.
pub fn distinct_count(positions: &[f64], tol: f64) -> usize {
    let mut xs = positions.to_vec();
    xs.sort_by(f64::total_cmp);
    match xs.first() {
        None => 0,
        Some(_) => 1 + xs.windows(2).filter(|w| w[1] - w[0] > tol).count(),
    }
}

pub fn resonance_lines(config: &MemoryConfig, opts: &TopologyOptions) -> Result<ResonanceLineSet, TopologyError> {
    let mut all = roots(&pole_polynomial(config)?, &opts.roots)?;
    // A mirror-symmetric comb keeps its cavity root on the imaginary axis even
    // when a hybridized pair has become wider.
    let on_axis = |p: &C64| !config.check_symmetry() || p.re.abs() <= AXIS_TOL * (1.0 + p.norm());
    let widest = |candidates: &mut dyn Iterator<Item = usize>| {
        candidates.max_by(|&i, &j| all[i].im.abs().total_cmp(&all[j].im.abs()))
    };
    let cavity_index = widest(&mut (0..all.len()).filter(|&i| on_axis(&all[i])))
        .or_else(|| widest(&mut (0..all.len())))
        .expect("degree ≥ 1");
    let cavity_pole = all.remove(cavity_index);
    all.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(ResonanceLineSet {
        positions: all.iter().map(|p| p.re).collect(),
        widths: all.iter().map(|p| -2.0 * p.im).collect(),
        poles: all,
        cavity_pole,
        config: config.clone(),
    })
}

/// Grid index where the distinct-line count drops, with the branches that
/// coincide after it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeEvent {
    pub g_before: f64,
    pub g_after: f64,
    pub lines_before: usize,
    pub lines_after: usize,
    pub branches: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LineTrajectories {
    pub g_grid: Vec<f64>,
    /// `branches[b][k]`: pole of branch `b` at `g_grid[k]`.
    pub branches: Vec<Vec<C64>>,
    pub line_counts: Vec<usize>,
    pub merge_events: Vec<MergeEvent>,
}

impl LineTrajectories {
    pub fn positions_at(&self, k: usize) -> Vec<f64> {
        self.branches.iter().map(|b| b[k].re).collect()
    }

    pub fn widths_at(&self, k: usize) -> Vec<f64> {
        self.branches.iter().map(|b| -2.0 * b[k].im).collect()
    }
}

/// Follows every line while all couplings are set to each `g` in turn.
/// Branches are continued by the assignment minimising total squared
/// displacement between neighbouring grid points.
pub fn line_trajectories(
    template: &MemoryConfig,
    g_grid: &[f64],
    opts: &TopologyOptions,
) -> Result<LineTrajectories, TopologyError> {
    if g_grid.is_empty() || g_grid.iter().any(|g| !g.is_finite()) || g_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TopologyError::BadGrid);
    }
    let mut branches: Vec<Vec<C64>> = Vec::new();
    let mut line_counts = Vec::with_capacity(g_grid.len());
    let mut merge_events = Vec::new();
    let mut previous: Vec<C64> = Vec::new();
    for (k, &g) in g_grid.iter().enumerate() {
        let set = resonance_lines(&template.with_common_g(g)?, opts)?;
        let count = set.distinct_lines(opts.tol_merge);
        let current = if k == 0 {
            branches = set.poles.iter().map(|&p| vec![p]).collect();
            set.poles.clone()
        } else {
            let coincident = has_coincident(&previous, opts.tol_merge) || has_coincident(&set.poles, opts.tol_merge);
            let order = assign(&previous, &set.poles, opts.tie_rtol, coincident).ok_or(TopologyError::BranchMatchingAmbiguous { g })?;
            let next: Vec<C64> = order.iter().map(|&j| set.poles[j]).collect();
            for (b, &p) in branches.iter_mut().zip(&next) {
                b.push(p);
            }
            let last = *line_counts.last().expect("k > 0");
            if count < last {
                let mut pairs = Vec::new();
                for i in 0..next.len() {
                    for j in i + 1..next.len() {
                        if (next[i].re - next[j].re).abs() <= opts.tol_merge {
                            pairs.push((i, j));
                        }
                    }
                }
                merge_events.push(MergeEvent {
                    g_before: g_grid[k - 1],
                    g_after: g,
                    lines_before: last,
                    lines_after: count,
                    branches: pairs,
                });
            }
            next
        };
        line_counts.push(count);
        previous = current;
    }
    Ok(LineTrajectories {
        g_grid: g_grid.to_vec(),
        branches,
        line_counts,
        merge_events,
    })
}

fn has_coincident(poles: &[C64], tol: f64) -> bool {
    distinct_count(&poles.iter().map(|p| p.re).collect::<Vec<_>>(), tol) < poles.len()
}

/// `order[b]` = index in `next` continuing branch `b`. `None` on an
/// unexplained tie between the two cheapest assignments.
fn assign(prev: &[C64], next: &[C64], tie_rtol: f64, tie_allowed: bool) -> Option<Vec<usize>> {
    let n = prev.len();
    let cost = |b: usize, j: usize| (prev[b] - next[j]).norm_sqr();
    if n > 16 {
        let mut used = vec![false; n];
        return Some(
            (0..n)
                .map(|b| {
                    let j = (0..n)
                        .filter(|&j| !used[j])
                        .min_by(|&x, &y| cost(b, x).total_cmp(&cost(b, y)))
                        .expect("square assignment");
                    used[j] = true;
                    j
                })
                .collect(),
        );
    }
    // best and second-best cost over subsets, with back-pointers for the best
    let size = 1usize << n;
    let mut best = vec![[f64::INFINITY; 2]; size];
    let mut choice = vec![usize::MAX; size];
    best[0] = [0.0, f64::INFINITY];
    for mask in 1..size {
        let b = mask.count_ones() as usize - 1;
        let mut top = [f64::INFINITY; 2];
        for j in (0..n).filter(|&j| mask & (1 << j) != 0) {
            let rest = best[mask ^ (1 << j)];
            for (rank, base) in rest.iter().enumerate() {
                let c = base + cost(b, j);
                if c < top[0] {
                    top[1] = top[0];
                    top[0] = c;
                    if rank == 0 {
                        choice[mask] = j;
                    }
                } else if c < top[1] {
                    top[1] = c;
                }
            }
        }
        best[mask] = top;
    }
    let [first, second] = best[size - 1];
    if !tie_allowed && second - first <= tie_rtol * first.max(f64::MIN_POSITIVE) {
        return None;
    }
    let mut order = vec![0; n];
    let mut mask = size - 1;
    for b in (0..n).rev() {
        let j = choice[mask];
        order[b] = j;
        mask ^= 1 << j;
    }
    Some(order)
}

/// Coupling at which the number of distinct lines changes inside `bracket`,
/// located by bisection to `tol`.
pub fn transition_point(
    template: &MemoryConfig,
    bracket: (f64, f64),
    tol: f64,
    opts: &TopologyOptions,
) -> Result<f64, TopologyError> {
    let count = |g: f64| -> Result<usize, TopologyError> {
        Ok(resonance_lines(&template.with_common_g(g)?, opts)?.distinct_lines(opts.tol_merge))
    };
    let (mut lo, mut hi) = bracket;
    let c_lo = count(lo)?;
    let c_hi = count(hi)?;
    if c_lo == c_hi {
        return Err(TopologyError::NoTransitionInBracket { lo, hi, count: c_lo });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if count(mid)? == c_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
