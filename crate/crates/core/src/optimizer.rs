//! Direct search for the fastest-orthogonalizing state at fixed mean energy.
//!
//! The raw objective, the first time with `|S(t)| <= delta`, is undefined
//! for almost every weight vector. The search therefore minimizes the soft
//! orthogonality time
//!
//! ```text
//! sigma(p) = min_t  t + kappa * max(0, |S_p(t)| - delta)
//! ```
//!
//! With `kappa >= (1 + 2/pi) / (4E)` the `Re S / Im S` inequality gives
//! `sigma(p) >= 1/(4E) - kappa * delta` for every `p`, so the surrogate
//! shares its minimizer with the true orthogonality time whenever the
//! spectrum contains the level `2E`. The reported `best_tau` is always the
//! true first-crossing time of the returned state.
//!
//! Weights are searched by restarted Nelder-Mead in an unconstrained space;
//! every candidate is projected onto the simplex intersected with the
//! energy plane before it is evaluated.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{self, OrthogonalitySearch, DEFAULT_DELTA, DEFAULT_GRID_FACTOR};
use crate::spectrum::Spectrum;
use crate::state::{mix_to_energy, PureState, ENERGY_TOLERANCE};

pub const DEFAULT_BUDGET: usize = 5000;
pub const DEFAULT_RESTARTS: usize = 8;

/// Absolute slack allowed on `best_tau >= 1/(4E)`.
pub const BOUND_SLACK: f64 = 1e-6;

/// Relative disagreement above which a certificate is marked unstable.
pub const CERTIFY_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub delta: f64,
    /// Objective evaluations per restart.
    pub budget: usize,
    pub seed: u64,
    pub restarts: usize,
    /// Defaults to `50 / (4E)`.
    pub t_max: Option<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            delta: DEFAULT_DELTA,
            budget: DEFAULT_BUDGET,
            seed: 0,
            restarts: DEFAULT_RESTARTS,
            t_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub best_state: PureState,
    /// First time with `|S| <= delta`; `None` if the best state never gets there.
    pub best_tau: Option<f64>,
    pub bound_tau: f64,
    pub gap: Option<f64>,
    pub energy: f64,
    pub delta: f64,
    pub t_max: f64,
    /// Soft orthogonality time of `best_state`.
    pub surrogate: f64,
    /// Objective evaluations over all restarts.
    pub iterations: usize,
    pub converged: bool,
    pub restart: usize,
}

impl OptimizationResult {
    /// The energy bound as a runtime check.
    pub fn respects_bound(&self) -> bool {
        self.best_tau.is_none_or(|tau| tau >= self.bound_tau - BOUND_SLACK)
    }
}

/// Projects unconstrained coordinates onto `{p >= 0, sum p = 1, sum p E = target}`.
///
/// Negative coordinates are clipped, the rest renormalized, and the result
/// shifted along `E - mean_support(E)` (the fastest mean-changing direction
/// at fixed normalization), clipping again if the shift leaves the simplex.
/// Falls back to mixing with a point mass when the support lies on one side
/// of the target.
pub fn project_to_energy(energies: &[f64], x: &[f64], target: f64) -> Option<Vec<f64>> {
    let mut p: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = p.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return None;
    }
    p.iter_mut().for_each(|v| *v /= total);
    let tol = 1e-13 * target.max(1.0);
    for _ in 0..=energies.len() {
        let mean: f64 = p.iter().zip(energies).map(|(w, e)| w * e).sum();
        if (mean - target).abs() <= tol {
            return Some(p);
        }
        let support: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
        let centre = support.iter().map(|&i| energies[i]).sum::<f64>() / support.len() as f64;
        let spread: f64 = support.iter().map(|&i| (energies[i] - centre).powi(2)).sum();
        if spread <= 0.0 {
            break;
        }
        let s = (target - mean) / spread;
        let mut clipped = false;
        for &i in &support {
            p[i] += s * (energies[i] - centre);
            if p[i] < 0.0 {
                p[i] = 0.0;
                clipped = true;
            }
        }
        if clipped {
            let total: f64 = p.iter().sum();
            if total <= 0.0 {
                return None;
            }
            p.iter_mut().for_each(|v| *v /= total);
        }
    }
    let mean: f64 = p.iter().zip(energies).map(|(w, e)| w * e).sum();
    if (mean - target).abs() <= tol {
        return Some(p);
    }
    mix_to_energy(energies, &p, target, |_| 0)
}

fn norm_sqr(levels: &[(f64, f64)], t: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for &(e, w) in levels {
        let (s, c) = (TAU * e * t).sin_cos();
        re += w * c;
        im += w * s;
    }
    re * re + im * im
}

/// `min_t t + kappa * max(0, |S(t)| - delta)` over `(0, t_max]`.
pub fn soft_orthogonality_time(state: &PureState, kappa: f64, delta: f64, t_max: f64) -> f64 {
    let levels: Vec<(f64, f64)> = state.support().collect();
    soft_time(&levels, kappa, delta, t_max)
}

fn soft_time(levels: &[(f64, f64)], kappa: f64, delta: f64, t_max: f64) -> f64 {
    let span = levels.iter().map(|l| l.0).fold(0.0, f64::max);
    let value = |t: f64| t + kappa * (norm_sqr(levels, t).sqrt() - delta).max(0.0);
    if span <= 0.0 {
        return value(t_max);
    }
    let dt = 1.0 / (DEFAULT_GRID_FACTOR * span);
    let mut best = f64::INFINITY;
    let (mut t2, mut v2) = (f64::NAN, f64::NAN);
    let (mut t1, mut v1) = (0.0, value(0.0));
    let mut i = 1u64;
    loop {
        let t = (i as f64 * dt).min(t_max);
        let v = value(t);
        best = best.min(v);
        if i >= 2 && v1 <= v2 && v1 <= v && t2 < best {
            best = best.min(golden(&value, t2, t));
        }
        if t >= t_max || t >= best {
            return best;
        }
        (t2, v2) = (t1, v1);
        (t1, v1) = (t, v);
        i += 1;
    }
}

fn golden(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if b - a <= 1e-12 * b {
            break;
        }
        if fc < fd {
            (b, d, fd) = (d, c, fc);
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            (a, c, fc) = (c, d, fd);
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

struct Objective<'a> {
    energies: &'a [f64],
    target: f64,
    kappa: f64,
    delta: f64,
    t_max: f64,
}

impl Objective<'_> {
    fn weights(&self, x: &[f64]) -> Option<Vec<f64>> {
        project_to_energy(self.energies, x, self.target)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self.weights(x) {
            Some(p) => {
                let levels: Vec<(f64, f64)> = self
                    .energies
                    .iter()
                    .copied()
                    .zip(p)
                    .filter(|l| l.1 > 0.0)
                    .collect();
                soft_time(&levels, self.kappa, self.delta, self.t_max)
            }
            None => f64::INFINITY,
        }
    }
}

struct Restart {
    x: Vec<f64>,
    value: f64,
    evaluations: usize,
    converged: bool,
}

/// Plain Nelder-Mead with standard coefficients.
fn nelder_mead(f: impl Fn(&[f64]) -> f64, start: &[f64], scale: f64, budget: usize) -> Restart {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += scale;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evaluations = n + 1;
    let mut converged = false;

    while evaluations < budget {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread.abs() <= 1e-13 && diameter <= 1e-10 {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = along(1.0);
        let fr = f(&reflected);
        evaluations += 1;
        if fr < values[0] {
            let expanded = along(2.0);
            let fe = f(&expanded);
            evaluations += 1;
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let c = along(0.5);
            let v = f(&c);
            (c, v)
        } else {
            let c = along(-0.5);
            let v = f(&c);
            (c, v)
        };
        evaluations += 1;
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            for (x, b) in simplex[i].iter_mut().zip(&best) {
                *x = b + 0.5 * (*x - b);
            }
            values[i] = f(&simplex[i]);
        }
        evaluations += n;
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("simplex is nonempty");
    Restart {
        x: simplex[best].clone(),
        value: values[best],
        evaluations,
        converged,
    }
}

/// Searches the weights on `spectrum` with mean energy `energy` for the
/// smallest first-orthogonality time.
pub fn minimize_tau(spectrum: &Spectrum, energy: f64, config: &SearchConfig) -> Result<OptimizationResult> {
    if !(energy > 0.0 && energy < spectrum.max_energy()) {
        return Err(Error::Infeasible(format!(
            "energy {energy} not strictly inside (0, {})",
            spectrum.max_energy()
        )));
    }
    if config.budget == 0 || config.restarts == 0 {
        return Err(Error::param("budget", "budget and restarts must be at least 1"));
    }
    let t_max = config
        .t_max
        .unwrap_or_else(|| OrthogonalitySearch::default_t_max(energy));
    let search = OrthogonalitySearch::new(config.delta, t_max)?;
    let objective = Objective {
        energies: spectrum.energies(),
        target: energy,
        kappa: (1.0 + 2.0 / PI) / (2.0 * energy),
        delta: config.delta,
        t_max,
    };

    let runs: Vec<(Restart, PureState, Option<f64>)> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let seed = crate::rng::derive(config.seed, r as u64);
            let start = PureState::sample_fixed_energy(spectrum, energy, seed)?;
            let run = nelder_mead(|x| objective.eval(x), start.weights(), 0.1, config.budget);
            let weights = objective
                .weights(&run.x)
                .ok_or_else(|| Error::Infeasible("search left the feasible set".into()))?;
            let state = PureState::new(spectrum.clone(), weights)?;
            let tau = search.run(&state);
            Ok((run, state, tau))
        })
        .collect::<Result<_>>()?;

    let iterations = runs.iter().map(|r| r.0.evaluations).sum();
    let (restart, (run, state, tau)) = runs
        .into_iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            let key = |r: &(Restart, PureState, Option<f64>)| (r.2.unwrap_or(f64::INFINITY), r.0.value);
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
        })
        .expect("at least one restart");

    let stats = state.energy_stats();
    if (stats.mean - energy).abs() > ENERGY_TOLERANCE {
        return Err(Error::Infeasible(format!(
            "best state has mean energy {}, target {energy}",
            stats.mean
        )));
    }
    let bound_tau = 1.0 / (4.0 * energy);
    Ok(OptimizationResult {
        surrogate: soft_orthogonality_time(&state, objective.kappa, config.delta, t_max),
        best_state: state,
        best_tau: tau,
        bound_tau,
        gap: tau.map(|t| t - bound_tau),
        energy,
        delta: config.delta,
        t_max,
        iterations,
        converged: run.converged,
        restart,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub stored_tau: Option<f64>,
    /// Orthogonality time recomputed on a ten times finer grid.
    pub recomputed_tau: Option<f64>,
    pub ml_time: Option<f64>,
    pub mt_time: Option<f64>,
    pub gap: Option<f64>,
    pub checks: BTreeMap<String, bool>,
    pub stable: bool,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.stable && self.checks.values().all(|&ok| ok)
    }
}

/// Independently re-derives the orthogonality time and bounds of a result.
pub fn certify(result: &OptimizationResult) -> Result<Certificate> {
    let state = &result.best_state;
    let search = OrthogonalitySearch::new(result.delta, result.t_max)?
        .with_grid_factor(10.0 * DEFAULT_GRID_FACTOR)?;
    let recomputed = search.run(state);
    let report = evolution::bounds(state, None)?.with_measured(recomputed);
    let stats = state.energy_stats();

    let respects = |bound: Option<f64>| match (recomputed, bound) {
        (Some(tau), Some(b)) => tau >= b - evolution::approximate_tolerance(result.delta, b),
        _ => true,
    };
    let mut checks = BTreeMap::new();
    checks.insert(
        "normalization".to_string(),
        (state.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12,
    );
    checks.insert(
        "energy_constraint".to_string(),
        (stats.mean - result.energy).abs() <= ENERGY_TOLERANCE,
    );
    checks.insert("ml_bound".to_string(), respects(report.ml_time));
    checks.insert("mt_bound".to_string(), respects(report.mt_time));

    let stable = match (result.best_tau, recomputed) {
        (Some(a), Some(b)) => (a - b).abs() <= CERTIFY_REL_TOL * b,
        (None, None) => true,
        _ => false,
    };
    Ok(Certificate {
        stored_tau: result.best_tau,
        recomputed_tau: recomputed,
        ml_time: report.ml_time,
        mt_time: report.mt_time,
        gap: recomputed.zip(report.ml_time).map(|(t, b)| t - b),
        checks,
        stable,
    })
}
