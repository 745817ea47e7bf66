//! Survival amplitude, time evolution, orthogonality times and the
//! single-step speed limits.
//!
//! Time is measured in units where `h = 1`, so the phase picked up by level
//! `E_n` after time `t` is `2 pi E_n t`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::PureState;

/// Default threshold on `|S(t)|` for calling two states orthogonal.
pub const DEFAULT_DELTA: f64 = 1e-6;

/// Grid points per fastest oscillation period `1 / E_span`.
pub const DEFAULT_GRID_FACTOR: f64 = 20.0;

/// `S(t) = <psi_0 | psi_t> = sum_n p_n exp(-2 pi i E_n t)`.
pub fn overlap(state: &PureState, t: f64) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (e, w) in state.support() {
        let (s, c) = (TAU * e * t).sin_cos();
        re += w * c;
        im -= w * s;
    }
    Complex64::new(re, im)
}

fn overlap_norm_sqr(levels: &[(f64, f64)], t: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for &(e, w) in levels {
        let (s, c) = (TAU * e * t).sin_cos();
        re += w * c;
        im -= w * s;
    }
    re * re + im * im
}

/// Advances every phase by `-2 pi E_n t`, wrapped into `[0, 2 pi)`.
pub fn evolve(state: &PureState, t: f64) -> PureState {
    let phases = state
        .energies()
        .iter()
        .zip(state.phases())
        .map(|(e, p)| (p - TAU * e * t).rem_euclid(TAU))
        .collect();
    state.with_new_phases(phases)
}

/// Sampled survival amplitude.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapTrace {
    pub times: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub mag: Vec<f64>,
}

impl OverlapTrace {
    pub fn sample(state: &PureState, times: &[f64]) -> Self {
        let values: Vec<Complex64> = times.par_iter().map(|&t| overlap(state, t)).collect();
        OverlapTrace {
            times: times.to_vec(),
            re: values.iter().map(|s| s.re).collect(),
            im: values.iter().map(|s| s.im).collect(),
            mag: values.iter().map(|s| s.norm()).collect(),
        }
    }

    /// `points` equally spaced samples on `[0, t_max]`.
    pub fn uniform(state: &PureState, t_max: f64, points: usize) -> Result<Self> {
        if points < 2 || t_max.is_nan() || t_max <= 0.0 {
            return Err(Error::param("points", "need at least 2 points and t_max > 0"));
        }
        let times: Vec<f64> = (0..points)
            .map(|i| t_max * i as f64 / (points - 1) as f64)
            .collect();
        Ok(Self::sample(state, &times))
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Parameters of the first-crossing search for `|S(t)| <= delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalitySearch {
    delta: f64,
    t_max: f64,
    grid_factor: f64,
}

impl OrthogonalitySearch {
    pub fn new(delta: f64, t_max: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::param("delta", format!("must lie in (0, 0.5], got {delta}")));
        }
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::param("t_max", format!("must be positive, got {t_max}")));
        }
        Ok(OrthogonalitySearch {
            delta,
            t_max,
            grid_factor: DEFAULT_GRID_FACTOR,
        })
    }

    /// Default search window: fifty times `1/(4E)`.
    pub fn default_t_max(mean_energy: f64) -> f64 {
        if mean_energy > 0.0 {
            50.0 / (4.0 * mean_energy)
        } else {
            1.0
        }
    }

    pub fn with_grid_factor(mut self, grid_factor: f64) -> Result<Self> {
        if grid_factor.is_nan() || grid_factor < 1.0 {
            return Err(Error::param("grid_factor", "must be at least 1"));
        }
        self.grid_factor = grid_factor;
        Ok(self)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Smallest `t` in `(0, t_max]` with `|S(t)| <= delta`.
    ///
    /// Scans a grid with step `1 / (grid_factor * E_span)`, refines every
    /// grid-level local minimum of `|S|^2` by golden-section search, and
    /// bisects the first crossing to 1e-12 relative accuracy. Dips narrower
    /// than the grid spacing between two nearby minima can be missed.
    pub fn run(&self, state: &PureState) -> Option<f64> {
        let levels: Vec<(f64, f64)> = state.support().collect();
        let span = levels.iter().map(|l| l.0).fold(0.0, f64::max);
        if span <= 0.0 {
            return None;
        }
        let dt = 1.0 / (self.grid_factor * span);
        let delta_sq = self.delta * self.delta;
        let f = |t: f64| overlap_norm_sqr(&levels, t);

        let (mut t2, mut g2) = (f64::NAN, f64::NAN);
        let (mut t1, mut g1) = (0.0, 1.0);
        let mut i = 1u64;
        loop {
            let t = (i as f64 * dt).min(self.t_max);
            let g = f(t);
            if g <= delta_sq {
                return Some(bisect_crossing(&f, t1, t, delta_sq));
            }
            if i >= 2 && g1 <= g2 && g1 <= g {
                let (tm, gm) = golden_min(&f, t2, t);
                if gm <= delta_sq {
                    return Some(bisect_crossing(&f, t2, tm, delta_sq));
                }
            }
            if t >= self.t_max {
                return None;
            }
            (t2, g2) = (t1, g1);
            (t1, g1) = (t, g);
            i += 1;
        }
    }
}

/// `lo` has `f > level`, `hi` has `f <= level`; returns the crossing time.
fn bisect_crossing(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, level: f64) -> f64 {
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Golden-section minimum of `f` on `[a, b]`.
pub(crate) fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a <= 4.0 * f64::EPSILON * b.abs().max(1e-300) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Convenience wrapper around [`OrthogonalitySearch::run`].
pub fn first_orthogonality_time(state: &PureState, delta: f64, t_max: f64) -> Result<Option<f64>> {
    Ok(OrthogonalitySearch::new(delta, t_max)?.run(state))
}

/// Bound times for a state, `h = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    /// `1 / (4 E)`.
    pub ml_time: Option<f64>,
    /// `1 / (4 dE)`.
    pub mt_time: Option<f64>,
    /// `(N - 1) / (2 N E)` for an `N`-state cycle.
    pub cycle_time: Option<f64>,
    /// `(N - 1) / (N E_max)` with `E_max` the top occupied level.
    pub emax_time: Option<f64>,
    pub measured_tau: Option<f64>,
    /// `measured_tau / bound` for every bound present.
    pub ratios: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn with_measured(mut self, tau: Option<f64>) -> Self {
        self.measured_tau = tau;
        self.ratios.clear();
        if let Some(tau) = tau {
            for (name, bound) in [
                ("cycle", self.cycle_time),
                ("emax", self.emax_time),
                ("ml", self.ml_time),
                ("mt", self.mt_time),
            ] {
                if let Some(b) = bound {
                    self.ratios.insert(name.to_string(), tau / b);
                }
            }
        }
        self
    }

    /// Largest single-step lower bound, `max(1/(4E), 1/(4 dE))`.
    pub fn strongest(&self) -> Option<f64> {
        match (self.ml_time, self.mt_time) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    /// Whether the measured time respects both single-step bounds up to `tol`.
    pub fn is_sound(&self, tol: f64) -> bool {
        match (self.measured_tau, self.strongest()) {
            (Some(tau), Some(bound)) => tau >= bound - tol,
            _ => true,
        }
    }
}

pub fn bounds(state: &PureState, cycle_n: Option<usize>) -> Result<BoundReport> {
    let stats = state.energy_stats();
    let mut notes = Vec::new();
    let ml_time = if stats.mean > 0.0 {
        Some(1.0 / (4.0 * stats.mean))
    } else {
        notes.push("mean energy is zero: energy bound absent".to_string());
        None
    };
    let mt_time = if stats.stddev > 0.0 {
        Some(1.0 / (4.0 * stats.stddev))
    } else {
        notes.push("energy spread is zero: spread bound absent".to_string());
        None
    };
    let (cycle_time, emax_time) = match cycle_n {
        Some(n) if n < 2 => return Err(Error::param("cycle_N", "must be at least 2")),
        Some(n) => {
            let frac = (n - 1) as f64 / n as f64;
            let cycle = (stats.mean > 0.0).then(|| frac / (2.0 * stats.mean));
            let emax = (stats.e_max_used > 0.0).then(|| frac / stats.e_max_used);
            (cycle, emax)
        }
        None => (None, None),
    };
    Ok(BoundReport {
        ml_time,
        mt_time,
        cycle_time,
        emax_time,
        measured_tau: None,
        ratios: BTreeMap::new(),
        notes,
    })
}

/// Slack on a lower bound `b` when orthogonality means `|S| <= delta`
/// rather than `S = 0`: the `Re S / Im S` inequality only forces
/// `t >= b (1 - delta (1 + 2/pi))`. Never below 1e-6.
pub fn approximate_tolerance(delta: f64, bound: f64) -> f64 {
    1e-6_f64.max(delta * (1.0 + 2.0 / PI) * bound)
}

/// `cos x - 1 + (2/pi)(x + sin x)`, nonnegative for `x >= 0`.
pub fn lemma_margin(x: f64) -> f64 {
    x.cos() - 1.0 + (2.0 / PI) * (x + x.sin())
}

/// `Re S(t) - [1 - 4 E t + (2/pi) Im S(t)]`, nonnegative for `t >= 0`.
///
/// Evaluated term by term as `sum_n p_n lemma_margin(2 pi E_n t)`, which is
/// the same quantity without the cancellation between `Re S` and `4 E t`.
pub fn reim_gap(state: &PureState, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::param("t", format!("must be nonnegative, got {t}")));
    }
    Ok(state.support().map(|(e, w)| w * lemma_margin(TAU * e * t)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Spectrum;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn overlap_examples() {
        let eig = PureState::eigenstate(Spectrum::from_list(&[0.0, 3.0]).unwrap(), 1).unwrap();
        for t in [0.0, 0.1, 1.7, -4.0] {
            assert!(close(overlap(&eig, t).norm(), 1.0, 1e-15));
        }
        let two = PureState::two_level(1.0).unwrap();
        assert!(overlap(&two, 0.25).norm() < 1e-15);
        let s = overlap(&two, 0.125);
        assert!(close(s.re, 0.5, 1e-15) && close(s.im, -0.5, 1e-15));
        assert!(close(s.norm(), 2f64.sqrt() / 2.0, 1e-15));
        assert_eq!(overlap(&two, 0.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn evolve_examples() {
        let two = PureState::two_level(1.0).unwrap();
        assert_eq!(evolve(&two, 0.0), two);
        let half = evolve(&two, 0.25);
        let rel = (half.phases()[0] - half.phases()[1]).rem_euclid(TAU);
        assert!(close(rel, PI, 1e-12));
    }

    #[test]
    fn first_time_two_level() {
        let two = PureState::two_level(1.0).unwrap();
        let tau = first_orthogonality_time(&two, 1e-9, 10.0).unwrap().unwrap();
        assert!(close(tau, 0.25, 1e-9), "{tau}");
    }

    #[test]
    fn first_time_absent_for_eigenstate() {
        let ground = PureState::eigenstate(Spectrum::from_list(&[0.0]).unwrap(), 0).unwrap();
        assert_eq!(first_orthogonality_time(&ground, 1e-6, 10.0).unwrap(), None);
        let excited = PureState::eigenstate(Spectrum::from_list(&[0.0, 2.0]).unwrap(), 1).unwrap();
        assert_eq!(first_orthogonality_time(&excited, 1e-6, 10.0).unwrap(), None);
    }

    #[test]
    fn first_time_big_delta() {
        let s = PureState::big_delta(1.0, 1.0, 10).unwrap();
        let tau = first_orthogonality_time(&s, 1e-6, 12.5).unwrap().unwrap();
        assert!(close(tau, 0.5, 1e-6), "{tau}");
    }

    #[test]
    fn first_time_uniform_cycle() {
        let s = PureState::uniform_cycle(4, 1.0).unwrap();
        let tau = first_orthogonality_time(&s, 1e-9, 5.0).unwrap().unwrap();
        assert!(close(tau, 0.25, 1e-9));
    }

    #[test]
    fn search_rejects_bad_parameters() {
        assert!(OrthogonalitySearch::new(0.0, 1.0).is_err());
        assert!(OrthogonalitySearch::new(0.6, 1.0).is_err());
        assert!(OrthogonalitySearch::new(0.1, 0.0).is_err());
        assert!(OrthogonalitySearch::new(0.1, f64::NAN).is_err());
    }

    #[test]
    fn search_respects_window() {
        let two = PureState::two_level(1.0).unwrap();
        assert_eq!(first_orthogonality_time(&two, 1e-9, 0.2).unwrap(), None);
    }

    #[test]
    fn bound_examples() {
        let two = bounds(&PureState::two_level(1.0).unwrap(), None).unwrap();
        assert_eq!(two.ml_time, Some(0.25));
        assert_eq!(two.mt_time, Some(0.25));
        let cyc = bounds(&PureState::uniform_cycle(4, 1.0).unwrap(), Some(4)).unwrap();
        assert_eq!(cyc.cycle_time, Some(0.25));
        assert_eq!(cyc.emax_time, Some(0.25));
        let big = PureState::big_delta(1.0, 1.0, 160).unwrap();
        let rep = bounds(&big, None).unwrap();
        assert!(rep.mt_time.unwrap() < 0.2 * rep.ml_time.unwrap());
        let ground = PureState::eigenstate(Spectrum::from_list(&[0.0]).unwrap(), 0).unwrap();
        let g = bounds(&ground, None).unwrap();
        assert_eq!((g.ml_time, g.mt_time), (None, None));
        assert_eq!(g.notes.len(), 2);
    }

    #[test]
    fn bound_ratios() {
        let rep = bounds(&PureState::two_level(1.0).unwrap(), Some(2))
            .unwrap()
            .with_measured(Some(0.25));
        assert_eq!(rep.ratios["ml"], 1.0);
        assert_eq!(rep.ratios["mt"], 1.0);
        assert!(rep.is_sound(1e-12));
        assert!(!rep.clone().with_measured(Some(0.2)).is_sound(1e-6));
    }

    #[test]
    fn reim_gap_examples() {
        let two = PureState::two_level(1.0).unwrap();
        assert_eq!(reim_gap(&two, 0.0).unwrap(), 0.0);
        assert!(reim_gap(&two, 0.25).unwrap().abs() < 1e-15);
        assert!(reim_gap(&two, -0.1).is_err());
    }

    #[test]
    fn reim_gap_matches_direct_formula() {
        let sp = Spectrum::harmonic(12, 0.7).unwrap();
        let s = PureState::sample_fixed_energy(&sp, 2.0, 5).unwrap();
        let e = s.energy_stats().mean;
        for i in 0..50 {
            let t = i as f64 * 0.137;
            let sv = overlap(&s, t);
            let direct = sv.re - (1.0 - 4.0 * e * t + (2.0 / PI) * sv.im);
            assert!(close(reim_gap(&s, t).unwrap(), direct, 1e-12));
        }
    }

    #[test]
    fn trace_invariants() {
        let s = PureState::uniform_cycle(5, 1.0).unwrap();
        let tr = OverlapTrace::uniform(&s, 2.0, 101).unwrap();
        assert_eq!(tr.len(), 101);
        assert_eq!(tr.mag[0], 1.0);
        for i in 0..tr.len() {
            assert!(close(tr.mag[i].powi(2), tr.re[i].powi(2) + tr.im[i].powi(2), 1e-12));
        }
    }
}
