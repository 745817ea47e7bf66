//! Sequences of mutually orthogonal states.
//!
//! Evolving a state by a fixed step produces a sequence `psi_0, psi_1, ...`.
//! The Gram matrix of that sequence tells how close the sequence comes to
//! being mutually orthogonal. On ladder spectra the sequence can be an exact
//! cycle; the fold-sums over residues mod `N` decide when.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;
use crate::state::PureState;

/// Tolerance used for exact-cycle decisions and Gram identity checks.
pub const CYCLE_TOLERANCE: f64 = 1e-12;

/// Default cap on the Gram size used in reports.
pub const DEFAULT_GRAM_CAP: usize = 64;

/// `<psi_{m+k} | psi_m> = sum_n p_n exp(2 pi i E_n step k)`.
pub fn gram_offset(state: &PureState, step: f64, k: i64) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (e, w) in state.support() {
        let (s, c) = (TAU * e * step * k as f64).sin_cos();
        re += w * c;
        im += w * s;
    }
    Complex64::new(re, im)
}

/// Gram matrix `G[m'][m] = <psi_m' | psi_m>` of the sequence `psi_m = U(m step) psi_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramReport {
    size: usize,
    step: f64,
    entries: Vec<Complex64>,
    max_offdiag: f64,
}

impl GramReport {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn max_offdiag(&self) -> f64 {
        self.max_offdiag
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.size + col]
    }

    /// Largest `|G - I|` entry.
    pub fn identity_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.size {
            for c in 0..self.size {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((self.get(r, c) - target).norm());
            }
        }
        worst
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.identity_deviation() <= tol
    }
}

impl Serialize for GramReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.entries.iter().map(|z| [z.re, z.im]).collect();
        let mut st = serializer.serialize_struct("GramReport", 4)?;
        st.serialize_field("entries", &pairs)?;
        st.serialize_field("max_offdiag", &self.max_offdiag)?;
        st.serialize_field("size", &self.size)?;
        st.serialize_field("step", &self.step)?;
        st.end()
    }
}

pub fn gram(state: &PureState, step: f64, count: usize) -> Result<GramReport> {
    if count < 2 {
        return Err(Error::param("M", "Gram size must be at least 2"));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::param("step", format!("must be positive, got {step}")));
    }
    // Entries depend on m' - m only; evaluate each offset once.
    let offsets: Vec<Complex64> = (0..count as i64)
        .into_par_iter()
        .map(|k| gram_offset(state, step, k))
        .collect();
    let mut entries = Vec::with_capacity(count * count);
    for r in 0..count {
        for c in 0..count {
            entries.push(if r >= c {
                offsets[r - c]
            } else {
                offsets[c - r].conj()
            });
        }
    }
    let max_offdiag = offsets[1..].iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(GramReport {
        size: count,
        step,
        entries,
        max_offdiag,
    })
}

/// Weights indexed by rung of a ladder `E = n eps1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderWeights {
    pub eps1: f64,
    pub weights: Vec<f64>,
}

impl LadderWeights {
    pub fn new(eps1: f64, weights: Vec<f64>) -> Result<Self> {
        if !(eps1.is_finite() && eps1 > 0.0) {
            return Err(Error::param("eps1", format!("must be positive, got {eps1}")));
        }
        check_distribution(&weights)?;
        Ok(LadderWeights { eps1, weights })
    }

    /// Reads a state as ladder weights. With `eps1 = None` the spacing is
    /// inferred as the largest `g / q` (`q <= 64`) dividing every level,
    /// where `g` is the smallest nonzero level spacing.
    pub fn from_state(state: &PureState, eps1: Option<f64>) -> Result<Self> {
        let energies = state.energies();
        let eps1 = match eps1 {
            Some(e) => e,
            None => infer_spacing(energies)?,
        };
        if eps1.is_nan() || eps1 <= 0.0 {
            return Err(Error::param("eps1", "must be positive"));
        }
        let mut weights = Vec::new();
        for (&e, &w) in energies.iter().zip(state.weights()) {
            let rung = e / eps1;
            let idx = rung.round();
            if (rung - idx).abs() > 1e-9 * idx.max(1.0) {
                return Err(Error::NotLadder(format!(
                    "level {e} is not a multiple of {eps1}"
                )));
            }
            let idx = idx as usize;
            if weights.len() <= idx {
                weights.resize(idx + 1, 0.0);
            }
            weights[idx] += w;
        }
        Ok(LadderWeights { eps1, weights })
    }

    pub fn to_state(&self) -> Result<PureState> {
        let spectrum = Spectrum::harmonic(self.weights.len(), self.eps1)?;
        PureState::new(spectrum, self.weights.clone())
    }

    pub fn mean_energy(&self) -> f64 {
        self.eps1
            * self
                .weights
                .iter()
                .enumerate()
                .map(|(n, w)| n as f64 * w)
                .sum::<f64>()
    }
}

fn infer_spacing(energies: &[f64]) -> Result<f64> {
    let gap = energies
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !gap.is_finite() {
        return Err(Error::NotLadder("spectrum has no nonzero level".into()));
    }
    for q in 1..=64 {
        let eps = gap / q as f64;
        let fits = energies.iter().all(|&e| {
            let r = e / eps;
            (r - r.round()).abs() <= 1e-9 * r.round().max(1.0)
        });
        if fits {
            return Ok(eps);
        }
    }
    Err(Error::NotLadder(format!(
        "no common spacing found below {gap}/64"
    )))
}

fn check_distribution(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidState("no weights".into()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidState("weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!("weights sum to {total}, expected 1")));
    }
    Ok(())
}

/// Fold-sums `|d_n|^2 = sum_l p_{n + l N}` for `n < N`.
pub fn aggregate_d_weights(weights: &[f64], n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    check_distribution(weights)?;
    let mut d = vec![0.0; n];
    for (i, w) in weights.iter().enumerate() {
        d[i % n] += w;
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleCheck {
    pub is_cycle: bool,
    pub d_weights: Vec<f64>,
    /// Residues whose fold-sum differs from `1/N` by more than the tolerance.
    pub offending: Vec<usize>,
    pub max_deviation: f64,
}

/// A ladder state runs through `N` mutually orthogonal states per period
/// exactly when every fold-sum equals `1/N`.
pub fn exact_cycle_check(weights: &[f64], n: usize) -> Result<CycleCheck> {
    let d = aggregate_d_weights(weights, n)?;
    let target = 1.0 / n as f64;
    let devs: Vec<f64> = d.iter().map(|v| (v - target).abs()).collect();
    let offending: Vec<usize> = devs
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > CYCLE_TOLERANCE)
        .map(|(i, _)| i)
        .collect();
    Ok(CycleCheck {
        is_cycle: offending.is_empty(),
        max_deviation: devs.iter().copied().fold(0.0, f64::max),
        d_weights: d,
        offending,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyFloor {
    /// `eps1 (N - 1) / 2`.
    pub floor: f64,
    pub mean: f64,
    pub holds: bool,
    /// Mean sits on the floor; only the uniform weights on the first `N` rungs do.
    pub equality: bool,
}

pub fn cycle_energy_floor(ladder: &LadderWeights, n: usize) -> Result<EnergyFloor> {
    let check = exact_cycle_check(&ladder.weights, n)?;
    if !check.is_cycle {
        return Err(Error::NotCycle(format!(
            "fold-sums deviate from 1/{n} at residues {:?}",
            check.offending
        )));
    }
    let floor = ladder.eps1 * (n - 1) as f64 / 2.0;
    let mean = ladder.mean_energy();
    let tol = CYCLE_TOLERANCE * floor.max(1.0);
    Ok(EnergyFloor {
        floor,
        mean,
        holds: mean >= floor - tol,
        equality: (mean - floor).abs() <= tol,
    })
}

/// `sum_{n<N} ((E_{n+1} - E_n) / E_N)^2`.
pub fn sum_delta_sq(spectrum: &Spectrum, n: usize) -> Result<f64> {
    if n == 0 || spectrum.len() < n + 1 {
        return Err(Error::param("N", format!("need 1 <= N < {}", spectrum.len())));
    }
    let levels = &spectrum.energies()[..=n];
    let top = levels[n];
    if top <= 0.0 {
        return Err(Error::Infeasible("E_N is zero".into()));
    }
    Ok(levels
        .windows(2)
        .map(|w| {
            let d = (w[1] - w[0]) / top;
            d * d
        })
        .sum())
}

/// Least-squares fit of `ln value = slope ln N + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_power_law(samples: &[(usize, f64)]) -> Option<PowerFit> {
    if samples.len() < 2 || samples.iter().any(|&(n, v)| n == 0 || v.is_nan() || v <= 0.0) {
        return None;
    }
    let xs: Vec<f64> = samples.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, v)| v.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(PowerFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

/// Which correction a [`ScalingReport`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingQuantity {
    /// `|<psi_{m+k}|psi_m>|` for the interval-weighted state.
    OffsetOverlap,
    /// `sum_n delta_n^2`, the shortfall of the mean energy below `E_N/2`.
    DeltaSq,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub quantity: ScalingQuantity,
    pub c: f64,
    pub k: i64,
    pub samples: Vec<(usize, f64)>,
    /// `None` when some sample is exactly zero and no log fit exists.
    pub exponent_fit: Option<f64>,
    pub r2: Option<f64>,
    pub target_exponent: f64,
    pub degenerate: bool,
}

fn check_n_list(n_list: &[usize]) -> Result<()> {
    if n_list.len() < 4 {
        return Err(Error::param("N_list", "need at least 4 sizes"));
    }
    if n_list[0] == 0 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("N_list", "sizes must be positive and strictly increasing"));
    }
    Ok(())
}

fn scaling_report(quantity: ScalingQuantity, c: f64, k: i64, samples: Vec<(usize, f64)>) -> ScalingReport {
    let fit = fit_power_law(&samples);
    ScalingReport {
        quantity,
        c,
        k,
        degenerate: fit.is_none(),
        exponent_fit: fit.map(|f| f.slope),
        r2: fit.map(|f| f.r2),
        samples,
        target_exponent: -2.0 * c,
    }
}

/// Off-diagonal overlap at offset `k` of the interval-weighted state over
/// `power_law(N + 1, c, 1)` stepped by `1/E_N`, for each `N` in `n_list`.
pub fn residual_scaling(c: f64, k: i64, n_list: &[usize]) -> Result<ScalingReport> {
    if k == 0 {
        return Err(Error::param("k", "offset must be nonzero"));
    }
    check_n_list(n_list)?;
    let samples = n_list
        .par_iter()
        .map(|&n| {
            let spectrum = Spectrum::power_law(n + 1, c, 1.0)?;
            let state = PureState::interval_weighted(&spectrum, n)?;
            let step = 1.0 / spectrum.max_energy();
            Ok((n, gram_offset(&state, step, k).norm()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(scaling_report(ScalingQuantity::OffsetOverlap, c, k, samples))
}

/// `sum delta_n^2` over `power_law(N + 1, c, 1)` for each `N` in `n_list`.
pub fn delta_sq_scaling(c: f64, n_list: &[usize]) -> Result<ScalingReport> {
    check_n_list(n_list)?;
    let samples = n_list
        .iter()
        .map(|&n| Ok((n, sum_delta_sq(&Spectrum::power_law(n + 1, c, 1.0)?, n)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(scaling_report(ScalingQuantity::DeltaSq, c, 0, samples))
}
