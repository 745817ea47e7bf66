//! Pure states over a discrete spectrum.
//!
//! A state is stored as level weights `p_n = |c_n|^2` plus phases. The
//! survival amplitude and every bound in this crate depend on the weights
//! only; phases are carried so that time evolution has something to act on.

use rand::RngExt;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{RawSpectrum, Spectrum};

/// Weights below this are clamped to zero after construction.
pub const WEIGHT_CUTOFF: f64 = 1e-15;

/// Largest deviation of the weight sum from one accepted from callers.
/// The weights are renormalized afterwards.
pub const INPUT_NORM_TOLERANCE: f64 = 1e-6;

/// Tolerance on the mean energy produced by [`PureState::sample_fixed_energy`].
pub const ENERGY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawState")]
pub struct PureState {
    spectrum: Spectrum,
    weights: Vec<f64>,
    phases: Vec<f64>,
}

/// Mean energy and energy spread of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyStats {
    pub mean: f64,
    pub stddev: f64,
    /// Largest energy carrying nonzero weight.
    pub e_max_used: f64,
}

#[derive(Debug, Clone, Deserialize)]
struct RawState {
    spectrum: RawSpectrum,
    weights: Vec<f64>,
    #[serde(default)]
    phases: Option<Vec<f64>>,
}

impl TryFrom<RawState> for PureState {
    type Error = Error;

    fn try_from(raw: RawState) -> Result<Self> {
        let (spectrum, order) = Spectrum::from_list_with_order(&raw.spectrum.energies)?;
        let spectrum = spectrum.with_label(raw.spectrum.label);
        if raw.weights.len() != order.len() {
            return Err(Error::InvalidState(format!(
                "{} weights for {} levels",
                raw.weights.len(),
                order.len()
            )));
        }
        let weights = order.iter().map(|&i| raw.weights[i]).collect();
        let phases = match raw.phases {
            Some(p) if p.len() != order.len() => {
                return Err(Error::InvalidState(format!(
                    "{} phases for {} levels",
                    p.len(),
                    order.len()
                )))
            }
            Some(p) => order.iter().map(|&i| p[i]).collect(),
            None => vec![0.0; order.len()],
        };
        PureState::with_phases(spectrum, weights, phases)
    }
}

impl PureState {
    /// State with the given weights and zero phases.
    pub fn new(spectrum: Spectrum, weights: Vec<f64>) -> Result<Self> {
        let phases = vec![0.0; weights.len()];
        Self::with_phases(spectrum, weights, phases)
    }

    pub fn with_phases(spectrum: Spectrum, mut weights: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if weights.len() != spectrum.len() || phases.len() != spectrum.len() {
            return Err(Error::InvalidState(format!(
                "spectrum has {} levels but got {} weights and {} phases",
                spectrum.len(),
                weights.len(),
                phases.len()
            )));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < -WEIGHT_CUTOFF)
        {
            return Err(Error::InvalidState(format!("weight {i} is {w}")));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidState("phases must be finite".into()));
        }
        for w in weights.iter_mut() {
            if *w < WEIGHT_CUTOFF {
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > INPUT_NORM_TOLERANCE {
            return Err(Error::InvalidState(format!("weights sum to {total}, expected 1")));
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
        Ok(PureState {
            spectrum,
            weights,
            phases,
        })
    }

    /// All weight on one level of `spectrum`.
    pub fn eigenstate(spectrum: Spectrum, level: usize) -> Result<Self> {
        if level >= spectrum.len() {
            return Err(Error::param("level", format!("{level} out of range")));
        }
        let mut weights = vec![0.0; spectrum.len()];
        weights[level] = 1.0;
        Self::new(spectrum, weights)
    }

    /// Equal superposition of the ground level and the level at `2E`.
    /// Mean energy `E`, spread `E`; reaches an orthogonal state at `1/(4E)`.
    pub fn two_level(energy: f64) -> Result<Self> {
        if !(energy.is_finite() && energy > 0.0) {
            return Err(Error::param("E", format!("must be positive, got {energy}")));
        }
        let spectrum = Spectrum::from_list(&[0.0, 2.0 * energy])?
            .with_label(format!("two_level(E={energy})"));
        Self::new(spectrum, vec![0.5, 0.5])
    }

    /// Equal weights `1/N` on the first `N` rungs of a ladder with spacing `eps1`.
    pub fn uniform_cycle(count: usize, eps1: f64) -> Result<Self> {
        if count < 2 {
            return Err(Error::param("N", "cycle needs at least 2 states"));
        }
        let spectrum = Spectrum::harmonic(count, eps1)?;
        let w = 1.0 / count as f64;
        Self::new(spectrum, vec![w; count])
    }

    /// Weights proportional to the gap above each level:
    /// `p_n = (E_{n+1} - E_n) / E_N` for `n < N`.
    ///
    /// The returned state lives on the first `N + 1` levels of `spectrum`;
    /// level `N` carries zero weight but is kept so that `E_N` stays
    /// available as the spectrum maximum. Degenerate levels get weight zero.
    pub fn interval_weighted(spectrum: &Spectrum, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::param("N", "must be at least 1"));
        }
        if spectrum.len() < count + 1 {
            return Err(Error::param(
                "N",
                format!("needs {} levels, spectrum has {}", count + 1, spectrum.len()),
            ));
        }
        let levels = &spectrum.energies()[..=count];
        let top = levels[count];
        if top <= 0.0 {
            return Err(Error::Infeasible(
                "E_N is zero: all selected levels are degenerate with the ground".into(),
            ));
        }
        let mut weights: Vec<f64> = levels.windows(2).map(|w| (w[1] - w[0]) / top).collect();
        weights.push(0.0);
        let sub = Spectrum::from_list(levels)?
            .with_label(format!("interval_weighted(N={count}) over {}", spectrum.label()));
        Self::new(sub, weights)
    }

    /// Four-level state `a(|0> + |eps>) + b(|n eps> + |(n+1) eps>)` with mean
    /// energy exactly `E`. Its spread grows like `sqrt(n)` while its
    /// orthogonality time stays `1/(2 eps)`.
    pub fn big_delta(energy: f64, eps: f64, n: usize) -> Result<Self> {
        let (a2, b2) = big_delta_amplitudes(energy, eps, n)?;
        let n = n as f64;
        let spectrum = Spectrum::from_list(&[0.0, eps, n * eps, (n + 1.0) * eps])?
            .with_label(format!("big_delta(E={energy}, eps={eps}, n={n})"));
        Self::new(spectrum, vec![a2, a2, b2, b2])
    }

    /// Random state on `spectrum` with mean energy `energy`.
    ///
    /// Draws a flat Dirichlet point, then mixes it with a point mass on a
    /// randomly chosen level lying on the other side of the target energy,
    /// in the unique proportion that puts the mean on target. Deterministic
    /// per seed (xoshiro256++).
    pub fn sample_fixed_energy(spectrum: &Spectrum, energy: f64, seed: u64) -> Result<Self> {
        let top = spectrum.max_energy();
        if !(energy > 0.0 && energy < top) {
            return Err(Error::Infeasible(format!(
                "target energy {energy} not strictly inside (0, {top})"
            )));
        }
        let mut rng = crate::rng::from_seed(seed);
        let mut q: Vec<f64> = (0..spectrum.len()).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= total);
        let weights = mix_to_energy(spectrum.energies(), &q, energy, |m| rng.random_range(0..m))
            .expect("target energy is strictly inside the hull");
        let state = Self::new(spectrum.clone(), weights)?;
        debug_assert!((state.energy_stats().mean - energy).abs() <= ENERGY_TOLERANCE);
        Ok(state)
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn energies(&self) -> &[f64] {
        self.spectrum.energies()
    }

    /// `(energy, weight)` pairs with nonzero weight.
    pub fn support(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.energies()
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
            .filter(|&(_, w)| w > 0.0)
    }

    pub fn energy_stats(&self) -> EnergyStats {
        let mean: f64 = self.support().map(|(e, w)| w * e).sum();
        let var: f64 = self.support().map(|(e, w)| w * (e - mean) * (e - mean)).sum();
        let e_max_used = self.support().map(|(e, _)| e).fold(0.0, f64::max);
        EnergyStats {
            mean,
            stddev: var.max(0.0).sqrt(),
            e_max_used,
        }
    }

    pub(crate) fn with_new_phases(&self, phases: Vec<f64>) -> Self {
        PureState {
            spectrum: self.spectrum.clone(),
            weights: self.weights.clone(),
            phases,
        }
    }
}

/// Solves `2a^2 + 2b^2 = 1`, `a^2 eps + b^2 (2n + 1) eps = E`.
pub fn big_delta_amplitudes(energy: f64, eps: f64, n: usize) -> Result<(f64, f64)> {
    if !(energy.is_finite() && energy > 0.0) {
        return Err(Error::param("E", format!("must be positive, got {energy}")));
    }
    if !(eps > 0.0 && eps < 2.0 * energy) {
        return Err(Error::param(
            "eps",
            format!("need 0 < eps < 2E = {}, got {eps}", 2.0 * energy),
        ));
    }
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let upper_mean = (2 * n + 1) as f64 * eps / 2.0;
    if upper_mean <= energy {
        // smallest n with (2n + 1) eps / 2 > E
        let min_n = ((energy / eps - 0.5).floor() as usize + 1).max(1);
        return Err(Error::Infeasible(format!(
            "upper pair mean {upper_mean} does not exceed E = {energy}; need n >= {min_n}"
        )));
    }
    let b2 = (energy - eps / 2.0) / (2.0 * n as f64 * eps);
    Ok((0.5 - b2, b2))
}

/// Mixes the distribution `q` with a point mass on a level across the
/// target energy so that the mean becomes `target`. `pick(m)` chooses an
/// index in `0..m` among the candidate anchor levels. Returns `None` when
/// no level lies on the required side.
pub(crate) fn mix_to_energy(
    energies: &[f64],
    q: &[f64],
    target: f64,
    mut pick: impl FnMut(usize) -> usize,
) -> Option<Vec<f64>> {
    let mean: f64 = energies.iter().zip(q).map(|(e, w)| e * w).sum();
    if mean == target {
        return Some(q.to_vec());
    }
    let anchors: Vec<usize> = (0..energies.len())
        .filter(|&i| {
            if mean > target {
                energies[i] < target
            } else {
                energies[i] > target
            }
        })
        .collect();
    if anchors.is_empty() {
        return None;
    }
    let j = anchors[pick(anchors.len())];
    let lambda = (target - energies[j]) / (mean - energies[j]);
    let mut p: Vec<f64> = q.iter().map(|w| lambda * w).collect();
    p[j] += 1.0 - lambda;
    Some(p)
}
