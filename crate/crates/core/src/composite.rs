//! Non-interacting subsystems and the rest-frame state count.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;
use crate::state::PureState;

/// Relative tolerance for merging equal sums of energies.
pub const MERGE_TOLERANCE: f64 = 1e-12;

/// Product of independent subsystem states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductState {
    pub parts: Vec<PureState>,
    /// State over the sum-spectrum with product weights, equal sums merged.
    pub combined: PureState,
}

impl ProductState {
    /// Rate bound `2 E_tot` of the combined system (`h = 1`).
    pub fn rate_bound(&self) -> f64 {
        2.0 * self.combined.energy_stats().mean
    }

    /// Rate bounds `2 E^(s)` of the parts.
    pub fn part_rate_bounds(&self) -> Vec<f64> {
        self.parts
            .iter()
            .map(|p| 2.0 * p.energy_stats().mean)
            .collect()
    }
}

fn all_sums(parts: &[&[f64]]) -> Vec<Vec<usize>> {
    let mut tuples: Vec<Vec<usize>> = vec![Vec::new()];
    for levels in parts {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                (0..levels.len()).map(move |i| {
                    let mut next = t.clone();
                    next.push(i);
                    next
                })
            })
            .collect();
    }
    tuples
}

pub fn compose(parts: Vec<PureState>) -> Result<ProductState> {
    if parts.len() < 2 {
        return Err(Error::param("parts", "need at least two subsystems"));
    }
    let energies: Vec<&[f64]> = parts.iter().map(|p| p.energies()).collect();
    let mut terms: Vec<(f64, f64)> = all_sums(&energies)
        .into_iter()
        .map(|idx| {
            idx.iter().enumerate().fold((0.0, 1.0), |(e, w), (s, &i)| {
                (e + parts[s].energies()[i], w * parts[s].weights()[i])
            })
        })
        .collect();
    terms.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (e, w) in terms {
        match merged.last_mut() {
            Some(last) if (e - last.0).abs() <= MERGE_TOLERANCE * e.abs().max(1.0) => last.1 += w,
            _ => merged.push((e, w)),
        }
    }
    let levels: Vec<f64> = merged.iter().map(|m| m.0).collect();
    let spectrum = Spectrum::from_list(&levels)?.with_label(format!("product of {} parts", parts.len()));
    let combined = PureState::new(spectrum, merged.iter().map(|m| m.1).collect())?;
    Ok(ProductState { parts, combined })
}

/// All tuple sums of the given spectra, degeneracies kept.
pub fn sum_spectrum(spectra: &[&Spectrum]) -> Result<Spectrum> {
    if spectra.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let energies: Vec<&[f64]> = spectra.iter().map(|s| s.energies()).collect();
    let sums: Vec<f64> = all_sums(&energies)
        .into_iter()
        .map(|idx| idx.iter().enumerate().map(|(s, &i)| energies[s][i]).sum())
        .collect();
    Ok(Spectrum::from_list(&sums)?.with_label(format!("sum of {} spectra", spectra.len())))
}

/// Bound `2 (E t - p x)` on the number of orthogonal states counted in the
/// rest frame, for a system starting at the origin and moving along `+x`
/// with momentum magnitude `p` (`h = 1`).
pub fn frame_adjusted_count(energy: f64, time: f64, momentum: f64, displacement: f64) -> f64 {
    2.0 * (energy * time - momentum * displacement)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_two_level_pair() {
        let a = PureState::two_level(1.0).unwrap();
        let ps = compose(vec![a.clone(), a]).unwrap();
        assert_eq!(ps.combined.energies(), &[0.0, 2.0, 4.0]);
        assert_eq!(ps.combined.weights(), &[0.25, 0.5, 0.25]);
        assert_eq!(ps.combined.energy_stats().mean, 2.0);
    }

    #[test]
    fn compose_means_add() {
        let a = PureState::two_level(1.0).unwrap();
        let b = PureState::uniform_cycle(4, 1.0).unwrap();
        let ps = compose(vec![a, b]).unwrap();
        assert!((ps.combined.energy_stats().mean - 2.5).abs() < 1e-12);
        let parts: f64 = ps.part_rate_bounds().iter().sum();
        assert!((ps.rate_bound() - parts).abs() < 1e-12);
    }

    #[test]
    fn compose_needs_two_parts() {
        assert!(compose(vec![PureState::two_level(1.0).unwrap()]).is_err());
        assert!(compose(vec![]).is_err());
    }

    #[test]
    fn compose_merges_float_sums() {
        let a = PureState::new(Spectrum::from_list(&[0.0, 0.1, 0.3]).unwrap(), vec![0.2, 0.3, 0.5]).unwrap();
        let b = PureState::new(Spectrum::from_list(&[0.0, 0.2]).unwrap(), vec![0.5, 0.5]).unwrap();
        let ps = compose(vec![a, b]).unwrap();
        // 0.1 + 0.2 and 0.3 + 0.0 land in one level
        assert_eq!(ps.combined.spectrum().len(), 5);
    }

    #[test]
    fn sum_spectrum_keeps_multiplicity() {
        let s = Spectrum::harmonic(3, 1.0).unwrap();
        let sum = sum_spectrum(&[&s, &s]).unwrap();
        assert_eq!(sum.energies(), &[0.0, 1.0, 1.0, 2.0, 2.0, 2.0, 3.0, 3.0, 4.0]);
    }

    #[test]
    fn frame_count_examples() {
        assert_eq!(frame_adjusted_count(1.0, 1.0, 0.0, 0.0), 2.0);
        assert_eq!(frame_adjusted_count(1.0, 1.0, 1.0, 0.25), 1.5);
        assert_eq!(frame_adjusted_count(1.0, 1.0, 1.0, 0.5), 1.0);
        assert_eq!(frame_adjusted_count(2.0, 3.0, 0.0, 7.0), 12.0);
    }
}
