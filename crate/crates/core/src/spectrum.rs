//! Discrete energy spectra.
//!
//! Energies are measured in units where Planck's constant is one, so an
//! energy is also a frequency. Every [`Spectrum`] is sorted and shifted so
//! that its ground level sits at exactly zero; degenerate levels are kept as
//! repeated entries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted, ground-shifted list of energy levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpectrum")]
pub struct Spectrum {
    label: String,
    energies: Vec<f64>,
}

/// On-disk form of a spectrum; normalization is applied when converting.
#[derive(Debug, Clone, Deserialize)]
pub(crate) struct RawSpectrum {
    #[serde(default)]
    pub(crate) label: String,
    pub(crate) energies: Vec<f64>,
}

impl TryFrom<RawSpectrum> for Spectrum {
    type Error = Error;

    fn try_from(raw: RawSpectrum) -> Result<Self> {
        Ok(Spectrum::from_list(&raw.energies)?.with_label(raw.label))
    }
}

impl Spectrum {
    /// Sorts `raw` and shifts it so that the minimum is zero.
    pub fn from_list(raw: &[f64]) -> Result<Self> {
        Ok(Self::from_list_with_order(raw)?.0)
    }

    /// Like [`Spectrum::from_list`], also returning the permutation used:
    /// level `i` of the result came from `raw[order[i]]`.
    pub fn from_list_with_order(raw: &[f64]) -> Result<(Self, Vec<usize>)> {
        if raw.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        if let Some((index, &value)) = raw.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteEnergy { index, value });
        }
        let mut order: Vec<usize> = (0..raw.len()).collect();
        // Stable sort keeps degenerate levels in input order.
        order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
        let ground = raw[order[0]];
        let energies = order.iter().map(|&i| raw[i] - ground).collect();
        Ok((
            Spectrum {
                label: String::new(),
                energies,
            },
            order,
        ))
    }

    /// Ladder `0, eps1, 2 eps1, ..., (count - 1) eps1`.
    pub fn harmonic(count: usize, eps1: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::param("count", "must be at least 1"));
        }
        if !(eps1.is_finite() && eps1 > 0.0) {
            return Err(Error::param("eps1", format!("must be positive, got {eps1}")));
        }
        Ok(Spectrum {
            label: format!("harmonic(N={count}, eps1={eps1})"),
            energies: (0..count).map(|n| n as f64 * eps1).collect(),
        })
    }

    /// Power-law density of states, `E_n = scale * n^c`.
    pub fn power_law(count: usize, exponent: f64, scale: f64) -> Result<Self> {
        if count < 2 {
            return Err(Error::param("count", "must be at least 2"));
        }
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::param(
                "c",
                format!("exponent must lie in (0, 1], got {exponent}"),
            ));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::param("scale", format!("must be positive, got {scale}")));
        }
        Ok(Spectrum {
            label: format!("power_law(N={count}, c={exponent}, scale={scale})"),
            energies: (0..count)
                .map(|n| scale * (n as f64).powf(exponent))
                .collect(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    /// Always false; a spectrum has at least its ground level.
    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn max_energy(&self) -> f64 {
        *self.energies.last().expect("spectrum is never empty")
    }

    /// Consecutive gaps `E_{n+1} - E_n`.
    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.energies.windows(2).map(|w| w[1] - w[0])
    }
}
