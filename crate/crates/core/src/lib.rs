//! Speed limits of quantum evolution on discrete energy spectra.
//!
//! Builds the extremal states (two-level oscillator, uniform ladder cycles,
//! interval-weighted states, large-spread counterexamples), evolves them,
//! measures orthogonality times and checks them against the energy bound
//! `1/(4E)`, the spread bound `1/(4 dE)` and the cycle bounds. Also covers
//! Gram matrices of long orthogonal sequences, subsystem additivity, a
//! single-speed lattice gas and a direct search that tries to beat the
//! energy bound. Units throughout have `h = 1`.

pub mod composite;
pub mod error;
pub mod evolution;
pub mod latticegas;
pub mod optimizer;
pub mod report;
pub mod rng;
pub mod sequences;
pub mod spectrum;
pub mod state;

pub use error::{Error, Result};
pub use evolution::{bounds, first_orthogonality_time, overlap, BoundReport, OverlapTrace};
pub use spectrum::Spectrum;
pub use state::{EnergyStats, PureState};
