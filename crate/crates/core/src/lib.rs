//! Simulation core for two bosonic impurities immersed in a harmonically
//! trapped one-dimensional Bose gas whose impurity trap is periodically shaken.
//!
//! Three solver backends share one model description:
//!
//! * [`meanfield`]: coupled Gross-Pitaevskii fields for bath and impurities,
//! * [`fewbody`]: numerically exact two-boson dynamics on a 2D grid,
//! * [`ci`]: a two-species configuration-interaction expansion over fixed
//!   orbitals, which is the backend that carries interspecies entanglement and
//!   fragmentation.
//!
//! [`observables`] turns any backend state into densities, coherence,
//! entropies and energies; [`analysis`] holds the damped-oscillator fit and
//! the post-processing helpers.
//!
//! Units: ħ = 1, lengths and times in the natural units of the transverse
//! confinement, so the default trap frequency is `0.3`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod ci;
pub mod error;
pub mod fewbody;
pub mod grid;
pub mod krylov;
pub mod meanfield;
pub mod model;
pub mod observables;

pub use num_complex::Complex64 as C64;

pub use analysis::{DampedParams, DrivenResponse, FitResult};
pub use ci::{CiState, CiSystem, FockSpace, OrbitalBasis};
pub use error::{Error, Result};
pub use fewbody::{FewBodyParams, FewBodySolver, TwoBodyState};
pub use grid::{GridSpec, SineTransform};
pub use meanfield::{MeanField, MfState};
pub use model::{DrivingMode, DrivingProtocol, Miscibility, MixtureModel, Species, SpeciesParams};
pub use observables::{
    DensityMatrix1B, DensityMatrix2B, EnergyTerms, Observe, ObservableRecord, ObservableSeries,
};

pub(crate) fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
