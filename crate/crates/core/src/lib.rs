//! Positive-P phase-space simulation of a Schrödinger-cat state written into,
//! stored in, and read out of an optomechanical quantum memory.
//!
//! The pipeline is: [`sampler`] draws importance-weighted input samples,
//! [`sde`] integrates each trajectory through the write/store/read protocol,
//! [`ensemble`] runs many trajectories in parallel, and [`signatures`] turns
//! the weighted output amplitudes into quadrature distributions, Wigner
//! functions and density-matrix moduli. [`oracle`] holds the closed-form
//! master-equation results the simulation is checked against.

pub mod ensemble;
pub mod error;
pub mod grid;
pub mod mode;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod sde;
mod separable;
pub mod signatures;

pub use error::{Error, Result};
pub use grid::{Axis, AxisTag, GridField};
pub use model::{
    derive_rates, Branch, CatParams, DerivedRates, PhaseSpaceState, ProtocolSchedule,
    SystemParams, TrajectoryResult, WeightedSample,
};
