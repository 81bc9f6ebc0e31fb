//! Open quantum battery simulator.
//!
//! Battery–charger systems evolve under a Lindblad master equation or under
//! one of its continuous-measurement unravelings (photodetection jumps or
//! homodyne diffusion). From the resulting battery states the crate computes
//! stored energy, ergotropy, daemonic ergotropy (the ensemble average of
//! conditional ergotropies) and the daemonic efficiency.
//!
//! Module map:
//!
//! * [`hilbert`]: tensor-product spaces, partial trace, expectation values.
//! * [`models`]: cavity-mediated spin–spin battery and Dicke battery.
//! * [`lindblad`]: unconditional master-equation integration.
//! * [`trajectories`]: photodetection and homodyne quantum trajectories.
//! * [`thermo`]: energy, ergotropy, daemonic metrics.
//! * [`harness`]: configuration, experiments, sweeps, figure presets, output.

pub mod error;
pub mod harness;
pub mod hilbert;
pub mod lindblad;
pub mod models;
pub mod thermo;
pub mod trajectories;

pub use error::{Error, Result};
