//! Simulation and analysis of a two-state system watched by a quantum point
//! contact.
//!
//! The observed system (an electron shared between two dots, L and R) is
//! described by its density matrix, or equivalently its polarization vector.
//! Probing electrons hit a barrier whose transmission depends on the
//! system's state. This crate provides:
//!
//! - [`damping`]: the decoherence rate `D` and energy shift from the two
//!   barriers' scattering matrices;
//! - [`bloch`]: integration of the damped Bloch-like equation for `P`;
//! - [`trajectory`]: frozen-state sequence probabilities and a conditional
//!   (repeated-collapse) Monte Carlo producing transmission records;
//! - [`statistics`]: binomial-mixture count statistics, the brute-force
//!   enumeration oracle and the decoherence/fluctuation comparison;
//! - [`current`]: the same statistics expressed as current noise for a
//!   chosen averaging time;
//! - [`harness`]: JSON-configured experiments emitting CSV and JSON reports.

pub mod bloch;
pub mod current;
pub mod damping;
pub mod error;
pub mod harness;
pub mod rng;
pub mod statistics;
pub mod trajectory;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    density_to_polarization, polarization_to_density, BarrierPair, DensityMatrix2,
    DetectorConfig, HamiltonianVector, PolarizationVector, Regime, StreamId, TrajectoryRecord,
    VarianceReport,
};
