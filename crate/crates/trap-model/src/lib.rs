//! Simulation and numerical verification of heavy-tailed trap dynamics on
//! `Z^d` (`d >= 2`) and their fractional-kinetics scaling limit.
//!
//! The crate provides the quenched heavy-tailed environment, the embedded
//! random walk with its clock process, the limit objects (stable
//! subordinator, inverse, fractional-kinetics process, Mittag-Leffler and
//! aging functions), the coarse-graining of trajectories into scored parts,
//! lattice potential theory (free and killed Green's functions, hitting
//! probabilities), and the statistics used to verify all of it.

pub mod coarse;
pub mod env;
pub mod error;
pub mod export;
pub mod fd;
pub mod fk;
pub mod green;
pub mod lattice;
pub mod rng;
pub mod scales;
pub mod special;
pub mod stats;
pub mod subordinator;
pub mod traps;
pub mod walk;

pub use error::{Error, Result};
