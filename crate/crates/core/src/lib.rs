//! Bootstrap percolation on the Hamming torus `[n]^d`.
//!
//! * [`torus`]: geometry, configurations, sampling, automorphisms.
//! * [`dynamics`]: the threshold growth rule and its fixed point.
//! * [`detectors`]: per-sample recognition of the `d = 3` spanning
//!   ingredients and the three-step line witness.
//! * [`analytics`]: closed-form limits, Poisson means and exact
//!   critical-exponent bounds.
//! * [`montecarlo`]: replicated estimation, sweeps and enumeration oracles.
//! * [`io`]: run configurations and result serialization.

pub mod analytics;
pub mod detectors;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod montecarlo;
pub mod rng;
pub mod torus;

pub use analytics::Rational;
pub use dynamics::{evolve, evolve_fast, DynamicsResult, LineCounters};
pub use error::{Error, Result};
pub use rng::{replica_rng, ReplicaRng};
pub use torus::{Automorphism, Configuration, LineId, PlaneId, TorusShape, Vertex};
