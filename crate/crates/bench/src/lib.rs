//! Shared fixtures for the engine benchmarks.

use hamming_boot::torus::sample_initial;
use hamming_boot::{replica_rng, Configuration, TorusShape};

/// A reproducible initial configuration at density `p`.
pub fn fixture(d: usize, n: usize, theta: usize, p: f64, seed: u64) -> Configuration {
    let shape = TorusShape::new(d, n, theta).expect("valid shape");
    sample_initial(shape, p, &mut replica_rng(seed, 0)).expect("valid density")
}
