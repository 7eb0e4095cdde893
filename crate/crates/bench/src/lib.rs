//! Shared inputs for the criterion benchmarks.

use lfmm_core::synth::{generate_sbm, SbmConfig, SbmInstance};

/// Planted two-community benchmark graph of `n` nodes with `n / 20` sets.
pub fn instance(n: usize, seed: u64) -> SbmInstance {
    let cfg = SbmConfig {
        nodes: n,
        communities: 2,
        affinity: 0.05,
        mean_degree: 20.0,
        sets: (n / 20).max(2),
        mixing: 0.2,
        seed,
    };
    generate_sbm(&cfg).expect("benchmark configuration is feasible")
}
