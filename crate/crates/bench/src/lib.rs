//! Benchmark fixtures shared by the criterion targets.

use hubo_core::harness::{GeneratorConfig, Topology};
use hubo_core::{HuboInstance, SamplerConfig};

/// A generated heavy-hex patch instance with one SWAP layer.
pub fn patch_instance(n: usize, seed: u64) -> HuboInstance {
    let g = GeneratorConfig {
        topology: Topology::Patch,
        swap_layers: 1,
        s2q: 1,
        s3q: 2,
        sampler: SamplerConfig::cauchy(Some(7.0)),
        coloring_seed: None,
    };
    let layout = g.layout(n).expect("patch layout");
    g.instance(&layout, seed).expect("patch instance")
}
