//! Shared fixtures for the criterion benchmarks.

use tccsim_core::{generate, GeneratorParams, Scheme, SimConfig, TraceRecord};

pub fn bench_config(scheme: Scheme) -> SimConfig {
    SimConfig {
        scheme,
        l1_capacity: 16 * 1024,
        l1_ways: 4,
        l2_capacity: 256 * 1024,
        l2_ways: 8,
        ..SimConfig::default()
    }
}

pub fn bench_trace(n_ops: usize) -> Vec<TraceRecord> {
    let params = GeneratorParams {
        n_ops,
        working_set_blocks: 1024,
        write_ratio: 0.4,
        silent_fraction: 0.37,
        seed: 0xbe,
        base_addr: 0,
        l1_capacity: 16 * 1024,
        l1_ways: 4,
    };
    generate(&params).expect("fixed parameters are valid").0
}
