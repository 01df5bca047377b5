//! Synthetic trace generation with a controllable silent-write fraction.
//!
//! The generator runs a mirror of the L1 cache over the ops it emits. Each
//! residency of a block in the mirror is an episode: at its first store the
//! episode is drawn silent or non-silent. Silent episodes rewrite current
//! word values, so the eventual write-back equals the block stored in L2;
//! non-silent episodes write fresh, never-repeated values. Dirty mirror
//! evictions are the predicted write-backs, classified exactly (including
//! the signature comparison) into the returned ground truth.
//!
//! Predictions are exact as long as the engine's L2 never evicts a live
//! block under the L1, i.e. the working set plus its ECC lines fit L2.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::block::{Block, BLOCK_BYTES, BLOCK_WORDS};
use crate::cache::{Cache, CacheGeometry};
use crate::codec::parity_signature;
use crate::trace::TraceRecord;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub n_ops: usize,
    pub working_set_blocks: usize,
    pub write_ratio: f64,
    pub silent_fraction: f64,
    pub seed: u64,
    pub base_addr: u64,
    /// Geometry of the L1 the trace will run against; write-back pressure
    /// only exists if `working_set_blocks` exceeds its line count.
    pub l1_capacity: usize,
    pub l1_ways: usize,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            n_ops: 10_000,
            working_set_blocks: 1024,
            write_ratio: 0.3,
            silent_fraction: 0.37,
            seed: 1,
            base_addr: 0,
            l1_capacity: 64 * 1024,
            l1_ways: 4,
        }
    }
}

/// The generator's own bookkeeping of the write-backs its trace will cause.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub writebacks: u64,
    pub silent: u64,
    pub nonsilent_fast: u64,
    pub nonsilent_aliased: u64,
}

impl GroundTruth {
    pub fn silent_fraction(&self) -> f64 {
        if self.writebacks == 0 {
            0.0
        } else {
            self.silent as f64 / self.writebacks as f64
        }
    }
}

pub fn generate(params: &GeneratorParams) -> Result<(Vec<TraceRecord>, GroundTruth), String> {
    if params.working_set_blocks == 0 {
        return Err("working set must be at least 1 block".into());
    }
    for (name, v) in [("write_ratio", params.write_ratio), ("silent_fraction", params.silent_fraction)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(format!("{name} must be within [0,1], got {v}"));
        }
    }
    if params.base_addr % BLOCK_BYTES as u64 != 0 {
        return Err(format!("base_addr {:#x} not block aligned", params.base_addr));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
    let mut mirror = Cache::new(CacheGeometry::new(params.l1_capacity, params.l1_ways, 1));
    let mut current: HashMap<u64, Block> = HashMap::new();
    let mut settled: HashMap<u64, Block> = HashMap::new();
    let mut episode_silent: HashMap<u64, bool> = HashMap::new();
    let mut fresh = 0u64;
    let mut trace = Vec::with_capacity(params.n_ops);
    let mut gt = GroundTruth::default();

    let classify_eviction = |victim: &crate::cache::Victim,
                                 settled: &HashMap<u64, Block>,
                                 gt: &mut GroundTruth| {
        if !victim.dirty {
            return;
        }
        gt.writebacks += 1;
        let old = settled[&victim.addr];
        if victim.data == old {
            gt.silent += 1;
        } else if parity_signature(&victim.data) == parity_signature(&old) {
            gt.nonsilent_aliased += 1;
        } else {
            gt.nonsilent_fast += 1;
        }
    };

    for _ in 0..params.n_ops {
        let block_addr =
            params.base_addr + rng.gen_range(0..params.working_set_blocks as u64) * BLOCK_BYTES as u64;
        let word = rng.gen_range(0..BLOCK_WORDS);
        let is_write = rng.gen_bool(params.write_ratio);

        let (set, way) = match mirror.lookup(block_addr) {
            Some(sw) => sw,
            None => {
                let data = current.get(&block_addr).copied().unwrap_or_default();
                settled.insert(block_addr, data);
                episode_silent.remove(&block_addr);
                let (victim, way) = mirror.fill(block_addr, data, false);
                if let Some(v) = victim {
                    classify_eviction(&v, &settled, &mut gt);
                }
                (mirror.geom.index(block_addr).1, way)
            }
        };
        mirror.touch(set, way);

        let addr = block_addr + 8 * word as u64;
        if !is_write {
            trace.push(TraceRecord::Read { addr });
            continue;
        }

        let silent_episode = *episode_silent
            .entry(block_addr)
            .or_insert_with(|| rng.gen_bool(params.silent_fraction));
        let mut data = mirror.line(set, way).data;
        let value = if silent_episode {
            data.word(word)
        } else {
            fresh += 1;
            fresh
        };
        data.set_word(word, value);
        mirror.write_line(set, way, data, true);
        current.insert(block_addr, data);
        trace.push(TraceRecord::Write { addr, value });
    }

    Ok((trace, gt))
}
