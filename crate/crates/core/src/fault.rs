//! Bit-flip injection into resident L2 lines and outcome campaigns.
//!
//! An injection XORs chosen bits into a line's stored data and/or its
//! per-line parity byte without touching tags, dirty bits, or signatures —
//! the protection machinery has to notice on its own. A campaign replays
//! one trace many times, each run injecting one fault at a random point
//! into a random eligible line, and classifies what became of it against
//! a fault-free golden run.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::block::BLOCK_WORDS;
use crate::config::SimConfig;
use crate::engine::{MemorySystem, Simulation};
use crate::trace::TraceRecord;

/// Which resident L2 lines an injection may land on. The first three select
/// data lines only; `Ecc` targets lines holding packed correction codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetClass {
    Clean,
    Dirty,
    Any,
    Ecc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectionMode {
    /// One random bit anywhere in the 512-bit block.
    Single,
    /// Two random bits in the same 64-bit word, in distinct byte lanes so
    /// the parity signature is guaranteed to see the damage.
    Double,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum InjectionTarget {
    Explicit { set: usize, way: usize },
    Random(TargetClass),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InjectionSpec {
    pub target: InjectionTarget,
    /// Bit offsets into the 512-bit block data, each < 512.
    pub data_bits: Vec<u16>,
    /// Bit offsets into the per-line parity byte, each < 8.
    pub parity_bits: Vec<u8>,
}

/// Flip the given bits in an L2 frame. Metadata is left alone.
pub fn inject_bits(sys: &mut MemorySystem, set: usize, way: usize, data_bits: &[u16], parity_bits: &[u8]) {
    let line = sys.l2.line_mut(set, way);
    assert!(line.valid, "injection into invalid frame ({set},{way})");
    for &bit in data_bits {
        assert!((bit as usize) < 8 * crate::block::BLOCK_BYTES, "data bit {bit} out of range");
        line.data.flip_bit(bit as usize);
    }
    for &bit in parity_bits {
        assert!(bit < 8, "parity bit {bit} out of range");
        line.parity ^= 1 << bit;
    }
}

fn eligible(sys: &MemorySystem, class: TargetClass) -> Vec<(usize, usize)> {
    sys.l2
        .valid_lines()
        .filter(|&(set, _, line)| {
            let is_ecc = sys.is_ecc_addr(sys.l2.geom.addr_of(line.tag, set));
            match class {
                TargetClass::Clean => !is_ecc && !line.dirty,
                TargetClass::Dirty => !is_ecc && line.dirty,
                TargetClass::Any => !is_ecc,
                TargetClass::Ecc => is_ecc,
            }
        })
        .map(|(set, way, _)| (set, way))
        .collect()
}

/// Resolve a spec against the current state and flip its bits. Returns the
/// frame hit, or None when no resident line matches a random target class.
pub fn inject(sys: &mut MemorySystem, spec: &InjectionSpec, rng: &mut impl Rng) -> Option<(usize, usize)> {
    let (set, way) = match spec.target {
        InjectionTarget::Explicit { set, way } => (set, way),
        InjectionTarget::Random(class) => {
            let candidates = eligible(sys, class);
            if candidates.is_empty() {
                return None;
            }
            candidates[rng.gen_range(0..candidates.len())]
        }
    };
    inject_bits(sys, set, way, &spec.data_bits, &spec.parity_bits);
    Some((set, way))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Detected on a dirty line and repaired from its correction code.
    CorrectedDirty,
    /// Detected on a clean line and replaced by a fresh copy from memory.
    RefetchedClean,
    /// Detected but uncorrectable.
    Due,
    /// Overwritten or discarded before anything read it.
    Masked,
    /// Escaped detection and changed the final memory image.
    Sdc,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeTally {
    pub corrected_dirty: u64,
    pub refetched_clean: u64,
    pub due: u64,
    pub masked: u64,
    pub sdc: u64,
}

impl OutcomeTally {
    fn add(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::CorrectedDirty => self.corrected_dirty += 1,
            Outcome::RefetchedClean => self.refetched_clean += 1,
            Outcome::Due => self.due += 1,
            Outcome::Masked => self.masked += 1,
            Outcome::Sdc => self.sdc += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.corrected_dirty + self.refetched_clean + self.due + self.masked + self.sdc
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CampaignParams {
    pub n_injections: usize,
    pub mode: InjectionMode,
    pub class: TargetClass,
    pub seed: u64,
}

/// One injection, replayable: where in the trace, which frame, which bits.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InjectionRecord {
    pub index: usize,
    /// Trace records executed before the fault was planted.
    pub position: usize,
    pub set: usize,
    pub way: usize,
    pub addr: u64,
    pub data_bits: Vec<u16>,
    pub parity_bits: Vec<u8>,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CampaignReport {
    pub params: CampaignParams,
    pub tally: OutcomeTally,
    pub records: Vec<InjectionRecord>,
}

fn draw_bits(mode: InjectionMode, rng: &mut impl Rng) -> Vec<u16> {
    match mode {
        InjectionMode::Single => vec![rng.gen_range(0..8 * crate::block::BLOCK_BYTES as u16)],
        InjectionMode::Double => {
            let word = rng.gen_range(0..BLOCK_WORDS as u16);
            let a = rng.gen_range(0..64u16);
            let b = loop {
                let b = rng.gen_range(0..64u16);
                if b % 8 != a % 8 {
                    break b;
                }
            };
            vec![word * 64 + a, word * 64 + b]
        }
    }
}

const SAMPLE_ATTEMPTS: usize = 200;

/// Run `params.n_injections` independent faulted replays of `trace` and
/// classify each against the fault-free run. Each replay starts from a
/// fresh system; injection points with no eligible target are resampled.
pub fn campaign(trace: &[TraceRecord], config: &SimConfig, params: &CampaignParams) -> Result<CampaignReport, String> {
    if trace.is_empty() {
        return Err("cannot inject into an empty trace".into());
    }
    let golden = Simulation::run(trace, config);
    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
    let mut tally = OutcomeTally::default();
    let mut records = Vec::with_capacity(params.n_injections);

    for index in 0..params.n_injections {
        let mut placed = None;
        for _ in 0..SAMPLE_ATTEMPTS {
            let position = rng.gen_range(1..=trace.len());
            let mut sys = MemorySystem::new(*config);
            sys.run(&trace[..position]);
            let candidates = eligible(&sys, params.class);
            if candidates.is_empty() {
                continue;
            }
            let (set, way) = candidates[rng.gen_range(0..candidates.len())];
            let data_bits = draw_bits(params.mode, &mut rng);
            inject_bits(&mut sys, set, way, &data_bits, &[]);
            let addr = sys.l2.geom.addr_of(sys.l2.line(set, way).tag, set);
            sys.run(&trace[position..]);
            sys.flush();
            placed = Some((position, set, way, addr, data_bits, sys));
            break;
        }
        let (position, set, way, addr, data_bits, sys) = placed.ok_or_else(|| {
            format!("no resident {:?} line found after {SAMPLE_ATTEMPTS} attempts", params.class)
        })?;

        let stats = sys.stats;
        let outcome = if stats.due_events > 0 {
            Outcome::Due
        } else if !sys.mem.same_data_below(&golden.image, sys.ecc_geom.ecc_region_base) {
            Outcome::Sdc
        } else if stats.corrected_dirty > 0 {
            Outcome::CorrectedDirty
        } else if stats.refetched_clean > 0 {
            Outcome::RefetchedClean
        } else {
            Outcome::Masked
        };
        tally.add(outcome);
        records.push(InjectionRecord {
            index,
            position,
            set,
            way,
            addr,
            data_bits,
            parity_bits: Vec::new(),
            outcome,
        });
    }

    Ok(CampaignReport { params: *params, tally, records })
}
