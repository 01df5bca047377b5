//! Trace-driven simulator for a two-level write-back cache hierarchy with
//! selectable L2 error protection: a conventional dedicated ECC array, a
//! scheme that packs block ECC into reserved memory space cached by L2
//! itself, and a traffic-aware variant of the latter that skips the ECC work
//! for silent writes — write-backs whose data already matches the L2 copy.
//!
//! The crate measures what the schemes trade: L2 traffic, miss rates, energy,
//! and what faults survive. Everything is deterministic under a fixed seed.

pub mod block;
pub mod cache;
pub mod codec;
pub mod config;
pub mod energy;
pub mod engine;
pub mod fault;
pub mod mem;
pub mod protection;
pub mod stats;
pub mod trace;
pub mod workload;

pub use block::Block;
pub use cache::{Cache, CacheGeometry, SignatureCache};
pub use codec::{block_correct, block_ecc, parity_signature, secded_decode, secded_encode, BlockEcc, DecodeOutcome};
pub use config::{Scheme, SimConfig};
pub use energy::{account, EnergyCoefficients, EnergyReport};
pub use engine::{MemorySystem, RunOutcome, Simulation, SimulationReport};
pub use fault::{campaign, inject, CampaignParams, CampaignReport, InjectionMode, InjectionSpec, InjectionTarget, Outcome, OutcomeTally, TargetClass};
pub use mem::{EccGeometry, MemoryImage};
pub use stats::StatsReport;
pub use trace::{parse_trace, serialize_trace, TraceRecord};
pub use workload::{generate, GeneratorParams, GroundTruth};
