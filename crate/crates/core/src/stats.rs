//! Simulation counters and the derived summary metrics.

use serde::{Deserialize, Serialize};

/// Event counters accumulated by a run, plus derived metrics filled in by
/// [`StatsReport::finalize`]. Serialization order is the canonical report
/// order.
///
/// Counting conventions:
/// - `l2_reads`/`l2_writes` count data-array accesses only; tag probes are
///   free. `l2_accesses_total` is their sum.
/// - `l2_misses` counts demand-fetch misses (L1 fills that miss L2). Misses
///   on ECC-line fetches are visible in `ecc_line_installs` instead, so
///   `l2_miss_rate = l2_misses / l1_misses` shares a denominator meaning
///   across schemes.
/// - `ecc_line_extra_writes` counts slot updates on a resident ECC line;
///   `ecc_line_installs` counts fills of an absent one. Both cost one L2
///   write access.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub l1_reads: u64,
    pub l1_writes: u64,
    pub l1_misses: u64,
    pub l2_reads: u64,
    pub l2_writes: u64,
    pub l2_accesses_total: u64,
    pub l2_misses: u64,
    pub l1_writebacks: u64,
    pub silent: u64,
    pub nonsilent_fast: u64,
    pub nonsilent_aliased: u64,
    pub ecc_line_installs: u64,
    pub ecc_line_extra_writes: u64,
    pub memory_reads: u64,
    pub memory_writes: u64,
    pub corrected_dirty: u64,
    pub refetched_clean: u64,
    pub due_events: u64,
    pub sig_reads: u64,
    pub sig_writes: u64,
    pub block_compares: u64,
    pub ecc_computes: u64,
    pub silent_fraction: f64,
    pub l2_miss_rate: f64,
    pub amat_cycles: u64,
}

impl StatsReport {
    pub fn l2_read_access(&mut self) {
        self.l2_reads += 1;
        self.l2_accesses_total += 1;
    }

    pub fn l2_write_access(&mut self) {
        self.l2_writes += 1;
        self.l2_accesses_total += 1;
    }

    /// Compute the derived metrics from the counters and the three access
    /// latencies (L1, L2, memory).
    pub fn finalize(&mut self, lat_l1: u64, lat_l2: u64, lat_mem: u64) {
        self.silent_fraction = ratio(self.silent, self.l1_writebacks);
        self.l2_miss_rate = ratio(self.l2_misses, self.l1_misses);
        self.amat_cycles = (self.l1_reads + self.l1_writes) * lat_l1
            + self.l2_accesses_total * lat_l2
            + (self.memory_reads + self.memory_writes) * lat_mem;
    }

    /// Column headers for CSV output, in serialization order.
    pub fn csv_header() -> String {
        "l1_reads,l1_writes,l1_misses,l2_reads,l2_writes,l2_accesses_total,l2_misses,\
         l1_writebacks,silent,nonsilent_fast,nonsilent_aliased,ecc_line_installs,\
         ecc_line_extra_writes,memory_reads,memory_writes,corrected_dirty,refetched_clean,\
         due_events,sig_reads,sig_writes,block_compares,ecc_computes,silent_fraction,\
         l2_miss_rate,amat_cycles"
            .replace(' ', "")
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.l1_reads,
            self.l1_writes,
            self.l1_misses,
            self.l2_reads,
            self.l2_writes,
            self.l2_accesses_total,
            self.l2_misses,
            self.l1_writebacks,
            self.silent,
            self.nonsilent_fast,
            self.nonsilent_aliased,
            self.ecc_line_installs,
            self.ecc_line_extra_writes,
            self.memory_reads,
            self.memory_writes,
            self.corrected_dirty,
            self.refetched_clean,
            self.due_events,
            self.sig_reads,
            self.sig_writes,
            self.block_compares,
            self.ecc_computes,
            self.silent_fraction,
            self.l2_miss_rate,
            self.amat_cycles
        )
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}
