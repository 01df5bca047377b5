//! The three L2 protection schemes.
//!
//! All schemes detect errors with the per-line parity byte on L2 reads and
//! differ in where block-ECC lives and when it is written:
//!
//! - conventional: ECC in a dedicated array, updated alongside every
//!   write-back in the same access.
//! - mmecc: ECC stored at reserved memory addresses, cached in L2 as
//!   ordinary data lines; every write-back also updates the 8-byte slot.
//! - tcc: mmecc plus a signature check against the fill-time signature of
//!   the L1 line; a write-back whose block equals the stored L2 copy (a
//!   silent write) skips the data write and all ECC work.
//!
//! ECC lines themselves are exempt from parity/ECC checking, and only dirty
//! lines are trusted to have a live ECC slot: clean lines recover from
//! memory instead.

use crate::block::Block;
use crate::cache::Victim;
use crate::codec::{block_correct, block_ecc, parity_signature, BlockEcc};
use crate::config::Scheme;
use crate::engine::MemorySystem;
use crate::mem::{load_ecc_slot, ECC_GROUP};

impl MemorySystem {
    /// Read the L2 line at (set, way), verifying its parity. A mismatch on a
    /// clean line refetches from memory; on a dirty line the frame's ECC is
    /// fetched and the block corrected. An uncorrectable block is returned
    /// as-is with its stored parity resynchronized, so one fault records one
    /// DUE.
    pub fn l2_read_checked(&mut self, set: usize, way: usize) -> Block {
        self.stats.l2_read_access();
        let line = *self.l2.read_line(set, way);
        let addr = self.l2.geom.addr_of(line.tag, set);
        if self.is_ecc_addr(addr) || parity_signature(&line.data) == line.parity {
            return line.data;
        }
        if !line.dirty {
            self.stats.refetched_clean += 1;
            self.stats.memory_reads += 1;
            let fresh = self.mem.read_block(addr);
            self.stats.l2_write_access();
            self.l2.write_line(set, way, fresh, false);
            return fresh;
        }
        let ecc = self.fetch_frame_ecc(set, way);
        match block_correct(&line.data, &ecc) {
            Some((fixed, _)) => {
                self.stats.corrected_dirty += 1;
                self.stats.l2_write_access();
                self.l2.write_line(set, way, fixed, true);
                fixed
            }
            None => {
                self.stats.due_events += 1;
                self.l2.line_mut(set, way).parity = parity_signature(&line.data);
                line.data
            }
        }
    }

    /// The block-ECC protecting L2 frame (set, way), from the scheme's
    /// store: the dedicated array, the L2-resident ECC line, or memory.
    pub fn fetch_frame_ecc(&mut self, set: usize, way: usize) -> BlockEcc {
        if self.config.scheme == Scheme::Conventional {
            return self.ecc_store[set * self.l2.geom.ways + way];
        }
        let (ecc_addr, off) = self.ecc_geom.ecc_address(set, way);
        match self.l2.lookup(ecc_addr) {
            Some((es, ew)) => {
                self.stats.l2_read_access();
                self.l2.touch(es, ew);
                let mut ecc = BlockEcc::default();
                ecc.0.copy_from_slice(&self.l2.line(es, ew).data.0[off..off + 8]);
                ecc
            }
            None => {
                self.stats.memory_reads += 1;
                load_ecc_slot(&self.mem, &self.ecc_geom, set, way)
            }
        }
    }

    /// An L1 write-back of `data` for `addr`, arriving from L1 frame
    /// `l1_frame` (whose signature-cache entry still holds the fill-time
    /// signature). Inclusion guarantees the target is L2-resident.
    pub fn handle_writeback(&mut self, l1_frame: (usize, usize), addr: u64, data: Block) {
        self.stats.l1_writebacks += 1;
        let (set, way) = self
            .l2
            .lookup(addr)
            .unwrap_or_else(|| panic!("inclusion violated: write-back of {addr:#x} missed L2"));
        match self.config.scheme {
            Scheme::Conventional => {
                self.stats.l2_write_access();
                self.l2.write_line(set, way, data, true);
                self.l2.touch(set, way);
                self.ecc_store[set * self.l2.geom.ways + way] = block_ecc(&data);
                self.stats.ecc_computes += 1;
            }
            Scheme::Mmecc => self.write_with_ecc(set, way, data),
            Scheme::Tcc => {
                let sig_new = parity_signature(&data);
                let sig_old = self.sig.read(l1_frame.0, l1_frame.1);
                self.stats.sig_reads += 1;
                if sig_new != sig_old {
                    self.stats.nonsilent_fast += 1;
                    self.write_with_ecc(set, way, data);
                } else {
                    let old = self.l2_read_checked(set, way);
                    self.stats.block_compares += 1;
                    if old == data {
                        self.stats.silent += 1;
                        self.l2.touch(set, way);
                    } else {
                        self.stats.nonsilent_aliased += 1;
                        self.write_with_ecc(set, way, data);
                    }
                }
            }
        }
    }

    /// mmecc/tcc non-silent write: one L2 data write plus the ECC slot store.
    fn write_with_ecc(&mut self, set: usize, way: usize, data: Block) {
        self.stats.l2_write_access();
        self.l2.write_line(set, way, data, true);
        self.l2.touch(set, way);
        let ecc = block_ecc(&data);
        self.stats.ecc_computes += 1;
        self.store_block_ecc(set, way, &ecc);
    }

    /// Store the 8-byte block-ECC for data frame (set, way). If the ECC line
    /// is resident, one extra L2 write updates the slot. Otherwise the ECC
    /// block is installed as a dirty line: seeded from memory when another
    /// adjacent data block is dirty (its slot must survive), from zeros when
    /// not.
    pub fn store_block_ecc(&mut self, set: usize, way: usize, ecc: &BlockEcc) {
        let (ecc_addr, off) = self.ecc_geom.ecc_address(set, way);
        match self.l2.lookup(ecc_addr) {
            Some((es, ew)) => {
                let mut blk = self.l2.line(es, ew).data;
                blk.0[off..off + 8].copy_from_slice(&ecc.0);
                self.stats.l2_write_access();
                self.stats.ecc_line_extra_writes += 1;
                self.l2.write_line(es, ew, blk, true);
                self.l2.touch(es, ew);
            }
            None => {
                self.stats.ecc_line_installs += 1;
                let group_base = set / ECC_GROUP * ECC_GROUP;
                let adjacent_dirty = (group_base..group_base + ECC_GROUP).any(|s| {
                    if s == set {
                        return false;
                    }
                    let line = self.l2.line(s, way);
                    line.valid
                        && line.dirty
                        && !self.is_ecc_addr(self.l2.geom.addr_of(line.tag, s))
                });
                let mut blk = if adjacent_dirty {
                    self.stats.memory_reads += 1;
                    self.mem.read_block(ecc_addr)
                } else {
                    Block::zero()
                };
                blk.0[off..off + 8].copy_from_slice(&ecc.0);
                self.stats.l2_write_access();
                let (victim, _) = self.l2.fill(ecc_addr, blk, true);
                if let Some(v) = victim {
                    self.handle_l2_eviction(v);
                }
            }
        }
    }

    /// An L2 line departs. Any L1 copy is back-invalidated first; a dirty
    /// copy merges into the departing victim without further L2 or ECC
    /// activity, since the block leaves the cache immediately. Dirty victims
    /// are parity-verified (ECC lines excepted) and written to memory.
    pub fn handle_l2_eviction(&mut self, mut v: Victim) {
        if !self.is_ecc_addr(v.addr) {
            if let Some((ls, lw)) = self.l1.lookup(v.addr) {
                let copy = self.l1.invalidate(ls, lw);
                if copy.dirty {
                    self.merge_writeback((ls, lw), copy.data, &mut v);
                }
            }
        }
        if v.dirty {
            let data = if self.is_ecc_addr(v.addr) {
                v.data
            } else {
                self.verify_dirty_block(v.set, v.way, v.data, v.parity)
            };
            self.stats.memory_writes += 1;
            self.mem.write_block(v.addr, data);
        }
    }

    /// A write-back forced by back-invalidation. Classified for statistics
    /// under tcc (the compare runs against the victim buffer), but the data
    /// merges straight into the departing victim: no L2 array accesses, no
    /// ECC store.
    fn merge_writeback(&mut self, l1_frame: (usize, usize), data: Block, v: &mut Victim) {
        self.stats.l1_writebacks += 1;
        if self.config.scheme == Scheme::Tcc {
            let sig_new = parity_signature(&data);
            let sig_old = self.sig.read(l1_frame.0, l1_frame.1);
            self.stats.sig_reads += 1;
            if sig_new == sig_old {
                self.stats.block_compares += 1;
                if v.data == data {
                    self.stats.silent += 1;
                    return;
                }
                self.stats.nonsilent_aliased += 1;
            } else {
                self.stats.nonsilent_fast += 1;
            }
        }
        v.data = data;
        v.parity = parity_signature(&data);
        v.dirty = true;
    }

    /// Parity-check a dirty block leaving frame (set, way); on mismatch
    /// correct it via the frame's ECC, or record a DUE and let the corrupt
    /// data through.
    pub(crate) fn verify_dirty_block(&mut self, set: usize, way: usize, data: Block, parity: u8) -> Block {
        if parity_signature(&data) == parity {
            return data;
        }
        let ecc = self.fetch_frame_ecc(set, way);
        match block_correct(&data, &ecc) {
            Some((fixed, _)) => {
                self.stats.corrected_dirty += 1;
                fixed
            }
            None => {
                self.stats.due_events += 1;
                data
            }
        }
    }

    /// Sweeping validator: every valid dirty non-ECC L2 line must have its
    /// mapped 8-byte ECC slot equal to `block_ecc` of its current data,
    /// wherever the slot lives. Pure check, no counters.
    pub fn validate_dirty_ecc(&self) -> Result<(), String> {
        for (set, way, line) in self.l2.valid_lines() {
            let addr = self.l2.geom.addr_of(line.tag, set);
            if !line.dirty || self.is_ecc_addr(addr) {
                continue;
            }
            let expect = block_ecc(&line.data);
            let actual = match self.config.scheme {
                Scheme::Conventional => self.ecc_store[set * self.l2.geom.ways + way],
                Scheme::Mmecc | Scheme::Tcc => {
                    let (ecc_addr, off) = self.ecc_geom.ecc_address(set, way);
                    let mut slot = BlockEcc::default();
                    let blk = match self.l2.lookup(ecc_addr) {
                        Some((es, ew)) => self.l2.line(es, ew).data,
                        None => self.mem.read_block(ecc_addr),
                    };
                    slot.0.copy_from_slice(&blk.0[off..off + 8]);
                    slot
                }
            };
            if actual != expect {
                return Err(format!(
                    "dirty line {addr:#x} at ({set},{way}): slot {:02x?} != ecc {:02x?}",
                    actual.0, expect.0
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use crate::engine::Simulation;
    use crate::trace::{parse_trace, TraceRecord};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn toy_config(scheme: Scheme) -> SimConfig {
        SimConfig {
            scheme,
            l1_capacity: 2 * 64,
            l1_ways: 2,
            l2_capacity: 8 * 2 * 64,
            l2_ways: 2,
            ..SimConfig::default()
        }
    }

    fn sys_after(scheme: Scheme, text: &str) -> MemorySystem {
        let mut sys = MemorySystem::new(toy_config(scheme));
        sys.run(&parse_trace(text).unwrap());
        sys
    }

    #[test]
    fn first_install_in_group_starts_from_zeros() {
        let sys = sys_after(Scheme::Mmecc, "W 0 0000000000000001\nR 80\nR 100\n");
        let stats = sys.stats;
        assert_eq!(stats.ecc_line_installs, 1);
        assert_eq!(stats.ecc_line_extra_writes, 0);
        // no adjacent dirty data line existed, so no memory read beyond the
        // three demand fetches
        assert_eq!(stats.memory_reads, 3);
        sys.validate_dirty_ecc().unwrap();
    }

    #[test]
    fn second_adjacent_write_reuses_resident_ecc_line() {
        // 0x0 and 0x40 sit in adjacent L2 sets (same group, same way in an
        // otherwise empty cache); both write-backs happen via L1 conflicts
        let text = "W 0 0000000000000001\nR 80\nR 100\nW 40 0000000000000002\nR 80\nR 100\n";
        let sys = sys_after(Scheme::Mmecc, text);
        assert_eq!(sys.stats.ecc_line_installs, 1);
        assert_eq!(sys.stats.ecc_line_extra_writes, 1);
        sys.validate_dirty_ecc().unwrap();
    }

    #[test]
    fn evicted_ecc_line_is_reread_from_memory_when_group_still_dirty() {
        // force the ECC line out of the single-way L2 while a dirty adjacent
        // block remains, then write to another block of the same group
        let config = SimConfig {
            scheme: Scheme::Mmecc,
            l1_capacity: 2 * 64,
            l1_ways: 2,
            l2_capacity: 8 * 64,
            l2_ways: 1,
            ..SimConfig::default()
        };
        let mut sys = MemorySystem::new(config);
        // ECC region base maps to L2 set 0; 0x40 maps to set 1, 0x80 to set 2
        sys.run(&parse_trace("W 40 0000000000000001\nR 80\nR 100\n").unwrap());
        // write-back of 0x40 installed the ECC line at set 0
        assert_eq!(sys.stats.ecc_line_installs, 1);
        // now evict the ECC line by touching a block in set 0
        sys.run(&parse_trace("R 0\nR 80\n").unwrap());
        let before = sys.stats;
        assert!(sys.l2.lookup(sys.config.ecc_region_base).is_none(), "ECC line must be evicted");
        // dirty write-back of 0x80 (set 2): same group as still-dirty 0x40
        sys.run(&parse_trace("W 80 0000000000000002\nR C0\nR 140\n").unwrap());
        let delta_installs = sys.stats.ecc_line_installs - before.ecc_line_installs;
        assert_eq!(delta_installs, 1);
        assert!(sys.stats.memory_reads > before.memory_reads + 2, "install must reread the ECC block");
        sys.validate_dirty_ecc().unwrap();
    }

    #[test]
    fn injected_flip_in_clean_line_refetches() {
        let mut sys = sys_after(Scheme::Tcc, "R 0\n");
        let (s, w) = sys.l2.lookup(0).unwrap();
        sys.l2.line_mut(s, w).data.flip_bit(17);
        let data = sys.l2_read_checked(s, w);
        assert_eq!(data, Block::zero());
        assert_eq!(sys.stats.refetched_clean, 1);
        assert_eq!(sys.stats.corrected_dirty, 0);
        assert_eq!(sys.l2.line(s, w).data, Block::zero());
    }

    #[test]
    fn injected_flip_in_dirty_line_corrects() {
        for scheme in [Scheme::Conventional, Scheme::Mmecc, Scheme::Tcc] {
            let mut sys = sys_after(scheme, "W 0 00000000DEADBEEF\nR 80\nR 100\n");
            let (s, w) = sys.l2.lookup(0).unwrap();
            assert!(sys.l2.line(s, w).dirty);
            let good = sys.l2.line(s, w).data;
            sys.l2.line_mut(s, w).data.flip_bit(3);
            let data = sys.l2_read_checked(s, w);
            assert_eq!(data, good, "{scheme}");
            assert_eq!(sys.stats.corrected_dirty, 1);
            assert_eq!(sys.stats.refetched_clean, 0);
            assert_eq!(sys.stats.due_events, 0);
            sys.validate_dirty_ecc().unwrap();
        }
    }

    #[test]
    fn double_flip_in_dirty_word_is_due_once() {
        let mut sys = sys_after(Scheme::Tcc, "W 0 00000000DEADBEEF\nR 80\nR 100\n");
        let (s, w) = sys.l2.lookup(0).unwrap();
        sys.l2.line_mut(s, w).data.flip_bit(0);
        sys.l2.line_mut(s, w).data.flip_bit(9);
        sys.l2_read_checked(s, w);
        assert_eq!(sys.stats.due_events, 1);
        // parity was resynchronized: the next read does not recount the fault
        sys.l2_read_checked(s, w);
        assert_eq!(sys.stats.due_events, 1);
    }

    #[test]
    fn parity_byte_fault_repairs_to_same_data() {
        let mut sys = sys_after(Scheme::Mmecc, "W 0 00000000DEADBEEF\nR 80\nR 100\n");
        let (s, w) = sys.l2.lookup(0).unwrap();
        let good = sys.l2.line(s, w).data;
        sys.l2.line_mut(s, w).parity ^= 0x40;
        let data = sys.l2_read_checked(s, w);
        assert_eq!(data, good);
        assert_eq!(sys.stats.corrected_dirty, 1);
        assert_eq!(sys.l2.line(s, w).parity, parity_signature(&good));
    }

    #[test]
    fn validator_catches_a_planted_mismatch() {
        let mut sys = sys_after(Scheme::Mmecc, "W 0 00000000DEADBEEF\nR 80\nR 100\n");
        sys.validate_dirty_ecc().unwrap();
        let (s, w) = sys.l2.lookup(0).unwrap();
        sys.l2.line_mut(s, w).data.flip_bit(100);
        assert!(sys.validate_dirty_ecc().is_err());
    }

    #[test]
    fn validator_holds_after_every_step_of_a_random_trace() {
        let mut rng = StdRng::seed_from_u64(41);
        let mut trace = Vec::new();
        for _ in 0..2000 {
            let addr = rng.gen_range(0..48u64) * 8;
            if rng.gen_bool(0.5) {
                trace.push(TraceRecord::Read { addr });
            } else {
                trace.push(TraceRecord::Write { addr, value: rng.gen() });
            }
        }
        for scheme in [Scheme::Conventional, Scheme::Mmecc, Scheme::Tcc] {
            let mut sys = MemorySystem::new(toy_config(scheme));
            for rec in &trace {
                sys.step(rec);
                sys.validate_dirty_ecc().unwrap();
            }
            sys.flush();
            sys.validate_dirty_ecc().unwrap();
        }
    }

    #[test]
    fn random_traces_keep_images_equal_across_schemes() {
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..10 {
            let mut trace = Vec::new();
            for _ in 0..500 {
                let addr = rng.gen_range(0..64u64) * 8;
                if rng.gen_bool(0.4) {
                    trace.push(TraceRecord::Write { addr, value: rng.gen_range(0..4u64) });
                } else {
                    trace.push(TraceRecord::Read { addr });
                }
            }
            let base = SimConfig::default().ecc_region_base;
            let conv = Simulation::run(&trace, &toy_config(Scheme::Conventional));
            let mmecc = Simulation::run(&trace, &toy_config(Scheme::Mmecc));
            let tcc = Simulation::run(&trace, &toy_config(Scheme::Tcc));
            assert!(conv.image.same_data_below(&mmecc.image, base));
            assert!(conv.image.same_data_below(&tcc.image, base));
        }
    }
}
