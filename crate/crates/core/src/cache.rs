//! Set-associative, write-back, write-allocate cache with true LRU
//! replacement and a stored parity byte per line, plus the one-byte-per-line
//! signature cache that shadows L1.

use crate::block::{Block, BLOCK_BYTES};
use crate::codec::parity_signature;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CacheGeometry {
    pub capacity: usize,
    pub ways: usize,
    pub latency: u64,
}

impl CacheGeometry {
    pub fn new(capacity: usize, ways: usize, latency: u64) -> Self {
        let g = Self { capacity, ways, latency };
        let sets = g.sets();
        assert!(sets >= 1 && sets.is_power_of_two(), "sets must be a power of two, got {sets}");
        assert_eq!(capacity, sets * ways * BLOCK_BYTES);
        g
    }

    pub fn sets(&self) -> usize {
        self.capacity / (self.ways * BLOCK_BYTES)
    }

    pub fn index(&self, addr: u64) -> (u64, usize) {
        let blk = addr / BLOCK_BYTES as u64;
        (blk / self.sets() as u64, (blk % self.sets() as u64) as usize)
    }

    pub fn addr_of(&self, tag: u64, set: usize) -> u64 {
        (tag * self.sets() as u64 + set as u64) * BLOCK_BYTES as u64
    }
}

/// One cache line. `parity` is storage, not a derived value: it is written
/// when the line is filled or updated and faults may desynchronize it.
#[derive(Clone, Copy, Debug)]
pub struct Line {
    pub tag: u64,
    pub valid: bool,
    pub dirty: bool,
    pub lru_rank: usize,
    pub parity: u8,
    pub data: Block,
}

impl Line {
    fn empty(rank: usize) -> Self {
        Line { tag: 0, valid: false, dirty: false, lru_rank: rank, parity: 0, data: Block::zero() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Victim {
    pub addr: u64,
    pub set: usize,
    pub way: usize,
    pub dirty: bool,
    pub data: Block,
    pub parity: u8,
}

#[derive(Clone, Debug)]
pub struct Cache {
    pub geom: CacheGeometry,
    lines: Vec<Line>,
}

impl Cache {
    pub fn new(geom: CacheGeometry) -> Self {
        let sets = geom.sets();
        let mut lines = Vec::with_capacity(sets * geom.ways);
        for _ in 0..sets {
            for way in 0..geom.ways {
                lines.push(Line::empty(way));
            }
        }
        Cache { geom, lines }
    }

    pub fn line(&self, set: usize, way: usize) -> &Line {
        &self.lines[set * self.geom.ways + way]
    }

    pub fn line_mut(&mut self, set: usize, way: usize) -> &mut Line {
        &mut self.lines[set * self.geom.ways + way]
    }

    /// Hit iff a valid line with a matching tag exists. Does not touch LRU.
    pub fn lookup(&self, addr: u64) -> Option<(usize, usize)> {
        let (tag, set) = self.geom.index(addr);
        (0..self.geom.ways)
            .find(|&w| {
                let l = self.line(set, w);
                l.valid && l.tag == tag
            })
            .map(|w| (set, w))
    }

    /// Install `addr` as MRU, evicting the LRU line if the set is full.
    /// Returns the evicted victim, and the way the new line occupies.
    pub fn fill(&mut self, addr: u64, data: Block, dirty: bool) -> (Option<Victim>, usize) {
        assert!(self.lookup(addr).is_none(), "fill of resident address {addr:#x}");
        let (tag, set) = self.geom.index(addr);
        let way = (0..self.geom.ways)
            .find(|&w| !self.line(set, w).valid)
            .unwrap_or_else(|| {
                (0..self.geom.ways)
                    .max_by_key(|&w| self.line(set, w).lru_rank)
                    .unwrap()
            });
        let old = *self.line(set, way);
        let victim = old.valid.then(|| Victim {
            addr: self.geom.addr_of(old.tag, set),
            set,
            way,
            dirty: old.dirty,
            data: old.data,
            parity: old.parity,
        });
        *self.line_mut(set, way) = Line {
            tag,
            valid: true,
            dirty,
            lru_rank: old.lru_rank,
            parity: parity_signature(&data),
            data,
        };
        self.touch(set, way);
        (victim, way)
    }

    /// Move (set, way) to MRU.
    pub fn touch(&mut self, set: usize, way: usize) {
        let old_rank = self.line(set, way).lru_rank;
        for w in 0..self.geom.ways {
            let r = self.line(set, w).lru_rank;
            if r < old_rank {
                self.line_mut(set, w).lru_rank = r + 1;
            }
        }
        self.line_mut(set, way).lru_rank = 0;
    }

    /// Replace the line's data, recompute stored parity, set the dirty flag.
    pub fn write_line(&mut self, set: usize, way: usize, data: Block, dirty: bool) {
        let line = self.line_mut(set, way);
        assert!(line.valid, "write to invalid line ({set},{way})");
        line.data = data;
        line.parity = parity_signature(&data);
        line.dirty = dirty;
    }

    pub fn read_line(&self, set: usize, way: usize) -> &Line {
        let line = self.line(set, way);
        assert!(line.valid, "read of invalid line ({set},{way})");
        line
    }

    /// Drop the line, returning its last contents.
    pub fn invalidate(&mut self, set: usize, way: usize) -> Line {
        let old = *self.line(set, way);
        assert!(old.valid, "invalidate of invalid line ({set},{way})");
        self.line_mut(set, way).valid = false;
        self.line_mut(set, way).dirty = false;
        old
    }

    pub fn valid_lines(&self) -> impl Iterator<Item = (usize, usize, &Line)> {
        self.lines.iter().enumerate().filter_map(move |(i, l)| {
            l.valid.then_some((i / self.geom.ways, i % self.geom.ways, l))
        })
    }

    #[cfg(test)]
    fn assert_lru_permutation(&self) {
        for set in 0..self.geom.sets() {
            let mut seen = vec![false; self.geom.ways];
            for way in 0..self.geom.ways {
                let r = self.line(set, way).lru_rank;
                assert!(!seen[r], "duplicate rank {r} in set {set}");
                seen[r] = true;
            }
        }
    }
}

/// One byte per L1 frame, holding the fill-time signature of the resident
/// block. Initialized to 0x00.
#[derive(Clone, Debug)]
pub struct SignatureCache {
    sets: usize,
    ways: usize,
    bytes: Vec<u8>,
}

impl SignatureCache {
    pub fn new(sets: usize, ways: usize) -> Self {
        SignatureCache { sets, ways, bytes: vec![0; sets * ways] }
    }

    pub fn read(&self, set: usize, way: usize) -> u8 {
        assert!(set < self.sets && way < self.ways);
        self.bytes[set * self.ways + way]
    }

    pub fn write(&mut self, set: usize, way: usize, sig: u8) {
        assert!(set < self.sets && way < self.ways);
        self.bytes[set * self.ways + way] = sig;
    }
}
