//! Flat main-memory model (sparse block store) and the mapping from an L2
//! cache frame to the memory address that holds its block-ECC.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};

use crate::block::{Block, BLOCK_BYTES};
use crate::codec::BlockEcc;

/// Sparse main memory. Unmapped blocks read as all-zero.
#[derive(Clone, Debug, Default)]
pub struct MemoryImage {
    blocks: BTreeMap<u64, Block>,
}

impl MemoryImage {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn read_block(&self, addr: u64) -> Block {
        assert_eq!(addr % BLOCK_BYTES as u64, 0, "unaligned block address {addr:#x}");
        self.blocks.get(&addr).copied().unwrap_or_default()
    }

    pub fn write_block(&mut self, addr: u64, block: Block) {
        assert_eq!(addr % BLOCK_BYTES as u64, 0, "unaligned block address {addr:#x}");
        self.blocks.insert(addr, block);
    }

    /// Iterate stored blocks in address order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &Block)> {
        self.blocks.iter().map(|(a, b)| (*a, b))
    }

    /// True if both images hold the same content below `limit`, treating
    /// absent and all-zero blocks as equal.
    pub fn same_data_below(&self, other: &Self, limit: u64) -> bool {
        let significant = |img: &Self| {
            img.blocks
                .iter()
                .filter(|(a, b)| **a < limit && !b.is_zero())
                .map(|(a, b)| (*a, *b))
                .collect::<Vec<_>>()
        };
        significant(self) == significant(other)
    }

    /// Binary dump: for each non-zero block in address order, an 8-byte
    /// little-endian address followed by the 64-byte payload.
    pub fn dump<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for (addr, block) in &self.blocks {
            if block.is_zero() {
                continue;
            }
            w.write_all(&addr.to_le_bytes())?;
            w.write_all(&block.0)?;
        }
        Ok(())
    }

    pub fn load<R: Read>(r: &mut R) -> io::Result<Self> {
        let mut img = Self::new();
        let mut record = [0u8; 8 + BLOCK_BYTES];
        loop {
            let mut filled = 0;
            while filled < record.len() {
                let n = r.read(&mut record[filled..])?;
                if n == 0 {
                    break;
                }
                filled += n;
            }
            if filled == 0 {
                return Ok(img);
            }
            if filled < record.len() {
                return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "truncated image record"));
            }
            let addr = u64::from_le_bytes(record[..8].try_into().unwrap());
            let mut block = Block::zero();
            block.0.copy_from_slice(&record[8..]);
            img.write_block(addr, block);
        }
    }
}

/// Geometry of the memory-mapped ECC region: eight 8-byte block-ECCs pack
/// into one 64-byte memory block, grouped as eight consecutive L2 sets at the
/// same way.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EccGeometry {
    pub ecc_region_base: u64,
    pub l2_sets: usize,
    pub l2_ways: usize,
}

pub const ECC_GROUP: usize = 8;

impl EccGeometry {
    pub fn new(ecc_region_base: u64, l2_sets: usize, l2_ways: usize) -> Self {
        assert_eq!(ecc_region_base % BLOCK_BYTES as u64, 0);
        assert_eq!(l2_sets % ECC_GROUP, 0, "l2_sets must be divisible by 8");
        Self { ecc_region_base, l2_sets, l2_ways }
    }

    /// Memory location of the block-ECC for L2 frame (set, way): the block
    /// address and the byte offset of the 8-byte slot within it.
    pub fn ecc_address(&self, set: usize, way: usize) -> (u64, usize) {
        assert!(set < self.l2_sets, "set {set} out of range");
        assert!(way < self.l2_ways, "way {way} out of range");
        let group = way * (self.l2_sets / ECC_GROUP) + set / ECC_GROUP;
        let block_addr = self.ecc_region_base + (BLOCK_BYTES * group) as u64;
        (block_addr, 8 * (set % ECC_GROUP))
    }

    /// Total bytes of block-ECC storage: 1/8 of the L2 data capacity.
    pub fn region_bytes(&self) -> u64 {
        (self.l2_sets * self.l2_ways * 8) as u64
    }
}

/// Read the 8-byte ECC slot for (set, way) out of `img`.
pub fn load_ecc_slot(img: &MemoryImage, geom: &EccGeometry, set: usize, way: usize) -> BlockEcc {
    let (addr, off) = geom.ecc_address(set, way);
    let block = img.read_block(addr);
    let mut ecc = BlockEcc::default();
    ecc.0.copy_from_slice(&block.0[off..off + 8]);
    ecc
}

/// Write the 8-byte ECC slot for (set, way), preserving the other seven
/// slots of the shared memory block.
pub fn store_ecc_slot(img: &mut MemoryImage, geom: &EccGeometry, set: usize, way: usize, ecc: &BlockEcc) {
    let (addr, off) = geom.ecc_address(set, way);
    let mut block = img.read_block(addr);
    block.0[off..off + 8].copy_from_slice(&ecc.0);
    img.write_block(addr, block);
}
