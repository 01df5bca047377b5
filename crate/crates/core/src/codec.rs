//! Error detection and correction codes: a byte-interleaved parity signature
//! for 64-byte blocks and an extended-Hamming (72,64) SEC-DED code per 64-bit
//! word.
//!
//! SEC-DED layout, fixed for interoperability: the 72-bit codeword occupies
//! positions 0..=71. Position 0 is the overall parity bit, positions
//! 1,2,4,8,16,32,64 hold the seven Hamming check bits, and the 64 data bits
//! fill the remaining positions in ascending order (data bit 0 at position 3).
//! Check bit 2^i is the XOR of every occupied position whose index has bit i
//! set; the overall parity bit is the XOR of the other 71 bits. The packed
//! check byte carries overall parity in bit 7 and checks 2^0..2^6 in bits
//! 0..6.

use serde::{Deserialize, Serialize};

use crate::block::{Block, BLOCK_WORDS};

/// Codeword positions of the 64 data bits, ascending (skips 0 and powers of two).
const DATA_POS: [usize; 64] = {
    let mut out = [0usize; 64];
    let mut pos = 1usize;
    let mut i = 0;
    while i < 64 {
        if pos & (pos - 1) != 0 {
            out[i] = pos;
            i += 1;
        }
        pos += 1;
    }
    out
};

/// For each of the 7 check bits, the mask of data bits it covers.
const CHECK_MASKS: [u64; 7] = {
    let mut masks = [0u64; 7];
    let mut i = 0;
    while i < 64 {
        let mut c = 0;
        while c < 7 {
            if DATA_POS[i] >> c & 1 == 1 {
                masks[c] |= 1 << i;
            }
            c += 1;
        }
        i += 1;
    }
    masks
};

/// Data-bit index for each codeword position, -1 for parity/check positions.
const POS_TO_DATA: [i8; 72] = {
    let mut out = [-1i8; 72];
    let mut i = 0;
    while i < 64 {
        out[DATA_POS[i]] = i as i8;
        i += 1;
    }
    out
};

/// Byte-interleaved parity: bit j of the result is the XOR over all 64 bytes
/// of each byte's bit j. Any single-bit flip in the block flips exactly one
/// signature bit.
pub fn parity_signature(block: &Block) -> u8 {
    block.0.iter().fold(0, |acc, b| acc ^ b)
}

pub fn secded_encode(word: u64) -> u8 {
    let mut check = 0u8;
    for (c, mask) in CHECK_MASKS.iter().enumerate() {
        check |= (((word & mask).count_ones() & 1) as u8) << c;
    }
    let overall = (word.count_ones() + (check as u32).count_ones()) & 1;
    check | (overall as u8) << 7
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DecodeOutcome {
    NoError,
    /// Exactly one codeword bit (at `position`) was inverted; `word` is the
    /// repaired data word.
    Corrected { position: u8, word: u64 },
    Uncorrectable,
}

pub fn secded_decode(word: u64, check: u8) -> DecodeOutcome {
    let fresh = secded_encode(word);
    let s = ((fresh ^ check) & 0x7f) as usize;
    let p = (word.count_ones() + (check as u32).count_ones()) & 1;
    match (s, p) {
        (0, 0) => DecodeOutcome::NoError,
        (0, 1) => DecodeOutcome::Corrected { position: 0, word },
        (_, 0) => DecodeOutcome::Uncorrectable,
        (s, _) if s > 71 => DecodeOutcome::Uncorrectable,
        (s, _) => {
            let word = match POS_TO_DATA[s] {
                -1 => word,
                i => word ^ 1u64 << i,
            };
            DecodeOutcome::Corrected { position: s as u8, word }
        }
    }
}

/// One check byte per 64-bit word of a block.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct BlockEcc(pub [u8; BLOCK_WORDS]);

pub fn block_ecc(block: &Block) -> BlockEcc {
    let mut checks = [0u8; BLOCK_WORDS];
    for (i, c) in checks.iter_mut().enumerate() {
        *c = secded_encode(block.word(i));
    }
    BlockEcc(checks)
}

/// Decode every word of `block` against `ecc`. Returns the repaired block and
/// the number of corrected words, or `None` if any word is uncorrectable.
pub fn block_correct(block: &Block, ecc: &BlockEcc) -> Option<(Block, u32)> {
    let mut out = *block;
    let mut corrected = 0;
    for i in 0..BLOCK_WORDS {
        match secded_decode(block.word(i), ecc.0[i]) {
            DecodeOutcome::NoError => {}
            DecodeOutcome::Corrected { word, .. } => {
                out.set_word(i, word);
                corrected += 1;
            }
            DecodeOutcome::Uncorrectable => return None,
        }
    }
    Some((out, corrected))
}
