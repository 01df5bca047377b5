use serde::{Deserialize, Serialize};

pub const BLOCK_BYTES: usize = 64;
pub const BLOCK_WORDS: usize = 8;

/// One 64-byte cache block. Words are little-endian 8-byte lanes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block(#[serde(with = "serde_bytes_array")] pub [u8; BLOCK_BYTES]);

mod serde_bytes_array {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(data: &[u8; 64], ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&data.iter().map(|b| format!("{b:02x}")).collect::<String>())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<[u8; 64], D::Error> {
        let s = String::deserialize(de)?;
        if s.len() != 128 {
            return Err(D::Error::custom("block hex must be 128 digits"));
        }
        let mut out = [0u8; 64];
        for (i, chunk) in s.as_bytes().chunks(2).enumerate() {
            let hex = std::str::from_utf8(chunk).map_err(D::Error::custom)?;
            out[i] = u8::from_str_radix(hex, 16).map_err(D::Error::custom)?;
        }
        Ok(out)
    }
}

impl Default for Block {
    fn default() -> Self {
        Block([0u8; BLOCK_BYTES])
    }
}

impl std::fmt::Debug for Block {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Block(")?;
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

impl Block {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn word(&self, idx: usize) -> u64 {
        assert!(idx < BLOCK_WORDS);
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&self.0[idx * 8..idx * 8 + 8]);
        u64::from_le_bytes(bytes)
    }

    pub fn set_word(&mut self, idx: usize, value: u64) {
        assert!(idx < BLOCK_WORDS);
        self.0[idx * 8..idx * 8 + 8].copy_from_slice(&value.to_le_bytes());
    }

    pub fn from_words(words: [u64; BLOCK_WORDS]) -> Self {
        let mut b = Block::zero();
        for (i, w) in words.iter().enumerate() {
            b.set_word(i, *w);
        }
        b
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    /// Flip one bit. `bit` indexes the block in little-endian byte order:
    /// bit 0 is bit 0 of byte 0, bit 511 is bit 7 of byte 63.
    pub fn flip_bit(&mut self, bit: usize) {
        assert!(bit < BLOCK_BYTES * 8);
        self.0[bit / 8] ^= 1 << (bit % 8);
    }

    pub fn get_bit(&self, bit: usize) -> bool {
        assert!(bit < BLOCK_BYTES * 8);
        self.0[bit / 8] >> (bit % 8) & 1 == 1
    }
}
