//! Simulation configuration: cache geometries, latencies, protection scheme,
//! energy coefficients. Parsed from a flat `key=value` text file so an
//! experiment's full configuration diffs cleanly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::block::BLOCK_BYTES;
use crate::cache::CacheGeometry;
use crate::energy::EnergyCoefficients;
use crate::mem::{EccGeometry, ECC_GROUP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Conventional,
    Mmecc,
    Tcc,
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "conventional" => Ok(Scheme::Conventional),
            "mmecc" => Ok(Scheme::Mmecc),
            "tcc" => Ok(Scheme::Tcc),
            other => Err(format!("unknown scheme {other:?} (expected conventional|mmecc|tcc)")),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Conventional => "conventional",
            Scheme::Mmecc => "mmecc",
            Scheme::Tcc => "tcc",
        })
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scheme: Scheme,
    pub l1_capacity: usize,
    pub l1_ways: usize,
    pub l1_latency: u64,
    pub l2_capacity: usize,
    pub l2_ways: usize,
    pub l2_latency: u64,
    pub mem_latency: u64,
    pub ecc_region_base: u64,
    pub energy: EnergyCoefficients,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            scheme: Scheme::Tcc,
            l1_capacity: 64 * 1024,
            l1_ways: 4,
            l1_latency: 3,
            l2_capacity: 1024 * 1024,
            l2_ways: 8,
            l2_latency: 12,
            mem_latency: 512,
            ecc_region_base: 1 << 36,
            energy: EnergyCoefficients::default(),
        }
    }
}

fn parse_int(s: &str) -> Result<u64, String> {
    let r = match s.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    r.map_err(|_| format!("bad integer {s:?}"))
}

impl SimConfig {
    /// Parse `key=value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SimConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Parse { line: line_no, msg: format!("expected key=value, got {line:?}") })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|msg| ConfigError::Parse { line: line_no, msg })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let float = || value.parse::<f64>().map_err(|_| format!("bad number {value:?}"));
        match key {
            "scheme" => self.scheme = value.parse()?,
            "l1_capacity" => self.l1_capacity = parse_int(value)? as usize,
            "l1_ways" => self.l1_ways = parse_int(value)? as usize,
            "l1_latency" => self.l1_latency = parse_int(value)?,
            "l2_capacity" => self.l2_capacity = parse_int(value)? as usize,
            "l2_ways" => self.l2_ways = parse_int(value)? as usize,
            "l2_latency" => self.l2_latency = parse_int(value)?,
            "mem_latency" => self.mem_latency = parse_int(value)?,
            "ecc_region_base" => self.ecc_region_base = parse_int(value)?,
            "e_l2_access_conventional" => self.energy.e_l2_access_conventional = float()?,
            "e_l2_access_plain" => self.energy.e_l2_access_plain = float()?,
            "e_mem_access" => self.energy.e_mem_access = float()?,
            "e_sig_read" => self.energy.e_sig_read = float()?,
            "e_sig_write" => self.energy.e_sig_write = float()?,
            "e_sig_compare" => self.energy.e_sig_compare = float()?,
            "e_block_compare" => self.energy.e_block_compare = float()?,
            "e_ecc_compute" => self.energy.e_ecc_compute = float()?,
            "p_leak_conventional" => self.energy.p_leak_conventional = float()?,
            "p_leak_plain" => self.energy.p_leak_plain = float()?,
            "p_leak_sigcache" => self.energy.p_leak_sigcache = float()?,
            other => return Err(format!("unknown config key {other:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let geom_check = |name: &str, capacity: usize, ways: usize| {
            if ways == 0 || capacity == 0 || capacity % (ways * BLOCK_BYTES) != 0 {
                return Err(ConfigError::Invalid(format!(
                    "{name}: capacity {capacity} not divisible into {ways} ways of {BLOCK_BYTES}-byte blocks"
                )));
            }
            let sets = capacity / (ways * BLOCK_BYTES);
            if !sets.is_power_of_two() {
                return Err(ConfigError::Invalid(format!("{name}: {sets} sets, must be a power of two")));
            }
            Ok(sets)
        };
        geom_check("l1", self.l1_capacity, self.l1_ways)?;
        let l2_sets = geom_check("l2", self.l2_capacity, self.l2_ways)?;
        if l2_sets % ECC_GROUP != 0 {
            return Err(ConfigError::Invalid(format!("l2: {l2_sets} sets, must be divisible by {ECC_GROUP}")));
        }
        if self.ecc_region_base % BLOCK_BYTES as u64 != 0 {
            return Err(ConfigError::Invalid(format!(
                "ecc_region_base {:#x} not {BLOCK_BYTES}-byte aligned",
                self.ecc_region_base
            )));
        }
        self.energy.validate().map_err(ConfigError::Invalid)?;
        Ok(())
    }

    pub fn l1_geometry(&self) -> CacheGeometry {
        CacheGeometry::new(self.l1_capacity, self.l1_ways, self.l1_latency)
    }

    pub fn l2_geometry(&self) -> CacheGeometry {
        CacheGeometry::new(self.l2_capacity, self.l2_ways, self.l2_latency)
    }

    pub fn ecc_geometry(&self) -> EccGeometry {
        let g = self.l2_geometry();
        EccGeometry::new(self.ecc_region_base, g.sets(), g.ways)
    }
}
