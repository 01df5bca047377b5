//! Event-count energy accounting. Dynamic energy is a weighted sum of event
//! counters; leakage is a per-scheme power multiplied by the AMAT cycle
//! count. Units are abstract: the shipped default coefficients are
//! placeholders proportional to storage-bit ratios, not technology-derived
//! figures, and only relative comparisons between schemes are meaningful.

use serde::{Deserialize, Serialize};

use crate::config::Scheme;
use crate::stats::StatsReport;

/// Per-event dynamic energies and per-cycle leakage powers.
///
/// `e_l2_access_conventional` applies to a conventional L2 whose array is
/// 72/64 wider (ECC co-stored); `e_l2_access_plain` to an mmecc/tcc L2 that
/// stores only a parity byte per line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyCoefficients {
    pub e_l2_access_conventional: f64,
    pub e_l2_access_plain: f64,
    pub e_mem_access: f64,
    pub e_sig_read: f64,
    pub e_sig_write: f64,
    pub e_sig_compare: f64,
    pub e_block_compare: f64,
    pub e_ecc_compute: f64,
    pub p_leak_conventional: f64,
    pub p_leak_plain: f64,
    pub p_leak_sigcache: f64,
}

impl Default for EnergyCoefficients {
    fn default() -> Self {
        EnergyCoefficients {
            e_l2_access_conventional: 1.125,
            e_l2_access_plain: 1.0,
            e_mem_access: 16.0,
            e_sig_read: 0.01,
            e_sig_write: 0.01,
            e_sig_compare: 0.01,
            e_block_compare: 0.05,
            e_ecc_compute: 0.2,
            p_leak_conventional: 0.001125,
            p_leak_plain: 0.001,
            p_leak_sigcache: 0.000001,
        }
    }
}

impl EnergyCoefficients {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("e_l2_access_conventional", self.e_l2_access_conventional),
            ("e_l2_access_plain", self.e_l2_access_plain),
            ("e_mem_access", self.e_mem_access),
            ("e_sig_read", self.e_sig_read),
            ("e_sig_write", self.e_sig_write),
            ("e_sig_compare", self.e_sig_compare),
            ("e_block_compare", self.e_block_compare),
            ("e_ecc_compute", self.e_ecc_compute),
            ("p_leak_conventional", self.p_leak_conventional),
            ("p_leak_plain", self.p_leak_plain),
            ("p_leak_sigcache", self.p_leak_sigcache),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("energy coefficient {name} must be non-negative, got {v}"));
            }
        }
        if self.e_l2_access_conventional < self.e_l2_access_plain {
            return Err("e_l2_access_conventional must be >= e_l2_access_plain".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub l2_access: f64,
    pub mem_access: f64,
    pub sig_read: f64,
    pub sig_write: f64,
    pub sig_compare: f64,
    pub block_compare: f64,
    pub ecc_compute: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub dynamic: f64,
    pub leakage: f64,
    pub total: f64,
    pub breakdown: EnergyBreakdown,
}

/// Energy for a completed run. `stats` must be finalized so `amat_cycles`
/// carries the cycle count that scales leakage.
pub fn account(stats: &StatsReport, coef: &EnergyCoefficients, scheme: Scheme) -> EnergyReport {
    let e_l2 = match scheme {
        Scheme::Conventional => coef.e_l2_access_conventional,
        Scheme::Mmecc | Scheme::Tcc => coef.e_l2_access_plain,
    };
    let sig_compares = stats.silent + stats.nonsilent_fast + stats.nonsilent_aliased;
    let breakdown = EnergyBreakdown {
        l2_access: stats.l2_accesses_total as f64 * e_l2,
        mem_access: (stats.memory_reads + stats.memory_writes) as f64 * coef.e_mem_access,
        sig_read: stats.sig_reads as f64 * coef.e_sig_read,
        sig_write: stats.sig_writes as f64 * coef.e_sig_write,
        sig_compare: sig_compares as f64 * coef.e_sig_compare,
        block_compare: stats.block_compares as f64 * coef.e_block_compare,
        ecc_compute: stats.ecc_computes as f64 * coef.e_ecc_compute,
    };
    let dynamic = breakdown.l2_access
        + breakdown.mem_access
        + breakdown.sig_read
        + breakdown.sig_write
        + breakdown.sig_compare
        + breakdown.block_compare
        + breakdown.ecc_compute;
    let p_leak = match scheme {
        Scheme::Conventional => coef.p_leak_conventional,
        Scheme::Mmecc => coef.p_leak_plain,
        Scheme::Tcc => coef.p_leak_plain + coef.p_leak_sigcache,
    };
    let leakage = p_leak * stats.amat_cycles as f64;
    EnergyReport { dynamic, leakage, total: dynamic + leakage, breakdown }
}
