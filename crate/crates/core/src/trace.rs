//! Line-oriented trace format: `R <hex-addr>` for reads, `W <hex-addr>
//! <16-hex-digit-value>` for writes. Addresses are 8-byte aligned; lines
//! starting with `#` are comments.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceRecord {
    Read { addr: u64 },
    Write { addr: u64, value: u64 },
}

impl TraceRecord {
    pub fn addr(&self) -> u64 {
        match self {
            TraceRecord::Read { addr } | TraceRecord::Write { addr, .. } => *addr,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("trace line {line}: {msg}")]
pub struct TraceError {
    pub line: usize,
    pub msg: String,
}

fn err(line: usize, msg: impl Into<String>) -> TraceError {
    TraceError { line, msg: msg.into() }
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, TraceError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let op = fields.next().unwrap();
        let addr_str = fields.next().ok_or_else(|| err(line_no, "missing address"))?;
        let addr = u64::from_str_radix(addr_str, 16)
            .map_err(|_| err(line_no, format!("bad hex address {addr_str:?}")))?;
        if addr % 8 != 0 {
            return Err(err(line_no, format!("address {addr:#x} not 8-byte aligned")));
        }
        let record = match op {
            "R" => {
                if fields.next().is_some() {
                    return Err(err(line_no, "trailing fields after read"));
                }
                TraceRecord::Read { addr }
            }
            "W" => {
                let val_str = fields.next().ok_or_else(|| err(line_no, "missing write value"))?;
                if val_str.len() != 16 {
                    return Err(err(line_no, format!("write value must be 16 hex digits, got {:?}", val_str)));
                }
                let value = u64::from_str_radix(val_str, 16)
                    .map_err(|_| err(line_no, format!("bad hex value {val_str:?}")))?;
                if fields.next().is_some() {
                    return Err(err(line_no, "trailing fields after write"));
                }
                TraceRecord::Write { addr, value }
            }
            other => return Err(err(line_no, format!("unknown op {other:?}"))),
        };
        out.push(record);
    }
    Ok(out)
}

pub fn serialize_trace(trace: &[TraceRecord]) -> String {
    let mut out = String::new();
    for rec in trace {
        match rec {
            TraceRecord::Read { addr } => out.push_str(&format!("R {addr:X}\n")),
            TraceRecord::Write { addr, value } => {
                out.push_str(&format!("W {addr:X} {value:016X}\n"))
            }
        }
    }
    out
}
