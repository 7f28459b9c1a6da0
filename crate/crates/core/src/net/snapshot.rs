//! PF-PC weight snapshots for inspection and warm starts.
//!
//! Binary layout, all little-endian:
//!
//! | offset | size        | content                         |
//! |--------|-------------|---------------------------------|
//! | 0      | 8           | magic `b"PFPCW001"`             |
//! | 8      | 4           | `u32` number of parallel fibres |
//! | 12     | 4           | `u32` number of Purkinje cells  |
//! | 16     | 8·n_pf·n_pc | `f64` weights, fibre-major      |
//!
//! The CSV form has the header `pf_id,pc_id,weight` and one row per synapse
//! in the same order.

use std::io::{BufRead, BufReader, Read, Write};

use super::plasticity::PfPcWeights;
use super::NetError;

pub const MAGIC: &[u8; 8] = b"PFPCW001";

pub fn write_binary<W: Write>(weights: &PfPcWeights, mut out: W) -> Result<(), NetError> {
    out.write_all(MAGIC)?;
    out.write_all(&(weights.n_pf() as u32).to_le_bytes())?;
    out.write_all(&(weights.n_pc() as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(weights.n_pc() * 8);
    for pf in 0..weights.n_pf() {
        buf.clear();
        for w in weights.row(pf) {
            buf.extend_from_slice(&w.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<PfPcWeights, NetError> {
    let mut head = [0u8; 16];
    input.read_exact(&mut head)?;
    if &head[..8] != MAGIC {
        return Err(NetError::Snapshot("bad magic".into()));
    }
    let n_pf = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let n_pc = u32::from_le_bytes(head[12..16].try_into().unwrap()) as usize;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != n_pf * n_pc * 8 {
        return Err(NetError::Snapshot(format!("expected {} weight bytes, found {}", n_pf * n_pc * 8, bytes.len())));
    }
    let w = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    PfPcWeights::from_vec(n_pf, n_pc, w)
}

pub fn write_csv<W: Write>(weights: &PfPcWeights, mut out: W) -> Result<(), NetError> {
    writeln!(out, "pf_id,pc_id,weight")?;
    for pf in 0..weights.n_pf() {
        for (pc, w) in weights.row(pf).iter().enumerate() {
            writeln!(out, "{pf},{pc},{w}")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Read a CSV snapshot into a store of the given shape. Rows may come in any
/// order; synapses absent from the file keep `fill`.
pub fn read_csv<R: Read>(input: R, n_pf: usize, n_pc: usize, fill: f64) -> Result<PfPcWeights, NetError> {
    let mut weights = PfPcWeights::filled(n_pf, n_pc, fill);
    for (lineno, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let bad = || NetError::Snapshot(format!("line {}: malformed row {line:?}", lineno + 1));
        let mut parts = line.split(',');
        let pf: usize = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        let pc: usize = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        let w: f64 = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        if pf >= n_pf || pc >= n_pc {
            return Err(NetError::Snapshot(format!("line {}: synapse ({pf}, {pc}) out of range", lineno + 1)));
        }
        weights.set(pf, pc, w);
    }
    Ok(weights)
}
