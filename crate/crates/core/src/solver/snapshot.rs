//! Binary snapshots and diagnostic series.
//!
//! Snapshot layout, little-endian: the magic `GSQG1`, `u32 N`, `f64 L`,
//! `f64 t`, `f64 β`, then `N²` physical samples in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::spectral::{Field, TorusGrid};

pub const SNAPSHOT_MAGIC: &[u8; 5] = b"GSQG1";

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub beta: f64,
    pub field: Field,
}

pub fn encode_snapshot(field: &Field, time: f64, beta: f64) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(29 + 8 * grid.len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&grid.length().to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    out.extend_from_slice(&beta.to_le_bytes());
    for v in field.physical() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_snapshot(mut bytes: &[u8]) -> Result<Snapshot, SolverError> {
    let format = |m: &str| SolverError::Format(m.to_string());
    let mut take = |k: usize| -> Result<&[u8], SolverError> {
        if bytes.len() < k {
            return Err(format("truncated snapshot"));
        }
        let (head, tail) = bytes.split_at(k);
        bytes = tail;
        Ok(head)
    };
    if take(5)? != SNAPSHOT_MAGIC {
        return Err(format("bad snapshot magic"));
    }
    let n = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
    let mut f64_at = || -> Result<f64, SolverError> { Ok(f64::from_le_bytes(take(8)?.try_into().expect("8 bytes"))) };
    let length = f64_at()?;
    let time = f64_at()?;
    let beta = f64_at()?;
    let grid = TorusGrid::new(n, length)?;
    let samples = (0..grid.len()).map(|_| f64_at()).collect::<Result<Vec<_>, _>>()?;
    if !bytes.is_empty() {
        return Err(format("trailing bytes after snapshot samples"));
    }
    Ok(Snapshot {
        time,
        beta,
        field: Field::from_physical(grid, samples)?,
    })
}

pub fn write_snapshot(path: &Path, field: &Field, time: f64, beta: f64) -> Result<(), SolverError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_snapshot(field, time, beta))?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SolverError> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode_snapshot(&bytes)
}

/// One row of the diagnostic series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub time: f64,
    pub l1: f64,
    pub l2: f64,
    pub lp: f64,
    pub linf: f64,
    /// `Ḣ^{β/2−1}` norm of the fluctuation.
    pub h_neg1bh: f64,
    /// `Ḣ^{β/2−α}` norm of the fluctuation.
    pub hba: f64,
    /// `Ḣ⁰` norm of the fluctuation.
    pub h0: f64,
}

pub const DIAGNOSTICS_HEADER: &str = "time,L1,L2,Lp,Linf,Hneg1bh,Hba,H0";

/// CSV text with full round-trip precision.
pub fn diagnostics_csv(rows: &[DiagnosticRow]) -> String {
    let mut s = String::from(DIAGNOSTICS_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            r.time, r.l1, r.l2, r.lp, r.linf, r.h_neg1bh, r.hba, r.h0
        ));
    }
    s
}

pub fn parse_diagnostics_csv(text: &str) -> Result<Vec<DiagnosticRow>, SolverError> {
    let mut lines = text.lines();
    if lines.next() != Some(DIAGNOSTICS_HEADER) {
        return Err(SolverError::Format("missing diagnostics header".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let v = line
                .split(',')
                .map(|w| w.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| SolverError::Format(format!("row {}: {e}", i + 1)))?;
            if v.len() != 8 {
                return Err(SolverError::Format(format!("row {}: expected 8 columns", i + 1)));
            }
            Ok(DiagnosticRow {
                time: v[0],
                l1: v[1],
                l2: v[2],
                lp: v[3],
                linf: v[4],
                h_neg1bh: v[5],
                hba: v[6],
                h0: v[7],
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip() {
        let grid = TorusGrid::new(8, 3.0).unwrap();
        let f = Field::from_fn(grid, |x, y| (x - y).sin() + 0.25);
        let bytes = encode_snapshot(&f, 1.5, 0.5);
        assert_eq!(&bytes[..5], b"GSQG1");
        assert_eq!(bytes.len(), 5 + 4 + 24 + 8 * 64);
        let s = decode_snapshot(&bytes).unwrap();
        assert_eq!(s.time, 1.5);
        assert_eq!(s.beta, 0.5);
        assert_eq!(s.field.grid().length(), 3.0);
        assert_eq!(s.field.physical(), f.physical());
        assert!(decode_snapshot(&bytes[..40]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_snapshot(&bad).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            DiagnosticRow {
                time: 0.0,
                l1: 1.0 / 3.0,
                l2: 2.0,
                lp: 3.0,
                linf: 4.0,
                h_neg1bh: 5.0,
                hba: 6.0,
                h0: 7.0,
            };
            2
        ];
        let text = diagnostics_csv(&rows);
        assert!(text.starts_with("time,L1,L2,Lp,Linf,Hneg1bh,Hba,H0\n"));
        assert_eq!(parse_diagnostics_csv(&text).unwrap(), rows);
    }
}
