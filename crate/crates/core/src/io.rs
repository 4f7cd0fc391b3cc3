//! On-disk formats.
//!
//! Binary layout shared by [`ForwardMatrix`] and [`StatVector`] files, all
//! integers and floats little-endian:
//!
//! ```text
//! magic    4 bytes   "LBFM" (forward matrix) or "LBSV" (statistics)
//! version  u32       1
//! hlen     u64       byte length of the JSON header
//! header   hlen      UTF-8 JSON object (dimensions + metadata)
//! payload            matrix: (N + 1) x u64 column pointers, nnz x u32 row
//!                    indices, nnz x f64 values; statistics: J K x f64
//! ```
//!
//! Floats are stored as raw IEEE-754 bits, so a round trip is bit-exact.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::phase_space::{ForwardMatrix, StatVector};
use crate::{Error, Result};

const MATRIX_MAGIC: &[u8; 4] = b"LBFM";
const STATS_MAGIC: &[u8; 4] = b"LBSV";
const VERSION: u32 = 1;

/// Provenance attached to matrix and statistics files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points_per_axis: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contexts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixHeader {
    rows: usize,
    cols: usize,
    nnz: usize,
    contexts: usize,
    outcomes: usize,
    metadata: Metadata,
}

#[derive(Debug, Serialize, Deserialize)]
struct StatsHeader {
    contexts: usize,
    outcomes: usize,
    metadata: Metadata,
}

fn write_header<W: Write, H: Serialize>(w: &mut W, magic: &[u8; 4], header: &H) -> Result<()> {
    let json = serde_json::to_vec(header)?;
    w.write_all(magic)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    Ok(())
}

fn read_header<R: Read, H: for<'de> Deserialize<'de>>(r: &mut R, magic: &[u8; 4]) -> Result<H> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let len = read_u64(r)? as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    Ok(serde_json::from_slice(&json)?)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn write_matrix<W: Write>(w: &mut W, matrix: &ForwardMatrix, metadata: &Metadata) -> Result<()> {
    let header = MatrixHeader {
        rows: matrix.rows(),
        cols: matrix.cols(),
        nnz: matrix.nnz(),
        contexts: matrix.contexts(),
        outcomes: matrix.outcomes(),
        metadata: metadata.clone(),
    };
    write_header(w, MATRIX_MAGIC, &header)?;
    let (col_ptr, row_idx, values) = matrix.raw_parts();
    let mut buf = Vec::with_capacity(col_ptr.len() * 8 + row_idx.len() * 12);
    col_ptr
        .iter()
        .for_each(|&p| buf.extend_from_slice(&(p as u64).to_le_bytes()));
    row_idx.iter().for_each(|&r| buf.extend_from_slice(&r.to_le_bytes()));
    values.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix<R: Read>(r: &mut R) -> Result<(ForwardMatrix, Metadata)> {
    let h: MatrixHeader = read_header(r, MATRIX_MAGIC)?;
    if h.rows != h.contexts * h.outcomes {
        return Err(Error::Format("row count disagrees with contexts x outcomes".into()));
    }
    let mut col_ptr = Vec::with_capacity(h.cols + 1);
    for _ in 0..=h.cols {
        col_ptr.push(read_u64(r)? as usize);
    }
    let mut row_idx = Vec::with_capacity(h.nnz);
    for _ in 0..h.nnz {
        row_idx.push(read_u32(r)?);
    }
    let values = read_f64s(r, h.nnz)?;
    let m = ForwardMatrix::from_raw_parts(h.contexts, h.outcomes, col_ptr, row_idx, values)?;
    Ok((m, h.metadata))
}

pub fn write_stats<W: Write>(w: &mut W, p: &StatVector, metadata: &Metadata) -> Result<()> {
    let header = StatsHeader {
        contexts: p.contexts(),
        outcomes: p.outcomes(),
        metadata: metadata.clone(),
    };
    write_header(w, STATS_MAGIC, &header)?;
    let mut buf = Vec::with_capacity(p.len() * 8);
    p.values().iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_stats<R: Read>(r: &mut R) -> Result<(StatVector, Metadata)> {
    let h: StatsHeader = read_header(r, STATS_MAGIC)?;
    let values = read_f64s(r, h.contexts * h.outcomes)?;
    Ok((StatVector::new(h.contexts, h.outcomes, values)?, h.metadata))
}

/// CSV with header `context,outcome,probability`; values in shortest
/// round-trip decimal form.
pub fn write_stats_csv<W: Write>(w: &mut W, p: &StatVector) -> Result<()> {
    writeln!(w, "context,outcome,probability")?;
    for (r, v) in p.values().iter().enumerate() {
        writeln!(w, "{},{},{}", r / p.outcomes(), r % p.outcomes(), v)?;
    }
    Ok(())
}

pub fn read_stats_csv<R: BufRead>(r: R) -> Result<StatVector> {
    let mut entries = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse_err = || Error::Format(format!("line {}: expected context,outcome,probability", n + 1));
        if f.len() != 3 {
            return Err(parse_err());
        }
        let j: usize = f[0].parse().map_err(|_| parse_err())?;
        let k: usize = f[1].parse().map_err(|_| parse_err())?;
        let v: f64 = f[2].parse().map_err(|_| parse_err())?;
        entries.push((j, k, v));
    }
    let contexts = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
    let outcomes = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
    if entries.len() != contexts * outcomes {
        return Err(Error::Format(
            "statistics CSV is not a full context x outcome table".into(),
        ));
    }
    let mut values = vec![f64::NAN; contexts * outcomes];
    for (j, k, v) in entries {
        values[j * outcomes + k] = v;
    }
    StatVector::new(contexts, outcomes, values)
}

/// Serde adapter storing `Vec<f64>` as shortest round-trip decimal strings.
pub mod float_strings {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse::<f64>().map_err(serde::de::Error::custom))
            .collect()
    }
}
