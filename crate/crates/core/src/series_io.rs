//! Series files.
//!
//! Binary layout, all little-endian, 64-byte header then `n` f64 samples:
//!
//! | offset | size | field                                              |
//! |--------|------|----------------------------------------------------|
//! | 0      | 4    | magic `FRAC`                                       |
//! | 4      | 4    | version (u32): low 16 bits format version, high 16 bits flags |
//! | 8      | 8    | n (u64)                                            |
//! | 16     | 8    | dt                                                 |
//! | 24     | 8    | H                                                  |
//! | 32     | 8    | c2                                                 |
//! | 40     | 8    | tau_K                                              |
//! | 48     | 8    | T                                                  |
//! | 56     | 8    | seed (u64)                                         |
//!
//! Flag bit 0 marks generation metadata as present (when clear, H, c2,
//! tau_K, T and seed are written as NaN / 0 and ignored on read). Flag bit 1
//! marks the symmetric kernel.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::synthesis::{KernelShape, ProcessParams, TimeSeries};

pub const MAGIC: &[u8; 4] = b"FRAC";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 64;

const FLAG_PARAMS: u32 = 1;
const FLAG_SYMMETRIC: u32 = 2;

pub fn encode_header(series: &TimeSeries) -> [u8; HEADER_LEN] {
    let mut h = [0u8; HEADER_LEN];
    let mut flags = 0u32;
    let (hurst, c2, tau_k, big_t, seed) = match &series.params {
        Some(p) => {
            flags |= FLAG_PARAMS;
            if p.kernel == KernelShape::Symmetric {
                flags |= FLAG_SYMMETRIC;
            }
            (p.hurst, p.c2, p.tau_k, p.big_t, p.seed)
        }
        None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN, 0),
    };
    let version = u32::from(FORMAT_VERSION) | (flags << 16);
    h[0..4].copy_from_slice(MAGIC);
    h[4..8].copy_from_slice(&version.to_le_bytes());
    h[8..16].copy_from_slice(&(series.len() as u64).to_le_bytes());
    for (i, v) in [series.dt, hurst, c2, tau_k, big_t].iter().enumerate() {
        let off = 16 + 8 * i;
        h[off..off + 8].copy_from_slice(&v.to_le_bytes());
    }
    h[56..64].copy_from_slice(&seed.to_le_bytes());
    h
}

pub fn write_binary(path: &Path, series: &TimeSeries) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_header(series))?;
    for v in &series.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn f64_at(buf: &[u8], off: usize) -> f64 {
    f64::from_le_bytes(buf[off..off + 8].try_into().unwrap())
}

fn u64_at(buf: &[u8], off: usize) -> u64 {
    u64::from_le_bytes(buf[off..off + 8].try_into().unwrap())
}

pub fn read_binary(path: &Path) -> Result<TimeSeries> {
    let bad = |reason: String| Error::SeriesFormat {
        path: path.to_path_buf(),
        reason,
    };
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("file has {} bytes, header needs 64", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(bad("missing FRAC magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if (version & 0xffff) as u16 != FORMAT_VERSION {
        return Err(bad(format!("unsupported format version {}", version & 0xffff)));
    }
    let flags = version >> 16;
    let n = u64_at(&bytes, 8) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != n * 8 {
        return Err(bad(format!("header says {n} samples, body holds {} bytes", body.len())));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let dt = f64_at(&bytes, 16);
    let mut series = TimeSeries::new(values, dt).map_err(|e| bad(e.to_string()))?;
    if flags & FLAG_PARAMS != 0 {
        series.params = Some(ProcessParams {
            hurst: f64_at(&bytes, 24),
            c2: f64_at(&bytes, 32),
            tau_k: f64_at(&bytes, 40),
            big_t: f64_at(&bytes, 48),
            n,
            dt,
            seed: u64_at(&bytes, 56),
            kernel: if flags & FLAG_SYMMETRIC != 0 {
                KernelShape::Symmetric
            } else {
                KernelShape::Antisymmetric
            },
        });
    }
    Ok(series)
}

/// One value per line under a `value` header.
pub fn write_csv(path: &Path, series: &TimeSeries) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "value")?;
    for v in &series.values {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path, dt: f64) -> Result<TimeSeries> {
    let bad = |reason: String| Error::SeriesFormat {
        path: path.to_path_buf(),
        reason,
    };
    let mut lines = BufReader::new(File::open(path)?).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == "value" => {}
        _ => return Err(bad("expected header `value`".into())),
    }
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let v: f64 = line
            .trim()
            .parse()
            .map_err(|_| bad(format!("line {}: not a number: {line:?}", i + 2)))?;
        values.push(v);
    }
    TimeSeries::new(values, dt).map_err(|e| bad(e.to_string()))
}
