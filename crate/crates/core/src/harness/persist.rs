//! Deterministic persistence: CSV/JSON writers and the run manifest.
//!
//! Identical config + seed must produce byte-identical files, so nothing
//! time- or host-dependent is ever written; floats in CSVs carry 17
//! significant digits, JSON floats use the shortest round-trip form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

/// 17-significant-digit float formatting for CSV columns.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// FNV-1a 64-bit hash, hex encoded; used to fingerprint config files.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub subcommand: &'a str,
    pub config_hash: String,
    pub seed: u64,
    pub version: &'a str,
}

/// Write the run manifest (config hash, seed, package version).
pub fn write_manifest(dir: &Path, subcommand: &str, config_bytes: &[u8], seed: u64) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let manifest = Manifest {
        subcommand,
        config_hash: fnv1a_hex(config_bytes),
        seed,
        version: env!("CARGO_PKG_VERSION"),
    };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Write a CSV with pre-formatted rows.
pub fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}
