//! On-disk cache for [`PrimeSet`].
//!
//! Layout (little endian):
//!
//! | bytes | field                                   |
//! |-------|-----------------------------------------|
//! | 8     | magic `PRIMESET`                        |
//! | 4     | format version (1)                      |
//! | 8     | bound                                   |
//! | 8     | prime count                             |
//! | 8     | payload length in bytes                 |
//! | 32    | SHA-256 of the payload                  |
//! | ..    | payload: LEB128 gaps, first gap from 0  |

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{primes_up_to, PrimeSet};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"PRIMESET";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8 + 8 + 8 + 32;

pub fn encode(set: &PrimeSet) -> Vec<u8> {
    let mut payload = Vec::with_capacity(set.len() + 8);
    let mut prev = 0u64;
    for p in set.iter() {
        let mut gap = p - prev;
        prev = p;
        loop {
            let byte = (gap & 0x7f) as u8;
            gap >>= 7;
            if gap == 0 {
                payload.push(byte);
                break;
            }
            payload.push(byte | 0x80);
        }
    }
    let digest = Sha256::digest(&payload);
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&set.bound().to_le_bytes());
    out.extend_from_slice(&(set.len() as u64).to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&digest);
    out.extend_from_slice(&payload);
    out
}

fn read_u64(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

/// Decodes a cache image, checking magic, version, bound and checksum.
pub fn decode(bytes: &[u8], expected_bound: u64) -> Result<PrimeSet> {
    let bad = |m: &str| Error::Cache(m.to_string());
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Cache(format!("unsupported version {version}")));
    }
    let bound = read_u64(bytes, 12);
    if bound != expected_bound {
        return Err(Error::Cache(format!(
            "bound mismatch: file has {bound}, expected {expected_bound}"
        )));
    }
    let count = read_u64(bytes, 20) as usize;
    let payload_len = read_u64(bytes, 28) as usize;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != payload_len {
        return Err(bad("truncated payload"));
    }
    if Sha256::digest(payload).as_slice() != &bytes[36..68] {
        return Err(bad("checksum mismatch"));
    }
    let mut primes = Vec::with_capacity(count);
    let mut prev = 0u64;
    let mut gap = 0u64;
    let mut shift = 0;
    for &b in payload {
        gap |= ((b & 0x7f) as u64) << shift;
        if b & 0x80 != 0 {
            shift += 7;
            continue;
        }
        prev += gap;
        if prev > bound {
            return Err(bad("prime above bound"));
        }
        primes.push(prev as u32);
        gap = 0;
        shift = 0;
    }
    if primes.len() != count {
        return Err(bad("prime count mismatch"));
    }
    Ok(PrimeSet::from_parts(bound, primes))
}

pub fn save(set: &PrimeSet, path: &Path) -> Result<()> {
    fs::write(path, encode(set))?;
    Ok(())
}

pub fn load(path: &Path, expected_bound: u64) -> Result<PrimeSet> {
    decode(&fs::read(path)?, expected_bound)
}

pub fn cache_path(dir: &Path, bound: u64) -> PathBuf {
    dir.join(format!("primes-{bound}.bin"))
}

/// Primes up to `bound`, read from `dir` when a valid cache file exists and
/// written there otherwise. An unreadable or stale file is recomputed.
pub fn cached_primes_up_to(dir: Option<&Path>, bound: u64) -> Result<PrimeSet> {
    let Some(dir) = dir else {
        return primes_up_to(bound);
    };
    let path = cache_path(dir, bound);
    if let Ok(set) = load(&path, bound) {
        return Ok(set);
    }
    let set = primes_up_to(bound)?;
    fs::create_dir_all(dir)?;
    save(&set, &path)?;
    Ok(set)
}
