//! Run manifests: enough metadata to reproduce a run and verify its output.

use serde::Serialize;
use serde_json::Value;

/// Echo of one CLI invocation. Re-running with the same command,
/// parameters and seed reproduces the byte-identical data output, which the
/// checksum fingerprints; wall time is informational only.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    pub seed: u64,
    pub library_version: String,
    pub wall_time_seconds: f64,
    /// FNV-1a 64 over the deterministic data bytes, hex encoded.
    pub output_checksum: String,
}

impl RunManifest {
    pub fn new(command: &str, parameters: Value, seed: u64, wall_time_seconds: f64, data: &[u8]) -> Self {
        RunManifest {
            command: command.to_string(),
            parameters,
            seed,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds,
            output_checksum: format!("{:016x}", fnv1a64(data)),
        }
    }
}

/// FNV-1a, 64-bit.
pub fn fnv1a64(data: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &byte in data {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
