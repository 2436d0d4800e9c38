//! Run manifests: the resolved configuration plus what is needed to check a replay.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSection {
    pub graph_hash: String,
    pub tool_version: String,
    pub runs: Vec<RunEntry>,
}

/// One grid point with its resolved step size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunEntry {
    pub id: usize,
    pub b: usize,
    pub beta: usize,
    pub eta: f64,
    pub seed: u64,
}

pub const TOOL_VERSION: &str = concat!("gnnlab ", env!("CARGO_PKG_VERSION"));

/// SHA-256 over `"blob <len>\0"` followed by the content, as git does for blobs.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{:02x}", b)).collect()
}
