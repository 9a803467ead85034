//! Stable derivation of independent random seeds from one global seed.

use sha2::{Digest, Sha256};

/// First eight bytes of `SHA-256(global_le || label)`, little endian.
pub fn derive_seed(global: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(global.to_le_bytes());
    h.update(label.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}
