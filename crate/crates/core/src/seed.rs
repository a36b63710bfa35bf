//! Deterministic seed derivation for parallel experiment tasks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

fn digest(master: u64, label: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    h.finalize().into()
}

/// Child seed from SHA-256 of the little-endian master seed followed by the label.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let d = digest(master, label);
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Independent random stream for one labelled task.
pub fn stream(master: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(digest(master, label))
}
