//! Counter-based seed derivation.
//!
//! A cell's seed is a SHA-256 digest of the master seed and the cell's design
//! parameters, so it does not depend on where the cell sits in the grid or on
//! which worker runs it. Each replication attempt gets its own ChaCha stream
//! keyed by that seed.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

const CELL_DOMAIN: &[u8] = b"grm-sim/cell/v1";

pub fn derive_cell_seed(
    master_seed: u64,
    num_categories: u32,
    sigma: f64,
    num_items: u32,
    sample_size: u32,
) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(CELL_DOMAIN);
    hasher.update(master_seed.to_le_bytes());
    hasher.update(num_categories.to_le_bytes());
    hasher.update(sigma.to_bits().to_le_bytes());
    hasher.update(num_items.to_le_bytes());
    hasher.update(sample_size.to_le_bytes());
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}

/// Generator for one attempt of one replication.
///
/// Attempt 0 is the normal draw; later attempts replace a discarded
/// degenerate sample and never overlap another replication's stream.
pub fn replication_rng(cell_seed: u64, rep_index: u32, attempt: u32) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(cell_seed);
    rng.set_stream(((attempt as u64) << 32) | rep_index as u64);
    rng
}
