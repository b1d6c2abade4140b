//! Fixed fan-out of one root seed into per-component seeds.

use sha2::{Digest, Sha256};

/// First eight bytes of SHA-256 over the root seed and a component label.
pub fn derive_seed(root: u64, component: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(component.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
