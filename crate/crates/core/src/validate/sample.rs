use std::collections::BTreeMap;

use rand::seq::index;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::QueryVariant;

fn profile_rng(seed: u64, profile_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(profile_id.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(key)
}

/// Per-profile sample of `round(fraction * n)` variants (halves round up),
/// drawn without replacement. The result keeps input order.
pub fn sample_for_annotation(
    variants: &[QueryVariant],
    fraction: f64,
    seed: u64,
) -> Result<Vec<QueryVariant>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Contract(format!(
            "sample fraction {fraction} outside (0, 1]"
        )));
    }
    let mut by_profile: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, v) in variants.iter().enumerate() {
        by_profile.entry(v.profile_id.as_str()).or_default().push(i);
    }
    let mut chosen = vec![false; variants.len()];
    for (profile, members) in by_profile {
        let n = members.len();
        let k = ((fraction * n as f64 + 0.5).floor() as usize).min(n);
        let mut rng = profile_rng(seed, profile);
        for j in index::sample(&mut rng, n, k) {
            chosen[members[j]] = true;
        }
    }
    Ok(variants
        .iter()
        .zip(chosen)
        .filter(|&(_, keep)| keep)
        .map(|(v, _)| v.clone())
        .collect())
}
