//! Reproducible multinomial simulation of tomography counts.
//!
//! Every random stream is a ChaCha20 generator (`rand_chacha::ChaCha20Rng`)
//! whose 256-bit key is
//!
//! ```text
//! SHA-256("tomobias/seed/v1" ‖ master_seed ‖ trial_index ‖ len(label) ‖ label)
//! ```
//!
//! with integers encoded as little-endian `u64`. Streams for different
//! `(master_seed, trial_index, label)` triples are therefore independent and
//! do not depend on thread count or scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};
use crate::scheme::FrequencyData;

const SEED_DOMAIN: &[u8] = b"tomobias/seed/v1";

/// Names one random stream.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SeedPolicy {
    pub master_seed: u64,
    pub trial_index: u64,
    pub label: String,
}

impl SeedPolicy {
    pub fn new(master_seed: u64, trial_index: u64, label: impl Into<String>) -> Self {
        Self {
            master_seed,
            trial_index,
            label: label.into(),
        }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        derive_trial_seed(self)
    }
}

/// Stream state for `policy`.
pub fn derive_trial_seed(policy: &SeedPolicy) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(SEED_DOMAIN);
    h.update(policy.master_seed.to_le_bytes());
    h.update(policy.trial_index.to_le_bytes());
    h.update((policy.label.len() as u64).to_le_bytes());
    h.update(policy.label.as_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

/// One multinomial draw of `trials` events over `probs` via sequential
/// conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(trials: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = trials;
    let mut mass: f64 = probs.iter().sum();
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == probs.len() {
            counts[k] = remaining;
            break;
        }
        let cond = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = if cond >= 1.0 {
            remaining
        } else if cond <= 0.0 {
            0
        } else {
            Binomial::new(remaining, cond)
                .expect("conditional probability lies in (0, 1)")
                .sample(rng)
        };
        counts[k] = draw;
        remaining -= draw;
        mass -= p;
    }
    counts
}

/// Simulates `events_per_setting` events for each setting of a flattened
/// probability table.
pub fn toss_frequencies<R: Rng + ?Sized>(
    probs: &[f64],
    outcomes_per_setting: usize,
    events_per_setting: u64,
    rng: &mut R,
) -> Result<FrequencyData> {
    if events_per_setting == 0 {
        return Err(invalid("events per setting must be at least 1"));
    }
    if outcomes_per_setting == 0 || probs.len() % outcomes_per_setting != 0 {
        return Err(invalid("probability table does not split into whole settings"));
    }
    let mut counts = Vec::with_capacity(probs.len());
    for (s, chunk) in probs.chunks(outcomes_per_setting).enumerate() {
        if chunk.iter().any(|p| !(*p >= 0.0 && *p <= 1.0)) {
            return Err(invalid(format!("setting {s}: probability outside [0, 1]")));
        }
        let total: f64 = chunk.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("setting {s}: probabilities sum to {total}")));
        }
        counts.extend(multinomial(events_per_setting, chunk, rng));
    }
    FrequencyData::from_counts(outcomes_per_setting, events_per_setting, counts)
}
