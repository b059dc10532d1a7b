//! Deterministic substreams and the two samplers the resampling code relies on.
//!
//! Every randomized operation receives a [`SeedSpec`] and a replicate index.
//! The triple `(master_seed, stream_label, replicate)` is hashed with SHA-256
//! into a ChaCha8 key, so replicate `r` always sees the same stream no matter
//! which thread evaluates it or in what order.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use sha2::{Digest, Sha256};

use super::NumericsError;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_label: String,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_label: impl Into<String>) -> Self {
        Self { master_seed, stream_label: stream_label.into() }
    }

    /// Same master seed, different consumer.
    pub fn with_label(&self, label: impl Into<String>) -> Self {
        Self::new(self.master_seed, label)
    }

    /// Generator for one replicate.
    pub fn rng(&self, replicate: u64) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.master_seed.to_le_bytes());
        h.update((self.stream_label.len() as u64).to_le_bytes());
        h.update(self.stream_label.as_bytes());
        h.update(replicate.to_le_bytes());
        let digest = h.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(key)
    }
}

/// Draw a count vector from Multinomial(n, probs) using an explicit generator.
///
/// Sequential conditional binomials: cell `j` is Binomial(remaining, p_j / mass_left).
pub fn multinomial_with<R: Rng + ?Sized>(rng: &mut R, n: u64, probs: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let Some(last) = probs.iter().rposition(|&p| p > 0.0) else {
        return counts;
    };
    let mut remaining = n;
    let mut mass_left = 1.0f64;
    for (j, &p) in probs.iter().enumerate().take(last) {
        if remaining == 0 {
            break;
        }
        if p <= 0.0 {
            continue;
        }
        let cond = if mass_left <= p { 1.0 } else { p / mass_left };
        let draw = if cond >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, cond).expect("probability in [0, 1]").sample(rng)
        };
        counts[j] = draw;
        remaining -= draw;
        mass_left -= p;
    }
    counts[last] += remaining;
    counts
}

/// Multinomial(n, probs) draw for one replicate of a seeded stream.
pub fn multinomial_sample(n: u64, probs: &[f64], seed: &SeedSpec, replicate: u64) -> Result<Vec<u64>, NumericsError> {
    if n == 0 {
        return Err(NumericsError::Domain("multinomial size must be >= 1".into()));
    }
    if probs.is_empty() {
        return Err(NumericsError::Domain("empty probability vector".into()));
    }
    if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(NumericsError::Domain("probabilities must be finite and non-negative".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(NumericsError::Domain(format!("probabilities sum to {total}, expected 1")));
    }
    Ok(multinomial_with(&mut seed.rng(replicate), n, probs))
}

/// Uniform random `m`-subset of `{1, ..., population}`, returned sorted.
pub fn subsample_without_replacement(
    population: usize,
    m: usize,
    seed: &SeedSpec,
    replicate: u64,
) -> Result<Vec<usize>, NumericsError> {
    if m == 0 || m > population {
        return Err(NumericsError::Domain(format!(
            "subsample size must lie in [1, {population}], got {m}"
        )));
    }
    if m == population {
        return Ok((1..=population).collect());
    }
    let mut rng = seed.rng(replicate);
    let mut ids: Vec<usize> = index::sample(&mut rng, population, m).into_iter().map(|i| i + 1).collect();
    ids.sort_unstable();
    Ok(ids)
}
