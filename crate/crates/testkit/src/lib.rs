//! Brute-force reference implementations and data generators for tests.
//!
//! Nothing here depends on the `cluefuse` crate: the oracles recompute every
//! quantity from first principles so they can check it.

pub mod fixture;
pub mod oracles;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random corpus of whitespace-separated words `w0..w{vocab}` together
/// with the same documents as token lists.
pub fn random_corpus(rng: &mut impl Rng, max_docs: usize, vocab: usize) -> Vec<Vec<String>> {
    let n = rng.random_range(1..=max_docs);
    (0..n)
        .map(|_| {
            let len = rng.random_range(1..=12);
            (0..len).map(|_| format!("w{}", rng.random_range(0..vocab))).collect()
        })
        .collect()
}

/// Random query over a vocabulary slightly larger than the corpus one, so
/// some terms are out of vocabulary.
pub fn random_query(rng: &mut impl Rng, vocab: usize) -> Vec<String> {
    let len = rng.random_range(0..=5);
    (0..len).map(|_| format!("w{}", rng.random_range(0..vocab + 3))).collect()
}

/// Random string over a small alphabet (so matches are frequent).
pub fn random_string(rng: &mut impl Rng, max_len: usize, alphabet: &[char]) -> String {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
}
