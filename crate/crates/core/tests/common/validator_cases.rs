//! Random cases for the order and misspelling validators.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";

fn random_word<R: Rng>(rng: &mut R, len: usize) -> String {
    (0..len)
        .map(|_| LETTERS[rng.random_range(0..LETTERS.len())] as char)
        .collect()
}

/// `n` lowercase words that are pairwise at Damerau-Levenshtein distance 5 or
/// more, so a single typo always corrects back to the word it came from.
pub fn spread_dictionary<R: Rng>(rng: &mut R, n: usize) -> Vec<String> {
    let mut words: Vec<String> = Vec::with_capacity(n);
    while words.len() < n {
        let len = rng.random_range(6..10);
        let w = random_word(rng, len);
        if words
            .iter()
            .all(|o| strsim::damerau_levenshtein(o, &w) >= 5)
        {
            words.push(w);
        }
    }
    words
}

/// One random insertion, deletion, substitution or adjacent transposition
/// that changes `word`.
pub fn single_typo<R: Rng>(rng: &mut R, word: &str) -> String {
    let chars: Vec<char> = word.chars().collect();
    loop {
        let mut c = chars.clone();
        let i = rng.random_range(0..c.len());
        let letter = LETTERS[rng.random_range(0..LETTERS.len())] as char;
        match rng.random_range(0..4) {
            0 => c.insert(i, letter),
            1 => {
                c.remove(i);
            }
            2 => c[i] = letter,
            _ if i + 1 < c.len() => c.swap(i, i + 1),
            _ => continue,
        }
        if c != chars {
            return c.into_iter().collect();
        }
    }
}

/// A token list drawn from a small alphabet so repeated tokens are common.
pub fn token_list<R: Rng>(rng: &mut R) -> Vec<String> {
    const POOL: &[&str] = &[
        "what", "is", "the", "best", "way", "to", "cook", "rice", "fast",
    ];
    let n = rng.random_range(2..8);
    (0..n)
        .map(|_| POOL[rng.random_range(0..POOL.len())].to_string())
        .collect()
}

pub fn shuffled<R: Rng>(rng: &mut R, tokens: &[String]) -> Vec<String> {
    let mut out = tokens.to_vec();
    out.shuffle(rng);
    out
}

/// A seed query of 3 to 6 dictionary words.
pub fn seed_query<R: Rng>(rng: &mut R, dictionary: &[String]) -> Vec<String> {
    let n = rng.random_range(3..7);
    (0..n)
        .map(|_| dictionary[rng.random_range(0..dictionary.len())].clone())
        .collect()
}

/// The seed with one word replaced by a single-typo corruption of itself.
pub fn misspelled_variant<R: Rng>(rng: &mut R, seed: &[String]) -> Vec<String> {
    let mut v = seed.to_vec();
    let i = rng.random_range(0..v.len());
    v[i] = single_typo(rng, &v[i]);
    v
}

/// A variant made only of dictionary words.
pub fn clean_variant<R: Rng>(rng: &mut R, seed: &[String], dictionary: &[String]) -> Vec<String> {
    let mut v = shuffled(rng, seed);
    if rng.random_bool(0.5) {
        let i = rng.random_range(0..v.len());
        v[i] = dictionary[rng.random_range(0..dictionary.len())].clone();
    }
    v
}
