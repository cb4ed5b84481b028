use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};

/// Largest Damerau-Levenshtein distance accepted as a correction.
pub const MAX_CORRECTION_DISTANCE: usize = 2;

static BUNDLED_WORDS: &str = include_str!("../../data/dictionary.txt");

/// A lowercase word list used for spell checking.
#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    words: HashSet<String>,
    /// Words bucketed by character count, each bucket sorted.
    by_len: BTreeMap<usize, Vec<String>>,
}

impl Dictionary {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut dict = Dictionary::default();
        for w in words {
            let w = w.as_ref().trim().to_lowercase();
            if w.is_empty() || w.starts_with('#') {
                continue;
            }
            if dict.words.insert(w.clone()) {
                dict.by_len.entry(w.chars().count()).or_default().push(w);
            }
        }
        for bucket in dict.by_len.values_mut() {
            bucket.sort();
        }
        dict
    }

    /// Newline-delimited word list; blank lines and `#` comments are skipped.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_words(text.lines()))
    }

    pub fn bundled() -> Self {
        Self::from_words(BUNDLED_WORDS.lines())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words within `max_len_delta` characters of `len`, each length bucket in sorted order.
    fn near_length(&self, len: usize, max_len_delta: usize) -> impl Iterator<Item = &String> {
        self.by_len
            .range(len.saturating_sub(max_len_delta)..=len + max_len_delta)
            .flat_map(|(_, words)| words.iter())
    }
}

/// Returns the word itself when known, else the closest dictionary word within
/// distance 2 (ties go to the lexicographically smallest), else `None`.
pub fn spell_correct(word: &str, dictionary: &Dictionary) -> Option<String> {
    if dictionary.contains(word) {
        return Some(word.to_string());
    }
    let len = word.chars().count();
    let mut best: Option<(usize, &String)> = None;
    // Edit distance is at least the length difference, so farther buckets cannot qualify.
    for candidate in dictionary.near_length(len, MAX_CORRECTION_DISTANCE) {
        let d = strsim::damerau_levenshtein(word, candidate);
        if d > MAX_CORRECTION_DISTANCE {
            continue;
        }
        best = match best {
            Some((bd, bw)) if bd < d || (bd == d && bw <= candidate) => Some((bd, bw)),
            _ => Some((d, candidate)),
        };
    }
    best.map(|(_, w)| w.clone())
}

/// Tokenizes `text` and replaces each token by its correction, keeping tokens
/// that have none.
pub fn correct_text(text: &str, dictionary: &Dictionary) -> String {
    crate::textkit::tokenize(text)
        .into_iter()
        .map(|t| spell_correct(&t, dictionary).unwrap_or(t))
        .collect::<Vec<_>>()
        .join(" ")
}
