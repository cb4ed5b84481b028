//! Deterministic text analytics used to characterise query variants.

mod porter;
mod readability;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

use crate::error::{Error, Result};

pub use porter::porter_stem;
pub use readability::{count_syllables, flesch_kincaid_grade};

/// Lowercase word tokens with punctuation removed.
pub type TokenList = Vec<String>;

/// Lowercases, deletes every Unicode punctuation character (so `what's`
/// becomes `whats`) and splits on whitespace.
pub fn tokenize(text: &str) -> TokenList {
    let cleaned: String = text
        .chars()
        .filter(|c| c.general_category_group() != GeneralCategoryGroup::Punctuation)
        .flat_map(char::to_lowercase)
        .collect();
    cleaned.split_whitespace().map(str::to_string).collect()
}

/// Tokenizes and Porter-stems.
pub fn stemmed_tokens(text: &str) -> TokenList {
    tokenize(text).iter().map(|t| porter_stem(t)).collect()
}

/// Jaccard index over the sets of stemmed tokens; 1.0 when both are empty.
pub fn jaccard(seed_text: &str, variant_text: &str) -> f64 {
    let a: HashSet<String> = stemmed_tokens(seed_text).into_iter().collect();
    let b: HashSet<String> = stemmed_tokens(variant_text).into_iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Distinct tokens over total tokens, pooled across `texts`.
pub fn lexical_diversity<S: AsRef<str>>(texts: &[S]) -> Result<f64> {
    let mut total = 0usize;
    let mut distinct = HashSet::new();
    for t in texts {
        for tok in tokenize(t.as_ref()) {
            total += 1;
            distinct.insert(tok);
        }
    }
    if total == 0 {
        return Err(Error::Validation("no tokens".into()));
    }
    Ok(distinct.len() as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantFeatureRecord {
    pub topic_id: String,
    pub profile_id: String,
    pub index: u8,
    pub jaccard: f64,
    pub length_words: usize,
    pub fk_grade: f64,
    pub lexical_diversity: f64,
}

impl VariantFeatureRecord {
    /// Lexical diversity is taken from `diversity_text`, which is the variant
    /// itself unless its spelling has been corrected first.
    pub fn compute(
        topic_id: &str,
        profile_id: &str,
        index: u8,
        seed: &str,
        variant: &str,
        diversity_text: &str,
    ) -> Result<Self> {
        Ok(VariantFeatureRecord {
            topic_id: topic_id.to_string(),
            profile_id: profile_id.to_string(),
            index,
            jaccard: jaccard(seed, variant),
            length_words: tokenize(variant).len(),
            fk_grade: flesch_kincaid_grade(variant)?,
            lexical_diversity: lexical_diversity(&[diversity_text])?,
        })
    }
}

pub const FEATURE_CSV_HEADER: &[&str] = &[
    "topic_id",
    "profile_id",
    "index",
    "jaccard",
    "length_words",
    "fk_grade",
    "lexical_diversity",
];

pub fn write_feature_csv(records: &[VariantFeatureRecord], path: &Path) -> Result<()> {
    crate::model::write_csv(path, FEATURE_CSV_HEADER, records)
}
