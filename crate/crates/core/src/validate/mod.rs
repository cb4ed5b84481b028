//! Automatic validators for lexical transformations and the human-assessment
//! bookkeeping (gold filtering, consensus accuracy, sampling).

mod annotation;
mod sample;
mod spell;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Profile, QueryVariant, Topic};
use crate::textkit::tokenize;

pub use annotation::{
    alignment_accuracy, alignment_scheme, filter_by_gold, opposite_group, similarity_accuracy,
    AlignmentScheme, ConsensusReport, GoldFilter, EQUALLY_LIKELY,
};
pub use sample::sample_for_annotation;
pub use spell::{correct_text, spell_correct, Dictionary, MAX_CORRECTION_DISTANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Order,
    Misspelling,
}

impl Check {
    /// Which automatic check, if any, applies to a profile (matched by name).
    pub fn for_profile(profile: &Profile) -> Option<Check> {
        match profile.name.to_lowercase().as_str() {
            "order" => Some(Check::Order),
            "misspelling" => Some(Check::Misspelling),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationVerdict {
    pub topic_id: String,
    pub profile_id: String,
    pub index: u8,
    pub check: Check,
    pub valid: bool,
    pub detail: String,
}

pub const VERDICT_CSV_HEADER: &[&str] = &[
    "topic_id",
    "profile_id",
    "index",
    "check",
    "valid",
    "detail",
];

fn order_detail(seed: &[String], variant: &[String]) -> (bool, &'static str) {
    if seed == variant {
        return (false, "variant identical to seed");
    }
    let mut a = seed.to_vec();
    let mut b = variant.to_vec();
    a.sort();
    b.sort();
    if a == b {
        (true, "reordered")
    } else {
        (false, "word multiset differs from seed")
    }
}

/// True iff the variant differs from the seed as a token sequence while both
/// sort to the same token multiset.
pub fn validate_order(seed: &str, variant: &str) -> bool {
    order_detail(&tokenize(seed), &tokenize(variant)).0
}

/// Out-of-dictionary variant tokens whose correction is a seed token.
fn misspelled_seed_words(
    seed: &str,
    variant: &str,
    dictionary: &Dictionary,
) -> Vec<(String, String)> {
    let seed_tokens: Vec<String> = tokenize(seed);
    tokenize(variant)
        .into_iter()
        .filter(|t| !dictionary.contains(t))
        .filter_map(|t| {
            let fixed = spell_correct(&t, dictionary)?;
            seed_tokens.contains(&fixed).then_some((t, fixed))
        })
        .collect()
}

/// True iff some variant token is absent from the dictionary and corrects to a seed token.
pub fn validate_misspelling(seed: &str, variant: &str, dictionary: &Dictionary) -> bool {
    !misspelled_seed_words(seed, variant, dictionary).is_empty()
}

/// Runs the order and misspelling checks over every variant of the profiles
/// they apply to. Variants of other profiles are skipped.
pub fn validate_variants(
    variants: &[QueryVariant],
    topics: &[Topic],
    profiles: &[Profile],
    dictionary: &Dictionary,
) -> Result<Vec<ValidationVerdict>> {
    let seeds: HashMap<&str, &str> = topics
        .iter()
        .map(|t| (t.topic_id.as_str(), t.seed_query.as_str()))
        .collect();
    let checks: HashMap<&str, Check> = profiles
        .iter()
        .filter_map(|p| Check::for_profile(p).map(|c| (p.profile_id.as_str(), c)))
        .collect();

    let mut out = Vec::new();
    for v in variants {
        let Some(&check) = checks.get(v.profile_id.as_str()) else {
            continue;
        };
        let seed = seeds.get(v.topic_id.as_str()).ok_or_else(|| {
            Error::Validation(format!("variant references unknown topic {}", v.topic_id))
        })?;
        let (valid, detail) = match check {
            Check::Order => {
                let (ok, why) = order_detail(&tokenize(seed), &tokenize(&v.text));
                (ok, why.to_string())
            }
            Check::Misspelling => {
                let hits = misspelled_seed_words(seed, &v.text, dictionary);
                if hits.is_empty() {
                    (false, "no misspelled seed word found".to_string())
                } else {
                    let pairs: Vec<String> =
                        hits.iter().map(|(t, f)| format!("{t}->{f}")).collect();
                    (true, pairs.join(" "))
                }
            }
        };
        out.push(ValidationVerdict {
            topic_id: v.topic_id.clone(),
            profile_id: v.profile_id.clone(),
            index: v.index,
            check,
            valid,
            detail,
        });
    }
    Ok(out)
}
