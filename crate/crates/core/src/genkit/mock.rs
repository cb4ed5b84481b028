use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::Provider;
use crate::error::Result;
use crate::textkit::{stemmed_tokens, tokenize};
use crate::validate::{spell_correct, Dictionary};

const STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "am", "an", "and", "any", "are", "as", "at", "be", "been",
    "being", "but", "by", "can", "could", "did", "do", "does", "doing", "for", "from", "get",
    "had", "has", "have", "how", "i", "if", "in", "into", "is", "it", "its", "me", "my", "of",
    "on", "or", "our", "should", "so", "some", "than", "that", "the", "their", "them", "then",
    "there", "these", "they", "this", "to", "was", "we", "were", "what", "when", "where", "which",
    "who", "why", "will", "with", "would", "you", "your",
];

/// Sentence frames used for backstories; their own words are ignored when grading.
const BACKSTORY_FRAMES: &[&str] = &[
    "I am trying to find out {q}.",
    "I have been reading about {k} but the sources I found disagree with each other.",
    "A useful answer would explain {k} in plain terms and point to something I can act on.",
    "I do not need general background, only material that speaks directly to {k}.",
    "Anything that only mentions {k} in passing would not help me much.",
];

const SYNONYMS: &[(&str, &[&str])] = &[
    ("money", &["cash", "funds"]),
    ("need", &["require", "want"]),
    ("cost", &["price", "expense"]),
    ("cheap", &["inexpensive", "affordable"]),
    ("buy", &["purchase", "get"]),
    ("good", &["great", "decent"]),
    ("best", &["top", "ideal"]),
    ("anxiety", &["stress", "worry"]),
    ("liable", &["responsible", "accountable"]),
    ("landlords", &["property owners", "lessors"]),
    ("landlord", &["property owner", "lessor"]),
    ("atheist", &["nonbeliever", "unbeliever"]),
    ("jammed", &["injured", "sprained"]),
    ("finger", &["digit", "fingertip"]),
    ("treat", &["fix", "heal"]),
    ("help", &["assist", "support"]),
    ("symptoms", &["signs", "indications"]),
    ("causes", &["reasons for", "sources of"]),
    ("effects", &["impacts", "consequences"]),
    ("travel", &["trip", "journey"]),
    ("use", &["take", "apply"]),
    ("find", &["locate", "discover"]),
    ("make", &["create", "produce"]),
    ("large", &["big", "huge"]),
    ("small", &["little", "tiny"]),
    ("quickly", &["fast", "rapidly"]),
    ("doctor", &["physician", "gp"]),
    ("children", &["kids", "youngsters"]),
    ("car", &["vehicle", "automobile"]),
    ("house", &["home", "residence"]),
];

const OPENERS: &[&str] = &[
    "how do i find out",
    "what should i know about",
    "tell me about",
    "info on",
];
const VOICE_OPENERS: &[&str] = &["hey google", "ok google", "hey siri", "alexa"];
const EXPERT_TERMS: &[&str] = &[
    "evidence review",
    "clinical guidelines",
    "mechanism",
    "statistics",
    "regulations",
];
const NOVICE_FRAMES: &[&str] = &[
    "what does {k} mean",
    "simple explanation of {k}",
    "{k} for beginners",
];
const SENIOR_OPENERS: &[&str] = &[
    "Could you please tell me",
    "I would be grateful to learn",
    "Please explain",
];
const NATURAL_OPENERS: &[&str] = &[
    "i would like to know",
    "can you help me understand",
    "i am wondering",
];
const NATIVE_OPENERS: &[&str] = &["what's the deal with", "how come", "any tips on"];

fn is_stopword(w: &str) -> bool {
    STOPWORDS.binary_search(&w).is_ok()
}

/// Rule-based stand-in for a language model. Every response is a pure function
/// of the prompt and the seed; variant requests get well-formed JSON arrays.
#[derive(Debug, Clone)]
pub struct MockProvider {
    seed: u64,
    dictionary: Dictionary,
}

impl MockProvider {
    pub fn new(seed: u64) -> Self {
        Self::with_dictionary(seed, Dictionary::bundled())
    }

    /// The dictionary must match the one used for misspelling validation.
    pub fn with_dictionary(seed: u64, dictionary: Dictionary) -> Self {
        MockProvider { seed, dictionary }
    }

    fn rng_for(&self, prompt: &str) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(prompt.as_bytes());
        let digest = h.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest[..32]);
        ChaCha8Rng::from_seed(key)
    }
}

fn field<'a>(prompt: &'a str, key: &str) -> Option<&'a str> {
    prompt
        .lines()
        .find_map(|l| l.trim_start().strip_prefix(key))
        .map(str::trim)
        .filter(|s| !s.is_empty())
}

fn requested_count(prompt: &str) -> usize {
    prompt
        .split("exactly ")
        .skip(1)
        .find_map(|rest| {
            let digits: String = rest.chars().take_while(char::is_ascii_digit).collect();
            digits.parse().ok()
        })
        .unwrap_or(3)
}

fn keywords(tokens: &[String]) -> Vec<String> {
    let k: Vec<String> = tokens.iter().filter(|t| !is_stopword(t)).cloned().collect();
    if k.is_empty() {
        tokens.to_vec()
    } else {
        k
    }
}

impl Provider for MockProvider {
    fn complete(&self, prompt: &str) -> Result<String> {
        let mut rng = self.rng_for(prompt);
        if let (Some(need), Some(passage)) = (
            field(prompt, "Information need:"),
            field(prompt, "Passage:"),
        ) {
            return Ok(grade(need, passage, &mut rng).to_string());
        }
        let seed = field(prompt, "Seed query:").unwrap_or("search query");
        if prompt.contains("JSON array") {
            let n = requested_count(prompt);
            let profile = field(prompt, "Transformation profile:").map(str::to_lowercase);
            let variants = self.variants(seed, profile.as_deref(), n, &mut rng);
            return Ok(serde_json::to_string(&variants).expect("strings serialize"));
        }
        Ok(backstory(seed, &mut rng))
    }
}

/// Grade from the share of the need's content stems found in the passage, with
/// occasional one-step noise.
fn grade(need: &str, passage: &str, rng: &mut ChaCha8Rng) -> u8 {
    let frame_words: HashSet<String> = BACKSTORY_FRAMES
        .iter()
        .flat_map(|f| stemmed_tokens(f))
        .collect();
    let stop: HashSet<String> = STOPWORDS.iter().flat_map(|w| stemmed_tokens(w)).collect();
    let need: HashSet<String> = stemmed_tokens(need)
        .into_iter()
        .filter(|t| !frame_words.contains(t) && !stop.contains(t))
        .collect();
    let passage: HashSet<String> = stemmed_tokens(passage).into_iter().collect();
    let frac = if need.is_empty() {
        0.0
    } else {
        need.intersection(&passage).count() as f64 / need.len() as f64
    };
    let base: i32 = match frac {
        f if f >= 0.6 => 3,
        f if f >= 0.35 => 2,
        f if f >= 0.15 => 1,
        _ => 0,
    };
    let noise = match rng.random_range(0..20) {
        0 => -1,
        1 => 1,
        _ => 0,
    };
    (base + noise).clamp(0, 3) as u8
}

fn backstory(seed: &str, rng: &mut ChaCha8Rng) -> String {
    let tokens = tokenize(seed);
    let k = keywords(&tokens).join(" ");
    let mut frames: Vec<&str> = BACKSTORY_FRAMES[1..].to_vec();
    frames.shuffle(rng);
    let mut out = vec![BACKSTORY_FRAMES[0].replace("{q}", seed.trim_end_matches('?'))];
    out.extend(frames.iter().take(2).map(|f| f.replace("{k}", &k)));
    out.join(" ")
}

impl MockProvider {
    fn variants(
        &self,
        seed: &str,
        profile: Option<&str>,
        n: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<String> {
        let tokens = tokenize(seed);
        let mut out: Vec<String> = Vec::with_capacity(n);
        for i in 0..n {
            let mut candidate = String::new();
            for _ in 0..12 {
                candidate = self.one_variant(seed, &tokens, profile, i, rng);
                if candidate != seed && !out.contains(&candidate) {
                    break;
                }
            }
            if candidate.trim().is_empty() {
                candidate = seed.to_string();
            }
            out.push(candidate);
        }
        out
    }

    fn one_variant(
        &self,
        seed: &str,
        tokens: &[String],
        profile: Option<&str>,
        i: usize,
        rng: &mut ChaCha8Rng,
    ) -> String {
        let k = keywords(tokens);
        let pick = |rng: &mut ChaCha8Rng, xs: &[&'static str]| xs[rng.random_range(0..xs.len())];
        match profile {
            Some("order") => shuffled(tokens, rng).join(" "),
            Some("misspelling") => self.with_typo(tokens, rng).join(" "),
            Some("paraphrasing") => match i % 2 {
                0 => swap_synonyms(tokens, rng, true).join(" "),
                _ => format!(
                    "{} {}",
                    pick(rng, OPENERS),
                    swap_synonyms(&k, rng, false).join(" ")
                ),
            },
            Some("naturality") => format!(
                "{} {}",
                pick(rng, NATURAL_OPENERS),
                swap_synonyms(tokens, rng, false).join(" ")
            ),
            Some("child") => {
                let mut t = self.with_typo(&k, rng);
                if rng.random_bool(0.5) {
                    t.push("pls".into());
                }
                t.join(" ")
            }
            Some("senior") => format!(
                "{} {}?",
                pick(rng, SENIOR_OPENERS),
                swap_synonyms(tokens, rng, false).join(" ")
            ),
            Some("non-native") => {
                let plain: Vec<String> = tokens
                    .iter()
                    .filter(|t| {
                        !matches!(
                            t.as_str(),
                            "the" | "a" | "an" | "do" | "does" | "is" | "are"
                        )
                    })
                    .cloned()
                    .collect();
                match i % 3 {
                    0 => plain.join(" "),
                    1 => format!(
                        "please tell {}",
                        swap_synonyms(&plain, rng, false).join(" ")
                    ),
                    _ => format!("{} what is", k.join(" ")),
                }
            }
            Some("native") => format!(
                "{} {}",
                pick(rng, NATIVE_OPENERS),
                swap_synonyms(&k, rng, false).join(" ")
            ),
            Some("novice") => pick(rng, NOVICE_FRAMES).replace("{k}", &k.join(" ")),
            Some("expert") => format!(
                "{} {}",
                swap_synonyms(&k, rng, false).join(" "),
                pick(rng, EXPERT_TERMS)
            ),
            Some("mobile") => match i % 3 {
                0 => k.iter().take(3).cloned().collect::<Vec<_>>().join(" "),
                1 => swap_synonyms(&k, rng, true)
                    .into_iter()
                    .take(3)
                    .collect::<Vec<_>>()
                    .join(" "),
                _ => format!(
                    "{} info",
                    k.iter().take(2).cloned().collect::<Vec<_>>().join(" ")
                ),
            },
            Some("voice") => format!(
                "{} {}",
                pick(rng, VOICE_OPENERS),
                seed.trim_end_matches('?')
            ),
            _ => match rng.random_range(0..5) {
                0 => swap_synonyms(tokens, rng, true).join(" "),
                1 => format!("{} {}", pick(rng, OPENERS), k.join(" ")),
                2 => k.join(" "),
                3 => format!(
                    "{} {}",
                    swap_synonyms(&k, rng, false).join(" "),
                    pick(rng, EXPERT_TERMS)
                ),
                _ => format!(
                    "{} {}",
                    pick(rng, NATIVE_OPENERS),
                    swap_synonyms(&k, rng, true).join(" ")
                ),
            },
        }
    }

    /// Replaces one dictionary word by a single-edit typo that the spell checker
    /// maps back to it. Falls back to the unchanged tokens when no word qualifies.
    fn with_typo(&self, tokens: &[String], rng: &mut ChaCha8Rng) -> Vec<String> {
        let mut positions: Vec<usize> = (0..tokens.len())
            .filter(|&i| {
                let w = &tokens[i];
                w.len() >= 4 && w.is_ascii() && self.dictionary.contains(w)
            })
            .collect();
        positions.shuffle(rng);
        for pos in positions {
            let word = &tokens[pos];
            let mut typos: Vec<String> = single_edits(word)
                .into_iter()
                .filter(|t| !self.dictionary.contains(t))
                .collect();
            typos.sort();
            typos.dedup();
            typos.shuffle(rng);
            if let Some(t) = typos
                .into_iter()
                .find(|t| spell_correct(t, &self.dictionary).as_deref() == Some(word.as_str()))
            {
                let mut out = tokens.to_vec();
                out[pos] = t;
                return out;
            }
        }
        tokens.to_vec()
    }
}

/// Adjacent transpositions, deletions and doubled letters, keeping the first letter.
fn single_edits(word: &str) -> Vec<String> {
    let b = word.as_bytes();
    let mut out = Vec::new();
    for i in 1..b.len() {
        if i + 1 < b.len() && b[i] != b[i + 1] {
            let mut t = b.to_vec();
            t.swap(i, i + 1);
            out.push(String::from_utf8(t).unwrap());
        }
        let mut d = b.to_vec();
        d.remove(i);
        out.push(String::from_utf8(d).unwrap());
        let mut dbl = b.to_vec();
        dbl.insert(i, b[i]);
        out.push(String::from_utf8(dbl).unwrap());
    }
    out
}

fn shuffled(tokens: &[String], rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut t = tokens.to_vec();
    if t.iter().collect::<HashSet<_>>().len() < 2 {
        return t;
    }
    loop {
        t.shuffle(rng);
        if t != tokens {
            return t;
        }
    }
}

fn swap_synonyms(tokens: &[String], rng: &mut ChaCha8Rng, all: bool) -> Vec<String> {
    tokens
        .iter()
        .map(|t| match SYNONYMS.iter().find(|(w, _)| w == t) {
            Some((_, alts)) if all || rng.random_bool(0.7) => {
                alts[rng.random_range(0..alts.len())].to_string()
            }
            _ => t.clone(),
        })
        .collect()
}
