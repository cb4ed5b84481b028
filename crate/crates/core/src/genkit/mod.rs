//! Profile-conditioned variant generation and backstory writing over a
//! pluggable completion provider.

mod http;
mod mock;
mod ratelimit;
mod sweep;
mod template;

use std::collections::{HashMap, HashSet};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Method, Profile, QueryVariant, Topic};

pub use http::HttpProvider;
pub use mock::MockProvider;
pub use ratelimit::TokenBucket;
pub use sweep::{parallel_ordered, run_sweep, SweepFailure, SweepOptions, SweepSummary};
pub use template::{build_neutral_prompt, build_prompt, BackstoryTemplate, PromptTemplate};

pub(crate) use template::{render, strip_comments};

/// Backstories longer than this are truncated.
pub const BACKSTORY_MAX_WORDS: usize = 120;

/// Environment variable holding the HTTP provider's API key.
pub const API_KEY_ENV: &str = "QVBENCH_API_KEY";

/// A text-completion backend. Implementations must be callable from several
/// threads at once.
pub trait Provider: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String>;
}

impl<F> Provider for F
where
    F: Fn(&str) -> Result<String> + Send + Sync,
{
    fn complete(&self, prompt: &str) -> Result<String> {
        self(prompt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: usize,
    pub timeout: Duration,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-4".into(),
            temperature: 1.0,
            max_retries: 3,
            timeout: Duration::from_secs(60),
        }
    }
}

impl ProviderConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.temperature >= 0.0) {
            return Err(Error::Validation(format!(
                "temperature {} must be >= 0",
                self.temperature
            )));
        }
        if self.endpoint.trim().is_empty() {
            return Err(Error::Validation("provider endpoint must be set".into()));
        }
        Ok(())
    }
}

/// One successful (topic, profile) generation call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationLog {
    pub topic_id: String,
    pub profile_id: String,
    pub raw_response: String,
    pub parsed: Vec<String>,
    pub attempts: usize,
}

fn strip_code_fence(text: &str) -> &str {
    let t = text.trim();
    let Some(inner) = t.strip_prefix("```") else {
        return t;
    };
    let inner = inner.strip_suffix("```").unwrap_or(inner);
    // drop an info string such as `json`
    match inner.find('\n') {
        Some(nl) if !inner[..nl].contains('[') => inner[nl + 1..].trim(),
        _ => inner.trim(),
    }
}

/// `1. text`, `2) text`, `- text` or `* text`.
fn list_item(line: &str) -> Option<&str> {
    let l = line.trim();
    if let Some(rest) = l.strip_prefix("- ").or_else(|| l.strip_prefix("* ")) {
        return Some(rest.trim());
    }
    let digits = l.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 {
        return None;
    }
    let rest = &l[digits..];
    rest.strip_prefix('.')
        .or_else(|| rest.strip_prefix(')'))
        .map(|r| r.trim().trim_matches('"').trim())
}

/// Reads a JSON array of strings, falling back to a numbered or bulleted list.
/// Fails unless exactly `n` non-empty entries are found.
pub fn parse_variant_response(raw: &str, n: usize) -> Result<Vec<String>> {
    let body = strip_code_fence(raw);
    let items: Vec<String> = match serde_json::from_str::<Vec<String>>(body) {
        Ok(v) => v.into_iter().map(|s| s.trim().to_string()).collect(),
        Err(_) => {
            let start = body.find('[');
            let end = body.rfind(']');
            let embedded = match (start, end) {
                (Some(s), Some(e)) if s < e => {
                    serde_json::from_str::<Vec<String>>(&body[s..=e]).ok()
                }
                _ => None,
            };
            match embedded {
                Some(v) => v.into_iter().map(|s| s.trim().to_string()).collect(),
                None => body
                    .lines()
                    .filter_map(list_item)
                    .map(str::to_string)
                    .collect(),
            }
        }
    };
    if items.len() != n {
        return Err(Error::Validation(format!(
            "expected {n} variants, found {}",
            items.len()
        )));
    }
    if items.iter().any(|s| s.is_empty()) {
        return Err(Error::Validation("empty variant in response".into()));
    }
    Ok(items)
}

/// Asks for variants, retrying the same prompt up to `max_retries` times when the
/// response does not parse. Transport errors are returned immediately.
pub fn generate_variants(
    provider: &dyn Provider,
    topic: &Topic,
    profile: &Profile,
    template: &PromptTemplate,
    max_retries: usize,
) -> Result<(Vec<QueryVariant>, GenerationLog)> {
    let prompt = if profile.method == Method::Neutral {
        build_neutral_prompt(topic, template)
    } else {
        build_prompt(topic, profile, template)?
    };
    let mut raw_responses = Vec::new();
    for attempt in 1..=max_retries + 1 {
        let raw = provider.complete(&prompt)?;
        match parse_variant_response(&raw, template.n_variants) {
            Ok(parsed) => {
                let variants = parsed
                    .iter()
                    .enumerate()
                    .map(|(i, text)| QueryVariant {
                        topic_id: topic.topic_id.clone(),
                        profile_id: profile.profile_id.clone(),
                        index: (i + 1) as u8,
                        text: text.clone(),
                    })
                    .collect();
                let log = GenerationLog {
                    topic_id: topic.topic_id.clone(),
                    profile_id: profile.profile_id.clone(),
                    raw_response: raw,
                    parsed,
                    attempts: attempt,
                };
                return Ok((variants, log));
            }
            Err(e) => {
                log::warn!(
                    "topic {} profile {}: attempt {attempt} unusable ({e})",
                    topic.topic_id,
                    profile.profile_id
                );
                raw_responses.push(raw);
            }
        }
    }
    Err(Error::Generation {
        topic_id: topic.topic_id.clone(),
        profile_id: profile.profile_id.clone(),
        attempts: max_retries + 1,
        raw_responses,
    })
}

/// Keeps the first `max_words` whitespace-separated words of one paragraph.
fn truncate_words(text: &str, max_words: usize) -> String {
    text.split_whitespace()
        .take(max_words)
        .collect::<Vec<_>>()
        .join(" ")
}

/// One-paragraph narrative of the topic's information need, truncated to the
/// template's word limit. Empty responses are retried.
pub fn generate_backstory(
    provider: &dyn Provider,
    topic: &Topic,
    template: &BackstoryTemplate,
    max_retries: usize,
) -> Result<String> {
    topic.check()?;
    let prompt = template.build(topic);
    let mut raw_responses = Vec::new();
    for _ in 0..=max_retries {
        let raw = provider.complete(&prompt)?;
        let text = truncate_words(&raw, template.max_words);
        if !text.is_empty() {
            return Ok(text);
        }
        raw_responses.push(raw);
    }
    Err(Error::Generation {
        topic_id: topic.topic_id.clone(),
        profile_id: "backstory".into(),
        attempts: max_retries + 1,
        raw_responses,
    })
}

/// (topic, profile) pairs still lacking a full set of `n` variants, in input order.
pub fn pending_pairs<'a>(
    pairs: &'a [(Topic, Profile)],
    existing: &[QueryVariant],
    n: usize,
) -> Vec<&'a (Topic, Profile)> {
    let mut have: HashMap<(&str, &str), HashSet<u8>> = HashMap::new();
    for v in existing {
        have.entry((v.topic_id.as_str(), v.profile_id.as_str()))
            .or_default()
            .insert(v.index);
    }
    pairs
        .iter()
        .filter(|(t, p)| {
            have.get(&(t.topic_id.as_str(), p.profile_id.as_str()))
                .is_none_or(|idx| (1..=n as u8).any(|i| !idx.contains(&i)))
        })
        .collect()
}
