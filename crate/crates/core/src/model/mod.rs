//! Domain types shared by every pipeline stage, plus their file formats.

mod io;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    bundled_profiles, parse_annotations, parse_jsonl, parse_passages, parse_profiles, parse_qrels,
    parse_qrels_str, parse_topics, parse_topics_str, parse_trec_run, parse_trec_run_str,
    read_annotations, read_jsonl, read_variants, read_variants_str, write_annotations, write_csv,
    write_jsonl, write_qrels, write_topics_jsonl, write_trec_run, write_variants, JsonlAppender,
    PassageFormat, TopicFormat,
};

/// Profile id reserved for the unmodified seed queries.
pub const SEED_PROFILE: &str = "seed";

/// Variants requested per (topic, profile) pair.
pub const VARIANTS_PER_PAIR: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub topic_id: String,
    pub seed_query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backstory: Option<String>,
}

impl Topic {
    pub fn new(topic_id: impl Into<String>, seed_query: impl Into<String>) -> Result<Self> {
        let topic = Topic {
            topic_id: topic_id.into(),
            seed_query: seed_query.into(),
            backstory: None,
        };
        topic.check()?;
        Ok(topic)
    }

    pub fn check(&self) -> Result<()> {
        if self.topic_id.trim().is_empty() {
            return Err(Error::Validation("topic_id must be non-empty".into()));
        }
        if self.seed_query.trim().is_empty() {
            return Err(Error::Validation(format!(
                "topic {} has an empty seed query",
                self.topic_id
            )));
        }
        Ok(())
    }
}

/// Family of transformation profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Persona,
    Group,
    Textual,
    Neutral,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Persona,
        Method::Group,
        Method::Textual,
        Method::Neutral,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Persona => "persona",
            Method::Group => "group",
            Method::Textual => "textual",
            Method::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "persona" => Ok(Method::Persona),
            "group" => Ok(Method::Group),
            "textual" => Ok(Method::Textual),
            "neutral" => Ok(Method::Neutral),
            other => Err(Error::Validation(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub profile_id: String,
    pub method: Method,
    pub name: String,
    #[serde(default)]
    pub description: String,
}

impl Profile {
    /// The profile-free setting used for neutral variants.
    pub fn neutral() -> Self {
        Profile {
            profile_id: "neutral".into(),
            method: Method::Neutral,
            name: "Neutral".into(),
            description: String::new(),
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.profile_id.trim().is_empty() {
            return Err(Error::Validation("profile_id must be non-empty".into()));
        }
        if self.method == Method::Neutral && !self.description.is_empty() {
            return Err(Error::Validation(format!(
                "neutral profile {} must not carry a description",
                self.profile_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct QueryVariant {
    pub topic_id: String,
    pub profile_id: String,
    pub index: u8,
    pub text: String,
}

impl QueryVariant {
    pub fn query_id(&self) -> String {
        QueryKey::new(&self.topic_id, &self.profile_id, self.index).query_id()
    }
}

/// Identity of one issued query: a seed or one variant of it.
///
/// Seeds serialize as the bare topic id so imported runs over the original
/// topics line up; variants serialize as `topic:profile:index`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QueryKey {
    pub topic_id: String,
    pub profile_id: String,
    pub index: u8,
}

impl QueryKey {
    pub fn new(topic_id: &str, profile_id: &str, index: u8) -> Self {
        QueryKey {
            topic_id: topic_id.to_string(),
            profile_id: profile_id.to_string(),
            index,
        }
    }

    pub fn seed(topic_id: &str) -> Self {
        QueryKey::new(topic_id, SEED_PROFILE, 1)
    }

    pub fn query_id(&self) -> String {
        if self.profile_id == SEED_PROFILE {
            self.topic_id.clone()
        } else {
            format!("{}:{}:{}", self.topic_id, self.profile_id, self.index)
        }
    }

    pub fn parse(query_id: &str) -> Result<Self> {
        let parts: Vec<&str> = query_id.split(':').collect();
        match parts.as_slice() {
            [topic] if !topic.is_empty() => Ok(QueryKey::seed(topic)),
            [topic, profile, index] if !topic.is_empty() && !profile.is_empty() => {
                let index = index.parse::<u8>().map_err(|_| {
                    Error::Validation(format!("bad variant index in query id {query_id:?}"))
                })?;
                Ok(QueryKey::new(topic, profile, index))
            }
            _ => Err(Error::Validation(format!(
                "unrecognised query id {query_id:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub system_id: String,
    pub query_id: String,
    pub passage_id: String,
    pub rank: u32,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QrelSource {
    Human,
    Llm,
}

impl QrelSource {
    pub fn as_str(self) -> &'static str {
        match self {
            QrelSource::Human => "human",
            QrelSource::Llm => "llm",
        }
    }
}

impl FromStr for QrelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "human" => Ok(QrelSource::Human),
            "llm" => Ok(QrelSource::Llm),
            other => Err(Error::Validation(format!("unknown qrel source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qrel {
    pub query_id: String,
    pub passage_id: String,
    pub grade: u8,
    pub source: QrelSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationTask {
    Similarity,
    Alignment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub pair_id: String,
    pub annotator_id: String,
    pub task: AnnotationTask,
    /// Profile that produced the variant; absent on gold questions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_id: Option<String>,
    pub seed_query: String,
    pub variant: String,
    pub answer: String,
    #[serde(default)]
    pub is_gold: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_answer: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub passage_id: String,
    pub text: String,
}

/// Number of variants a completed generation sweep must contain.
pub fn expected_variant_count(num_seeds: usize, num_profiles: usize, per_pair: usize) -> usize {
    num_seeds * num_profiles * per_pair
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_counts_follow_collection_sizes() {
        assert_eq!(expected_variant_count(53, 6, 3), 954);
        assert_eq!(expected_variant_count(76, 8, 3), 1824);
        assert_eq!(expected_variant_count(0, 8, 3), 0);
        assert_eq!(expected_variant_count(53, 8, 3), 1272);
        assert_eq!(expected_variant_count(53, 4, 3), 636);
        assert_eq!(expected_variant_count(53, 1, 3), 159);
        assert_eq!(expected_variant_count(76, 6, 3), 1368);
        assert_eq!(expected_variant_count(76, 4, 3), 912);
        assert_eq!(expected_variant_count(76, 1, 3), 228);
    }

    #[test]
    fn query_keys_round_trip() {
        let seed = QueryKey::seed("2001");
        assert_eq!(seed.query_id(), "2001");
        assert_eq!(QueryKey::parse("2001").unwrap(), seed);

        let v = QueryKey::new("2001", "non-native", 3);
        assert_eq!(v.query_id(), "2001:non-native:3");
        assert_eq!(QueryKey::parse(&v.query_id()).unwrap(), v);
        assert!(QueryKey::parse("a:b").is_err());
        assert!(QueryKey::parse("a:b:x").is_err());
    }

    #[test]
    fn topic_rejects_blank_seed() {
        assert!(Topic::new("1", "  ").is_err());
        assert!(Topic::new("", "q").is_err());
        assert!(Topic::new("1", "q").is_ok());
    }

    #[test]
    fn neutral_profile_has_no_description() {
        let mut p = Profile::neutral();
        assert!(p.check().is_ok());
        p.description = "x".into();
        assert!(p.check().is_err());
    }
}
