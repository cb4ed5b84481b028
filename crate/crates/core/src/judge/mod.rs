//! Judgment coverage, model relevance labeling with a per-pair cache, qrels
//! merging and agreement with human assessors.

mod agreement;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genkit::{render, strip_comments, Provider};
use crate::model::{Passage, Qrel, QrelSource, QueryKey, RunRecord, Topic};

pub use agreement::{binarize, cohen_kappa, krippendorff_alpha, mae, AgreementReport, MAX_GRADE};

static DEFAULT_LABEL_TEMPLATE: &str = include_str!("../../data/prompts/label.txt");

/// The 4-point graded relevance scale shown to the labeler.
pub const DEFAULT_SCALE: &str = "3 = perfectly relevant: the passage is dedicated to the need and contains the exact answer.\n\
2 = highly relevant: the passage answers the need but the answer may be unclear or hidden among other content.\n\
1 = related: the passage seems related to the need but does not answer it.\n\
0 = irrelevant: the passage has nothing to do with the need.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub system_id: String,
    pub profile_id: String,
    pub k: usize,
    pub judged: usize,
    pub total: usize,
    pub missing_fraction: f64,
}

impl CoverageReport {
    pub const CSV_HEADER: &'static [&'static str] = &[
        "system_id",
        "profile_id",
        "k",
        "judged",
        "total",
        "missing_fraction",
    ];

    fn new(system_id: &str, profile_id: &str, k: usize, judged: usize, total: usize) -> Self {
        CoverageReport {
            system_id: system_id.into(),
            profile_id: profile_id.into(),
            k,
            judged,
            total,
            missing_fraction: if total == 0 {
                0.0
            } else {
                1.0 - judged as f64 / total as f64
            },
        }
    }
}

/// Label used for aggregate rows.
pub const ALL: &str = "all";

/// Share of top-`k` (query, passage) pairs lacking a human judgment, per
/// (system, profile), per system over all profiles, and overall. Qrels are
/// keyed by topic id, so every variant of a topic shares the seed's judgments.
pub fn coverage(runs: &[RunRecord], qrels: &[Qrel], k: usize) -> Result<Vec<CoverageReport>> {
    if k == 0 {
        return Err(Error::Contract("k must be at least 1".into()));
    }
    let judged: HashSet<(&str, &str)> = qrels
        .iter()
        .filter(|q| q.source == QrelSource::Human)
        .map(|q| (q.query_id.as_str(), q.passage_id.as_str()))
        .collect();
    let mut cells: BTreeMap<(String, String), (usize, usize)> = BTreeMap::new();
    for r in runs.iter().filter(|r| r.rank as usize <= k) {
        let key = QueryKey::parse(&r.query_id)?;
        let hit = judged.contains(&(key.topic_id.as_str(), r.passage_id.as_str())) as usize;
        for cell in [
            (r.system_id.clone(), key.profile_id.clone()),
            (r.system_id.clone(), ALL.to_string()),
            (ALL.to_string(), ALL.to_string()),
        ] {
            let e = cells.entry(cell).or_default();
            e.0 += hit;
            e.1 += 1;
        }
    }
    Ok(cells
        .into_iter()
        .map(|((s, p), (j, t))| CoverageReport::new(&s, &p, k, j, t))
        .collect())
}

/// Distinct (topic_id, passage_id) pairs in the top `k` of any run, sorted.
pub fn pairs_to_label(runs: &[RunRecord], k: usize) -> Result<Vec<(String, String)>> {
    let mut set = BTreeSet::new();
    for r in runs.iter().filter(|r| r.rank as usize <= k) {
        set.insert((QueryKey::parse(&r.query_id)?.topic_id, r.passage_id.clone()));
    }
    Ok(set.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTemplate {
    pub text: String,
}

impl Default for LabelTemplate {
    fn default() -> Self {
        LabelTemplate {
            text: strip_comments(DEFAULT_LABEL_TEMPLATE),
        }
    }
}

impl LabelTemplate {
    pub fn load(path: &Path) -> Result<Self> {
        let text = strip_comments(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?);
        for needle in ["{backstory}", "{passage}"] {
            if !text.contains(needle) {
                return Err(Error::Validation(format!(
                    "label template must contain {needle}"
                )));
            }
        }
        Ok(LabelTemplate { text })
    }

    pub fn build(&self, backstory: Option<&str>, passage: &str, scale: &str) -> Result<String> {
        let backstory = backstory.filter(|b| !b.trim().is_empty()).ok_or_else(|| {
            Error::Contract(
                "topic has no backstory; generate one with generate_backstory first".into(),
            )
        })?;
        // Backstory and passage must stay on one line each.
        let one_line = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
        Ok(render(
            &self.text,
            &[
                ("backstory", &one_line(backstory)),
                ("passage", &one_line(passage)),
                ("scale", scale),
            ],
        ))
    }
}

/// Renders the bundled labeling prompt.
pub fn build_label_prompt(
    backstory: Option<&str>,
    passage: &str,
    scale_description: &str,
) -> Result<String> {
    LabelTemplate::default().build(backstory, passage, scale_description)
}

/// Accepts a response holding exactly one integer, which must be a valid grade.
pub fn parse_grade(raw: &str) -> Option<u8> {
    let numbers: Vec<&str> = raw
        .split(|c: char| !c.is_ascii_digit())
        .filter(|s| !s.is_empty())
        .collect();
    match numbers.as_slice() {
        [n] => n.parse::<u8>().ok().filter(|&g| g <= MAX_GRADE),
        _ => None,
    }
}

/// Provenance of one model label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelLogEntry {
    pub topic_id: String,
    pub passage_id: String,
    pub grade: u8,
    pub attempts: usize,
    pub raw_response: String,
}

type CacheCell = Arc<Mutex<Option<u8>>>;

/// Labels (topic, passage) pairs through a provider. Each pair is sent to the
/// provider at most once; concurrent requests for the same pair wait for the
/// first.
pub struct Labeler<'a> {
    provider: &'a dyn Provider,
    template: LabelTemplate,
    scale: String,
    max_retries: usize,
    cache: Mutex<HashMap<(String, String), CacheCell>>,
    calls: AtomicUsize,
}

impl<'a> Labeler<'a> {
    pub fn new(provider: &'a dyn Provider, template: LabelTemplate, max_retries: usize) -> Self {
        Labeler {
            provider,
            template,
            scale: DEFAULT_SCALE.to_string(),
            max_retries,
            cache: Mutex::new(HashMap::new()),
            calls: AtomicUsize::new(0),
        }
    }

    /// Seeds the cache with labels from an earlier run.
    pub fn preload(&self, labels: &[Qrel]) {
        let mut cache = self.cache.lock().expect("label cache lock");
        for q in labels.iter().filter(|q| q.source == QrelSource::Llm) {
            cache.insert(
                (q.query_id.clone(), q.passage_id.clone()),
                Arc::new(Mutex::new(Some(q.grade))),
            );
        }
    }

    /// Number of provider calls made so far.
    pub fn provider_calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Returns the label and, when the provider was consulted, its log entry.
    pub fn label(&self, topic: &Topic, passage: &Passage) -> Result<(Qrel, Option<LabelLogEntry>)> {
        let cell = {
            let mut cache = self.cache.lock().expect("label cache lock");
            cache
                .entry((topic.topic_id.clone(), passage.passage_id.clone()))
                .or_default()
                .clone()
        };
        let mut slot = cell.lock().expect("label cell lock");
        let qrel = |grade| Qrel {
            query_id: topic.topic_id.clone(),
            passage_id: passage.passage_id.clone(),
            grade,
            source: QrelSource::Llm,
        };
        if let Some(grade) = *slot {
            return Ok((qrel(grade), None));
        }
        let prompt = self
            .template
            .build(topic.backstory.as_deref(), &passage.text, &self.scale)?;
        let mut raw_responses = Vec::new();
        for attempt in 1..=self.max_retries + 1 {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let raw = self.provider.complete(&prompt)?;
            if let Some(grade) = parse_grade(&raw) {
                *slot = Some(grade);
                let entry = LabelLogEntry {
                    topic_id: topic.topic_id.clone(),
                    passage_id: passage.passage_id.clone(),
                    grade,
                    attempts: attempt,
                    raw_response: raw,
                };
                return Ok((qrel(grade), Some(entry)));
            }
            raw_responses.push(raw);
        }
        Err(Error::Labeling {
            topic_id: topic.topic_id.clone(),
            passage_id: passage.passage_id.clone(),
            attempts: self.max_retries + 1,
            raw_responses,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergePolicy {
    Human,
    Llm,
    #[default]
    HumanPreferred,
}

impl FromStr for MergePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "human" => Ok(MergePolicy::Human),
            "llm" => Ok(MergePolicy::Llm),
            "human-preferred" => Ok(MergePolicy::HumanPreferred),
            other => Err(Error::Validation(format!(
                "unknown merge policy {other:?} (expected human, llm or human-preferred)"
            ))),
        }
    }
}

/// Combines human and model qrels. Under `HumanPreferred` a model label is used
/// only where no human judgment exists. Output is sorted by (query, passage).
pub fn merge_qrels(human: &[Qrel], llm: &[Qrel], policy: MergePolicy) -> Vec<Qrel> {
    let mut merged: BTreeMap<(String, String), Qrel> = BTreeMap::new();
    let mut put = |qs: &[Qrel], overwrite: bool| {
        for q in qs {
            let key = (q.query_id.clone(), q.passage_id.clone());
            if overwrite || !merged.contains_key(&key) {
                merged.insert(key, q.clone());
            }
        }
    };
    match policy {
        MergePolicy::Human => put(human, true),
        MergePolicy::Llm => put(llm, true),
        MergePolicy::HumanPreferred => {
            put(human, true);
            put(llm, false);
        }
    }
    merged.into_values().collect()
}

/// (human, model) grade pairs for every (query, passage) judged by both.
pub fn paired_grades(human: &[Qrel], llm: &[Qrel]) -> Vec<(u8, u8)> {
    let model: HashMap<(&str, &str), u8> = llm
        .iter()
        .map(|q| ((q.query_id.as_str(), q.passage_id.as_str()), q.grade))
        .collect();
    type Keyed<'a> = ((&'a str, &'a str), (u8, u8));
    let mut pairs: Vec<Keyed> = human
        .iter()
        .filter_map(|h| {
            let key = (h.query_id.as_str(), h.passage_id.as_str());
            model.get(&key).map(|&m| (key, (h.grade, m)))
        })
        .collect();
    pairs.sort();
    pairs.into_iter().map(|(_, p)| p).collect()
}
