//! Desk-scale lexical retrieval: an inverted index over stemmed tokens, BM25
//! ranking and TREC run export.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{write_trec_run, Passage, RunRecord};
use crate::textkit::stemmed_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        let p = Bm25Params { k1, b };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.k1 > 0.0) || !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Validation(format!(
                "BM25 needs k1 > 0 and b in [0, 1], got k1={} b={}",
                self.k1, self.b
            )));
        }
        Ok(())
    }
}

/// Immutable after construction; maps are ordered so serialization is stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    /// term -> (passage_id, term frequency), sorted by passage_id
    pub postings: BTreeMap<String, Vec<(String, u32)>>,
    pub doc_lengths: BTreeMap<String, u32>,
    pub avg_doc_length: f64,
    pub doc_count: usize,
}

/// Indexes stemmed passage tokens. The result does not depend on input order.
pub fn build_index(passages: &[Passage]) -> Result<InvertedIndex> {
    if passages.is_empty() {
        return Err(Error::Validation("empty corpus".into()));
    }
    let mut doc_lengths = BTreeMap::new();
    let mut postings: BTreeMap<String, BTreeMap<String, u32>> = BTreeMap::new();
    for p in passages {
        let tokens = stemmed_tokens(&p.text);
        if doc_lengths
            .insert(p.passage_id.clone(), tokens.len() as u32)
            .is_some()
        {
            return Err(Error::Validation(format!(
                "duplicate passage id {}",
                p.passage_id
            )));
        }
        for t in tokens {
            *postings
                .entry(t)
                .or_default()
                .entry(p.passage_id.clone())
                .or_default() += 1;
        }
    }
    let total: u64 = doc_lengths.values().map(|&l| l as u64).sum();
    let doc_count = doc_lengths.len();
    Ok(InvertedIndex {
        postings: postings
            .into_iter()
            .map(|(t, docs)| (t, docs.into_iter().collect()))
            .collect(),
        avg_doc_length: total as f64 / doc_count as f64,
        doc_lengths,
        doc_count,
    })
}

impl InvertedIndex {
    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn tf(&self, term: &str, passage_id: &str) -> u32 {
        self.postings
            .get(term)
            .and_then(|p| {
                p.binary_search_by(|(id, _)| id.as_str().cmp(passage_id))
                    .ok()
                    .map(|i| p[i].1)
            })
            .unwrap_or(0)
    }

    /// `ln((N - df + 0.5) / (df + 0.5) + 1)`, never negative.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_count as f64;
        let df = self.df(term) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self).expect("index serializes");
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.line(), e.to_string()))
    }

    fn term_weight(&self, params: &Bm25Params, term: &str, tf: u32, doc_len: u32) -> f64 {
        let tf = tf as f64;
        let norm = params.k1 * (1.0 - params.b + params.b * doc_len as f64 / self.avg_doc_length);
        self.idf(term) * tf * (params.k1 + 1.0) / (tf + norm)
    }
}

/// BM25 of one passage. Query tokens are summed as given, so a repeated query
/// term contributes once per occurrence.
pub fn bm25_score(
    index: &InvertedIndex,
    params: &Bm25Params,
    query_tokens: &[String],
    passage_id: &str,
) -> Result<f64> {
    let &len = index
        .doc_lengths
        .get(passage_id)
        .ok_or_else(|| Error::Validation(format!("unknown passage {passage_id}")))?;
    Ok(query_tokens
        .iter()
        .map(|t| match index.tf(t, passage_id) {
            0 => 0.0,
            tf => index.term_weight(params, t, tf, len),
        })
        .sum())
}

/// Top-`k` passages matching at least one query term, by score descending and
/// then passage id ascending. The query is stemmed like the index.
pub fn search(
    index: &InvertedIndex,
    params: &Bm25Params,
    query: &str,
    k: usize,
) -> Vec<(String, f64)> {
    let tokens = stemmed_tokens(query);
    let mut scores: HashMap<&str, f64> = HashMap::new();
    for t in &tokens {
        let Some(postings) = index.postings.get(t) else {
            continue;
        };
        for (pid, tf) in postings {
            let w = index.term_weight(params, t, *tf, index.doc_lengths[pid]);
            *scores.entry(pid.as_str()).or_default() += w;
        }
    }
    let mut ranked: Vec<(String, f64)> = scores
        .into_iter()
        .map(|(p, s)| (p.to_string(), s))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}

/// Run records for one system, ranks starting at 1, in the given query order.
pub fn to_run_records(results: &[(String, Vec<(String, f64)>)], system_id: &str) -> Vec<RunRecord> {
    results
        .iter()
        .flat_map(|(qid, hits)| {
            hits.iter()
                .enumerate()
                .map(move |(i, (pid, score))| RunRecord {
                    system_id: system_id.to_string(),
                    query_id: qid.clone(),
                    passage_id: pid.clone(),
                    rank: i as u32 + 1,
                    score: *score,
                })
        })
        .collect()
}

pub fn export_run(
    results: &[(String, Vec<(String, f64)>)],
    system_id: &str,
    path: &Path,
) -> Result<()> {
    write_trec_run(&to_run_records(results, system_id), path)
}
