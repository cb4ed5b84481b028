use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use unicode_normalization::UnicodeNormalization;

use super::{AnnotationRecord, Passage, Profile, Qrel, QrelSource, QueryVariant, RunRecord, Topic};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopicFormat {
    Tsv,
    Jsonl,
}

impl TopicFormat {
    /// Guess from the file extension; anything other than `.jsonl`/`.json` is TSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => TopicFormat::Jsonl,
            _ => TopicFormat::Tsv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassageFormat {
    Tsv,
    Jsonl,
}

impl PassageFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => PassageFormat::Jsonl,
            _ => PassageFormat::Tsv,
        }
    }
}

/// Reads a file as UTF-8 and normalizes it to NFC.
fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_utf8(bytes, &path.display().to_string())
}

fn decode_utf8(bytes: Vec<u8>, origin: &str) -> Result<String> {
    match String::from_utf8(bytes) {
        Ok(s) => Ok(s.nfc().collect()),
        Err(e) => {
            let valid = e.utf8_error().valid_up_to();
            let line = e.as_bytes()[..valid]
                .iter()
                .filter(|&&b| b == b'\n')
                .count()
                + 1;
            Err(Error::parse(origin, line, "invalid UTF-8 byte sequence"))
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn non_blank_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

pub fn parse_jsonl<T: DeserializeOwned>(text: &str, origin: &str) -> Result<Vec<T>> {
    non_blank_lines(text)
        .map(|(line, l)| {
            serde_json::from_str(l).map_err(|e| Error::parse(origin, line, e.to_string()))
        })
        .collect()
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    parse_jsonl(&read_text(path)?, &path.display().to_string())
}

pub fn write_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        let line = serde_json::to_string(item).expect("plain data serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Line-at-a-time JSONL writer that appends to an existing file.
pub struct JsonlAppender {
    path: std::path::PathBuf,
    w: BufWriter<fs::File>,
}

impl JsonlAppender {
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
        }
        let file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(JsonlAppender {
            path: path.to_path_buf(),
            w: BufWriter::new(file),
        })
    }

    /// Appends one record and flushes, so an interrupted run keeps every finished line.
    pub fn append<T: Serialize>(&mut self, item: &T) -> Result<()> {
        let line = serde_json::to_string(item).expect("plain data serializes");
        writeln!(self.w, "{line}").map_err(|e| Error::io(&self.path, e))?;
        self.w.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Writes a CSV with an explicit header so empty tables still carry their schema.
pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let to_io = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(create(path)?);
    w.write_record(header).map_err(to_io)?;
    for row in rows {
        w.serialize(row).map_err(to_io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn parse_topics(path: &Path, format: TopicFormat) -> Result<Vec<Topic>> {
    let text = read_text(path)?;
    parse_topics_str(&text, format, &path.display().to_string())
}

pub fn parse_topics_str(text: &str, format: TopicFormat, origin: &str) -> Result<Vec<Topic>> {
    let topics: Vec<Topic> = match format {
        TopicFormat::Jsonl => parse_jsonl(text, origin)?,
        TopicFormat::Tsv => non_blank_lines(text)
            .map(|(line, l)| {
                let fields: Vec<&str> = l.split('\t').collect();
                if fields.len() != 2 {
                    return Err(Error::parse(
                        origin,
                        line,
                        format!("expected 2 tab-separated fields, found {}", fields.len()),
                    ));
                }
                Ok(Topic {
                    topic_id: fields[0].trim().to_string(),
                    seed_query: fields[1].trim().to_string(),
                    backstory: None,
                })
            })
            .collect::<Result<_>>()?,
    };
    let mut seen = HashSet::new();
    for t in &topics {
        t.check()?;
        if !seen.insert(t.topic_id.as_str()) {
            return Err(Error::Validation(format!(
                "duplicate topic_id {}",
                t.topic_id
            )));
        }
    }
    Ok(topics)
}

pub fn write_topics_jsonl(topics: &[Topic], path: &Path) -> Result<()> {
    write_jsonl(topics, path)
}

/// Parses a 6-column TREC run (`qid Q0 docid rank score tag`).
///
/// Records come back grouped by (tag, qid) in order of first appearance and
/// sorted by rank within each group.
pub fn parse_trec_run(path: &Path) -> Result<Vec<RunRecord>> {
    let text = read_text(path)?;
    parse_trec_run_str(&text, &path.display().to_string())
}

pub fn parse_trec_run_str(text: &str, origin: &str) -> Result<Vec<RunRecord>> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: HashMap<(String, String), Vec<RunRecord>> = HashMap::new();
    for (line, l) in non_blank_lines(text) {
        let cols: Vec<&str> = l.split_whitespace().collect();
        if cols.len() != 6 {
            return Err(Error::parse(
                origin,
                line,
                format!("expected 6 columns, found {}", cols.len()),
            ));
        }
        let rank: u32 = cols[3]
            .parse()
            .map_err(|_| Error::parse(origin, line, format!("non-integer rank {:?}", cols[3])))?;
        let score: f64 = cols[4]
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| {
                Error::parse(origin, line, format!("non-numeric score {:?}", cols[4]))
            })?;
        let rec = RunRecord {
            system_id: cols[5].to_string(),
            query_id: cols[0].to_string(),
            passage_id: cols[2].to_string(),
            rank,
            score,
        };
        let key = (rec.system_id.clone(), rec.query_id.clone());
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(rec);
    }

    let mut out = Vec::new();
    for key in order {
        let mut group = groups.remove(&key).expect("group recorded");
        group.sort_by_key(|r| r.rank);
        for (i, r) in group.iter().enumerate() {
            if r.rank as usize != i + 1 {
                return Err(Error::Validation(format!(
                    "run {} query {}: ranks are not 1..{} (found rank {} at position {})",
                    key.0,
                    key.1,
                    group.len(),
                    r.rank,
                    i + 1
                )));
            }
        }
        for pair in group.windows(2) {
            if pair[1].score > pair[0].score {
                return Err(Error::Validation(format!(
                    "run {} query {}: score increases from rank {} to rank {}",
                    key.0, key.1, pair[0].rank, pair[1].rank
                )));
            }
        }
        let mut passages = HashSet::new();
        for r in &group {
            if !passages.insert(r.passage_id.as_str()) {
                return Err(Error::Validation(format!(
                    "run {} query {}: passage {} retrieved twice",
                    key.0, key.1, r.passage_id
                )));
            }
        }
        out.extend(group);
    }
    Ok(out)
}

pub fn write_trec_run(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for r in records {
        writeln!(
            w,
            "{} Q0 {} {} {} {}",
            r.query_id, r.passage_id, r.rank, r.score, r.system_id
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parses TREC qrels. Four columns (`qid 0 docid grade`) denote human
/// judgments; an optional fifth column names the source (`human`/`llm`).
pub fn parse_qrels(path: &Path) -> Result<Vec<Qrel>> {
    let text = read_text(path)?;
    parse_qrels_str(&text, &path.display().to_string())
}

pub fn parse_qrels_str(text: &str, origin: &str) -> Result<Vec<Qrel>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, l) in non_blank_lines(text) {
        let cols: Vec<&str> = l.split_whitespace().collect();
        if cols.len() != 4 && cols.len() != 5 {
            return Err(Error::parse(
                origin,
                line,
                format!("expected 4 or 5 columns, found {}", cols.len()),
            ));
        }
        let grade: i64 = cols[3]
            .parse()
            .map_err(|_| Error::parse(origin, line, format!("non-integer grade {:?}", cols[3])))?;
        if !(0..=3).contains(&grade) {
            return Err(Error::Validation(format!(
                "{origin}:{line}: grade {grade} outside 0..3"
            )));
        }
        let source = match cols.get(4) {
            Some(s) => s
                .parse()
                .map_err(|e: Error| Error::parse(origin, line, e.to_string()))?,
            None => QrelSource::Human,
        };
        let q = Qrel {
            query_id: cols[0].to_string(),
            passage_id: cols[2].to_string(),
            grade: grade as u8,
            source,
        };
        if !seen.insert((q.query_id.clone(), q.passage_id.clone(), q.source)) {
            return Err(Error::Validation(format!(
                "{origin}:{line}: duplicate judgment for ({}, {})",
                q.query_id, q.passage_id
            )));
        }
        out.push(q);
    }
    Ok(out)
}

/// Writes qrels; human judgments keep the plain 4-column layout.
pub fn write_qrels(qrels: &[Qrel], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for q in qrels {
        let res = match q.source {
            QrelSource::Human => writeln!(w, "{} 0 {} {}", q.query_id, q.passage_id, q.grade),
            QrelSource::Llm => writeln!(w, "{} 0 {} {} llm", q.query_id, q.passage_id, q.grade),
        };
        res.map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_variants(variants: &[QueryVariant], path: &Path) -> Result<()> {
    write_jsonl(variants, path)
}

pub fn read_variants(path: &Path) -> Result<Vec<QueryVariant>> {
    let text = read_text(path)?;
    read_variants_str(&text, &path.display().to_string())
}

pub fn read_variants_str(text: &str, origin: &str) -> Result<Vec<QueryVariant>> {
    let variants: Vec<QueryVariant> = parse_jsonl(text, origin)?;
    for v in &variants {
        if v.text.trim().is_empty() {
            return Err(Error::Validation(format!(
                "variant ({}, {}, {}) has empty text",
                v.topic_id, v.profile_id, v.index
            )));
        }
    }
    Ok(variants)
}

pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let text = read_text(path)?;
    parse_annotations(&text, &path.display().to_string())
}

pub fn parse_annotations(text: &str, origin: &str) -> Result<Vec<AnnotationRecord>> {
    let records: Vec<AnnotationRecord> = parse_jsonl(text, origin)?;
    for r in &records {
        if r.is_gold && r.gold_answer.is_none() {
            return Err(Error::Validation(format!(
                "gold record {} by {} lacks gold_answer",
                r.pair_id, r.annotator_id
            )));
        }
    }
    Ok(records)
}

pub fn write_annotations(records: &[AnnotationRecord], path: &Path) -> Result<()> {
    write_jsonl(records, path)
}

/// Loads profiles from a JSON array file, or from every `*.json` file in a
/// directory (sorted by file name).
pub fn parse_profiles(path: &Path) -> Result<Vec<Profile>> {
    let files = if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("json"))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    let mut profiles = Vec::new();
    for file in files {
        let text = read_text(&file)?;
        let batch: Vec<Profile> = serde_json::from_str(&text)
            .map_err(|e| Error::parse(file.display().to_string(), e.line(), e.to_string()))?;
        profiles.extend(batch);
    }
    let mut ids = HashSet::new();
    let mut names = HashSet::new();
    for p in &profiles {
        p.check()?;
        if !ids.insert(p.profile_id.clone()) {
            return Err(Error::Validation(format!(
                "duplicate profile_id {}",
                p.profile_id
            )));
        }
        if !names.insert((p.method, p.name.clone())) {
            return Err(Error::Validation(format!(
                "duplicate profile name {} within method {}",
                p.name, p.method
            )));
        }
    }
    Ok(profiles)
}

static BUNDLED_PROFILES: [&str; 3] = [
    include_str!("../../data/profiles/group.json"),
    include_str!("../../data/profiles/persona.json"),
    include_str!("../../data/profiles/textual.json"),
];

/// The shipped persona, group and textual profiles (neutral is implicit).
pub fn bundled_profiles() -> Vec<Profile> {
    BUNDLED_PROFILES
        .iter()
        .flat_map(|text| {
            serde_json::from_str::<Vec<Profile>>(text).expect("bundled profiles parse")
        })
        .collect()
}

pub fn parse_passages(path: &Path, format: PassageFormat) -> Result<Vec<Passage>> {
    let text = read_text(path)?;
    let origin = path.display().to_string();
    let passages: Vec<Passage> = match format {
        PassageFormat::Jsonl => parse_jsonl(&text, &origin)?,
        PassageFormat::Tsv => non_blank_lines(&text)
            .map(|(line, l)| {
                let (id, body) = l
                    .split_once('\t')
                    .ok_or_else(|| Error::parse(&origin, line, "expected passage_id<TAB>text"))?;
                Ok(Passage {
                    passage_id: id.trim().to_string(),
                    text: body.trim().to_string(),
                })
            })
            .collect::<Result<_>>()?,
    };
    let mut seen = HashSet::new();
    for p in &passages {
        if p.passage_id.is_empty() || p.text.is_empty() {
            return Err(Error::Validation(format!(
                "passage {:?} has an empty id or body",
                p.passage_id
            )));
        }
        if !seen.insert(p.passage_id.as_str()) {
            return Err(Error::Validation(format!(
                "duplicate passage_id {}",
                p.passage_id
            )));
        }
    }
    Ok(passages)
}
