//! One function per pipeline stage. Each reads its inputs from the configured
//! paths or the output directory and writes its artifacts there.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use qvbench_core::evalstats::{
    build_matrix, mann_whitney_u, write_agreement_csv, write_anova_csv, write_tau_csv,
    write_tukey_csv, AnovaTable, EffectivenessMatrix, MannWhitney,
};
use qvbench_core::genkit::{
    generate_backstory, parallel_ordered, pending_pairs, run_sweep, BackstoryTemplate,
    HttpProvider, MockProvider, PromptTemplate, Provider, SweepFailure, SweepOptions, TokenBucket,
};
use qvbench_core::judge::{
    coverage, merge_qrels, paired_grades, pairs_to_label, AgreementReport, CoverageReport,
    LabelTemplate, Labeler, MergePolicy,
};
use qvbench_core::model::{
    bundled_profiles, parse_passages, parse_profiles, parse_qrels, parse_topics, parse_trec_run,
    read_annotations, read_jsonl, read_variants, write_csv, write_jsonl, write_qrels,
    write_topics_jsonl, write_trec_run, write_variants, JsonlAppender, Method, Passage,
    PassageFormat, Profile, Qrel, QrelSource, QueryKey, QueryVariant, RunRecord, Topic,
    TopicFormat, SEED_PROFILE, VARIANTS_PER_PAIR,
};
use qvbench_core::retrieval::{build_index, export_run, search, InvertedIndex};
use qvbench_core::textkit::{lexical_diversity, write_feature_csv, VariantFeatureRecord};
use qvbench_core::validate::{
    alignment_accuracy, alignment_scheme, correct_text, filter_by_gold, sample_for_annotation,
    similarity_accuracy, validate_variants, ConsensusReport, Dictionary, VERDICT_CSV_HEADER,
};
use qvbench_core::{Error, Result};
use serde::Serialize;

use crate::config::{PipelineConfig, ProviderKind};

/// File locations inside the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Layout {
            root: root.to_path_buf(),
        }
    }

    pub fn variants(&self) -> PathBuf {
        self.root.join("variants.jsonl")
    }
    pub fn generation_log(&self) -> PathBuf {
        self.root.join("generation_log.jsonl")
    }
    pub fn generation_failures(&self) -> PathBuf {
        self.root.join("generation_failures.jsonl")
    }
    pub fn validation(&self, file: &str) -> PathBuf {
        self.root.join("validation").join(file)
    }
    pub fn index(&self) -> PathBuf {
        self.root.join("index.json")
    }
    pub fn runs(&self) -> PathBuf {
        self.root.join("runs")
    }
    pub fn judge(&self, file: &str) -> PathBuf {
        self.root.join("judge").join(file)
    }
    pub fn eval(&self, file: &str) -> PathBuf {
        self.root.join("eval").join(file)
    }
    pub fn analysis(&self, file: &str) -> PathBuf {
        self.root.join("analysis").join(file)
    }
    pub fn report(&self, file: &str) -> PathBuf {
        self.root.join("report").join(file)
    }
}

pub fn make_provider(cfg: &PipelineConfig) -> Result<Box<dyn Provider>> {
    Ok(match cfg.provider {
        ProviderKind::Mock => Box::new(MockProvider::new(cfg.seed)),
        ProviderKind::Http => Box::new(HttpProvider::from_env(cfg.provider_config.clone())?),
    })
}

pub fn load_topics(cfg: &PipelineConfig) -> Result<Vec<Topic>> {
    let path = cfg.require(&cfg.topics, "topics")?;
    parse_topics(path, TopicFormat::from_path(path))
}

fn load_passages(cfg: &PipelineConfig) -> Result<Vec<Passage>> {
    let path = cfg.require(&cfg.corpus, "corpus")?;
    parse_passages(path, PassageFormat::from_path(path))
}

/// All configured profiles (neutral included), in file order.
pub fn load_profiles(cfg: &PipelineConfig) -> Result<Vec<Profile>> {
    let mut profiles = match &cfg.profiles {
        Some(path) => parse_profiles(path)?,
        None => bundled_profiles(),
    };
    if !profiles.iter().any(|p| p.method == Method::Neutral) {
        profiles.push(Profile::neutral());
    }
    Ok(profiles)
}

/// Profiles of the selected methods, grouped in method order.
pub fn selected_profiles(cfg: &PipelineConfig) -> Result<Vec<Profile>> {
    let all = load_profiles(cfg)?;
    Ok(cfg
        .methods
        .iter()
        .flat_map(|m| all.iter().filter(move |p| p.method == *m).cloned())
        .collect())
}

fn human_qrels(cfg: &PipelineConfig) -> Result<Vec<Qrel>> {
    match &cfg.qrels {
        Some(p) => Ok(parse_qrels(p)?
            .into_iter()
            .filter(|q| q.source == QrelSource::Human)
            .collect()),
        None => Ok(Vec::new()),
    }
}

// ---------------------------------------------------------------- generate

#[derive(Debug, Default)]
pub struct GenerateSummary {
    pub expected: usize,
    pub reused: usize,
    pub generated: usize,
    pub failures: Vec<SweepFailure>,
}

/// Generates the variants of every selected (topic, profile) pair that does
/// not already have a complete set on disk, then rewrites the variants file
/// in canonical pair order.
pub fn generate(cfg: &PipelineConfig, provider: &dyn Provider) -> Result<GenerateSummary> {
    let layout = Layout::new(&cfg.out);
    let topics = load_topics(cfg)?;
    let profiles = selected_profiles(cfg)?;
    let template = match &cfg.variant_template {
        Some(p) => PromptTemplate::load(p)?,
        None => PromptTemplate::default(),
    };
    let pairs: Vec<(Topic, Profile)> = topics
        .iter()
        .flat_map(|t| profiles.iter().map(move |p| (t.clone(), p.clone())))
        .collect();
    let order: HashMap<(&str, &str), usize> = pairs
        .iter()
        .enumerate()
        .map(|(i, (t, p))| ((t.topic_id.as_str(), p.profile_id.as_str()), i))
        .collect();

    let path = layout.variants();
    let existing = if path.exists() {
        read_variants(&path)?
    } else {
        Vec::new()
    };
    let mut counts: HashMap<(String, String), BTreeSet<u8>> = HashMap::new();
    for v in &existing {
        counts
            .entry((v.topic_id.clone(), v.profile_id.clone()))
            .or_default()
            .insert(v.index);
    }
    let complete = |v: &QueryVariant| {
        counts
            .get(&(v.topic_id.clone(), v.profile_id.clone()))
            .is_some_and(|s| s.len() == VARIANTS_PER_PAIR)
    };
    let kept: Vec<QueryVariant> = existing.iter().filter(|v| complete(v)).cloned().collect();
    if kept.len() < existing.len() {
        log::warn!(
            "dropping {} variants of incomplete pairs",
            existing.len() - kept.len()
        );
    }
    write_variants(&kept, &path)?;

    let pending: Vec<(Topic, Profile)> = pending_pairs(&pairs, &kept, VARIANTS_PER_PAIR)
        .into_iter()
        .cloned()
        .collect();
    log::info!(
        "generate: {} pairs, {} already complete, {} to generate",
        pairs.len(),
        pairs.len() - pending.len(),
        pending.len()
    );
    let bucket = cfg
        .rate_limit
        .map(|r| TokenBucket::new(cfg.workers.max(1), r));
    let options = SweepOptions {
        workers: cfg.workers,
        max_retries: cfg.provider_config.max_retries,
        rate_limit: bucket.as_ref(),
    };
    let mut variants_out = JsonlAppender::open(&path)?;
    let mut log_out = JsonlAppender::open(&layout.generation_log())?;
    let mut generated = 0;
    let sweep = run_sweep(provider, &template, &pending, &options, |vs, log| {
        for v in &vs {
            variants_out.append(v)?;
        }
        generated += vs.len();
        log_out.append(&log)
    })?;
    drop(variants_out);

    let mut all = read_variants(&path)?;
    all.sort_by_key(|v| {
        (
            order
                .get(&(v.topic_id.as_str(), v.profile_id.as_str()))
                .copied()
                .unwrap_or(usize::MAX),
            v.index,
        )
    });
    write_variants(&all, &path)?;

    #[derive(Serialize)]
    struct FailureRow<'a> {
        topic_id: &'a str,
        profile_id: &'a str,
        error: String,
    }
    let rows: Vec<FailureRow> = sweep
        .failures
        .iter()
        .map(|f| FailureRow {
            topic_id: &f.topic_id,
            profile_id: &f.profile_id,
            error: f.error.to_string(),
        })
        .collect();
    if rows.is_empty() {
        if layout.generation_failures().exists() {
            std::fs::remove_file(layout.generation_failures()).map_err(|e| Error::Io {
                path: layout.generation_failures(),
                source: e,
            })?;
        }
    } else {
        write_jsonl(&rows, &layout.generation_failures())?;
    }
    Ok(GenerateSummary {
        expected: pairs.len() * VARIANTS_PER_PAIR,
        reused: kept.len(),
        generated,
        failures: sweep.failures,
    })
}

// ---------------------------------------------------------------- validate

#[derive(Debug, Serialize)]
struct FeatureTestRow {
    feature: &'static str,
    profile_a: String,
    profile_b: String,
    mean_a: f64,
    mean_b: f64,
    u: f64,
    p: f64,
    significant: bool,
}

#[derive(Debug, Default)]
pub struct ValidateSummary {
    pub verdicts: usize,
    pub valid: usize,
    pub features: usize,
    pub consensus_written: bool,
}

/// Profile name whose variants are spell-corrected before lexical diversity.
const CORRECTED_PROFILE: &str = "child";

#[derive(Debug, Serialize)]
struct ProfileFeatureRow {
    profile_id: String,
    method: Method,
    variants: usize,
    mean_jaccard: f64,
    mean_length_words: f64,
    mean_fk_grade: f64,
    mean_lexical_diversity: f64,
    pooled_lexical_diversity: f64,
}

/// Per-profile feature means, with lexical diversity both averaged over
/// variants and pooled over all of a profile's variants.
fn write_profile_features(
    profiles: &[Profile],
    features: &[VariantFeatureRecord],
    diversity_texts: &[String],
    layout: &Layout,
) -> Result<()> {
    let mut rows = Vec::new();
    for profile in profiles {
        let idx: Vec<usize> = (0..features.len())
            .filter(|&i| features[i].profile_id == profile.profile_id)
            .collect();
        if idx.is_empty() {
            continue;
        }
        let n = idx.len() as f64;
        let mean = |get: fn(&VariantFeatureRecord) -> f64| {
            idx.iter().map(|&i| get(&features[i])).sum::<f64>() / n
        };
        let texts: Vec<&str> = idx.iter().map(|&i| diversity_texts[i].as_str()).collect();
        rows.push(ProfileFeatureRow {
            profile_id: profile.profile_id.clone(),
            method: profile.method,
            variants: idx.len(),
            mean_jaccard: mean(|r| r.jaccard),
            mean_length_words: mean(|r| r.length_words as f64),
            mean_fk_grade: mean(|r| r.fk_grade),
            mean_lexical_diversity: mean(|r| r.lexical_diversity),
            pooled_lexical_diversity: lexical_diversity(&texts)?,
        });
    }
    write_csv(
        &layout.validation("profile_features.csv"),
        &[
            "profile_id",
            "method",
            "variants",
            "mean_jaccard",
            "mean_length_words",
            "mean_fk_grade",
            "mean_lexical_diversity",
            "pooled_lexical_diversity",
        ],
        &rows,
    )
}

pub fn validate(cfg: &PipelineConfig) -> Result<ValidateSummary> {
    let layout = Layout::new(&cfg.out);
    let topics = load_topics(cfg)?;
    let profiles = load_profiles(cfg)?;
    let variants = read_variants(&layout.variants())?;
    let dictionary = match &cfg.dictionary {
        Some(p) => Dictionary::load(p)?,
        None => Dictionary::bundled(),
    };

    let verdicts = validate_variants(&variants, &topics, &profiles, &dictionary)?;
    let rows: Vec<(String, String, u8, String, bool, String)> = verdicts
        .iter()
        .map(|v| {
            let check = match v.check {
                qvbench_core::validate::Check::Order => "order",
                qvbench_core::validate::Check::Misspelling => "misspelling",
            };
            (
                v.topic_id.clone(),
                v.profile_id.clone(),
                v.index,
                check.to_string(),
                v.valid,
                v.detail.clone(),
            )
        })
        .collect();
    write_csv(
        &layout.validation("verdicts.csv"),
        VERDICT_CSV_HEADER,
        &rows,
    )?;
    let valid = verdicts.iter().filter(|v| v.valid).count();
    log::info!(
        "validate: {valid}/{} automatic checks passed",
        verdicts.len()
    );

    let seeds: HashMap<&str, &str> = topics
        .iter()
        .map(|t| (t.topic_id.as_str(), t.seed_query.as_str()))
        .collect();
    // Child variants are spell-corrected so typos do not inflate diversity.
    let corrected: HashSet<&str> = profiles
        .iter()
        .filter(|p| p.name.eq_ignore_ascii_case(CORRECTED_PROFILE))
        .map(|p| p.profile_id.as_str())
        .collect();
    let diversity_texts: Vec<String> = variants
        .iter()
        .map(|v| {
            if corrected.contains(v.profile_id.as_str()) {
                correct_text(&v.text, &dictionary)
            } else {
                v.text.clone()
            }
        })
        .collect();
    let features: Vec<VariantFeatureRecord> = variants
        .iter()
        .zip(&diversity_texts)
        .map(|(v, diversity_text)| {
            let seed = seeds.get(v.topic_id.as_str()).ok_or_else(|| {
                Error::Validation(format!("variant references unknown topic {}", v.topic_id))
            })?;
            VariantFeatureRecord::compute(
                &v.topic_id,
                &v.profile_id,
                v.index,
                seed,
                &v.text,
                diversity_text,
            )
        })
        .collect::<Result<_>>()?;
    write_feature_csv(&features, &layout.validation("features.csv"))?;
    write_profile_features(&profiles, &features, &diversity_texts, &layout)?;

    // Pairwise Mann-Whitney tests of each feature between profiles.
    let mut by_profile: Vec<(String, Vec<&VariantFeatureRecord>)> = Vec::new();
    for f in &features {
        match by_profile.iter_mut().find(|(p, _)| *p == f.profile_id) {
            Some((_, v)) => v.push(f),
            None => by_profile.push((f.profile_id.clone(), vec![f])),
        }
    }
    type Extract = fn(&VariantFeatureRecord) -> f64;
    let extractors: [(&'static str, Extract); 4] = [
        ("jaccard", |r| r.jaccard),
        ("length_words", |r| r.length_words as f64),
        ("fk_grade", |r| r.fk_grade),
        ("lexical_diversity", |r| r.lexical_diversity),
    ];
    let mut tests = Vec::new();
    for (name, get) in extractors {
        for (i, (pa, ra)) in by_profile.iter().enumerate() {
            for (pb, rb) in &by_profile[i + 1..] {
                let a: Vec<f64> = ra.iter().map(|r| get(r)).collect();
                let b: Vec<f64> = rb.iter().map(|r| get(r)).collect();
                let MannWhitney { u, p, significant } = mann_whitney_u(&a, &b, cfg.alpha)?;
                tests.push(FeatureTestRow {
                    feature: name,
                    profile_a: pa.clone(),
                    profile_b: pb.clone(),
                    mean_a: a.iter().sum::<f64>() / a.len() as f64,
                    mean_b: b.iter().sum::<f64>() / b.len() as f64,
                    u,
                    p,
                    significant,
                });
            }
        }
    }
    write_csv(
        &layout.validation("feature_tests.csv"),
        &[
            "feature",
            "profile_a",
            "profile_b",
            "mean_a",
            "mean_b",
            "U",
            "p",
            "significant",
        ],
        &tests,
    )?;

    let sample = sample_for_annotation(&variants, cfg.sample_fraction, cfg.seed)?;
    write_variants(&sample, &layout.validation("annotation_sample.jsonl"))?;

    let mut consensus_written = false;
    match &cfg.annotations {
        None => log::info!("validate: no annotations supplied, consensus reports skipped"),
        Some(path) => {
            let records = read_annotations(path)?;
            let filtered = filter_by_gold(&records);
            if !filtered.rejected.is_empty() {
                log::info!(
                    "validate: annotators failing gold questions: {:?}",
                    filtered.rejected
                );
            }
            if !filtered.incomplete.is_empty() {
                let pairs: Vec<String> = filtered
                    .incomplete
                    .iter()
                    .map(|(task, pair)| format!("{task:?}/{pair}"))
                    .collect();
                log::warn!(
                    "validate: {} pairs have fewer than two accepted annotators and are excluded: {}",
                    pairs.len(),
                    pairs.join(", ")
                );
            }
            let ids: BTreeSet<&str> = filtered
                .records
                .iter()
                .filter_map(|r| r.profile_id.as_deref())
                .collect();
            let ordered: Vec<&Profile> = profiles
                .iter()
                .filter(|p| ids.contains(p.profile_id.as_str()))
                .collect();
            let similarity: Vec<ConsensusReport> = ordered
                .iter()
                .map(|p| similarity_accuracy(&filtered.records, &p.profile_id))
                .collect();
            let mut alignment = Vec::new();
            for p in ordered.iter().filter(|p| p.method != Method::Neutral) {
                let scheme = alignment_scheme(p, &profiles)?;
                alignment.push(alignment_accuracy(&filtered.records, p, &scheme)?);
            }
            write_csv(
                &layout.validation("consensus_similarity.csv"),
                ConsensusReport::CSV_HEADER,
                &similarity,
            )?;
            write_csv(
                &layout.validation("consensus_alignment.csv"),
                ConsensusReport::CSV_HEADER,
                &alignment,
            )?;
            consensus_written = true;
        }
    }
    Ok(ValidateSummary {
        verdicts: verdicts.len(),
        valid,
        features: features.len(),
        consensus_written,
    })
}

// ---------------------------------------------------------------- index / search

pub fn index(cfg: &PipelineConfig) -> Result<InvertedIndex> {
    let passages = load_passages(cfg)?;
    let idx = build_index(&passages)?;
    idx.save(&Layout::new(&cfg.out).index())?;
    log::info!(
        "index: {} passages, {} terms",
        idx.doc_count,
        idx.postings.len()
    );
    Ok(idx)
}

/// Seeds followed by variants (when generated), as (query id, text).
pub fn queries(cfg: &PipelineConfig) -> Result<Vec<(String, String)>> {
    let mut qs: Vec<(String, String)> = load_topics(cfg)?
        .into_iter()
        .map(|t| (QueryKey::seed(&t.topic_id).query_id(), t.seed_query))
        .collect();
    let path = Layout::new(&cfg.out).variants();
    if path.exists() {
        qs.extend(
            read_variants(&path)?
                .into_iter()
                .map(|v| (v.query_id(), v.text)),
        );
    } else {
        log::warn!("search: no variants file, searching seeds only");
    }
    Ok(qs)
}

/// Runs every configured BM25 system over all queries. Returns the system ids.
pub fn search_stage(cfg: &PipelineConfig) -> Result<Vec<String>> {
    let layout = Layout::new(&cfg.out);
    let idx = InvertedIndex::load(&layout.index())?;
    let qs = queries(cfg)?;
    let mut ids = Vec::new();
    for sys in &cfg.bm25 {
        let mut results = Vec::with_capacity(qs.len());
        parallel_ordered(
            &qs,
            cfg.workers,
            |(qid, text)| (qid.clone(), search(&idx, &sys.params, text, cfg.depth)),
            |_, r| {
                results.push(r);
                Ok(())
            },
        )?;
        let empty = results.iter().filter(|(_, hits)| hits.is_empty()).count();
        if empty > 0 {
            log::warn!(
                "search: {} retrieved nothing for {empty} queries",
                sys.system_id
            );
        }
        export_run(
            &results,
            &sys.system_id,
            &layout.runs().join(format!("{}.run", sys.system_id)),
        )?;
        ids.push(sys.system_id.clone());
    }
    log::info!("search: {} queries x {} systems", qs.len(), ids.len());
    Ok(ids)
}

/// Copies external TREC runs into the output directory, one file per system.
pub fn import_runs(cfg: &PipelineConfig) -> Result<Vec<String>> {
    let dir = cfg.require(&cfg.runs, "runs")?;
    let layout = Layout::new(&cfg.out);
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    let builtin: BTreeSet<&str> = cfg.bm25.iter().map(|s| s.system_id.as_str()).collect();
    let mut systems: BTreeMap<String, Vec<RunRecord>> = BTreeMap::new();
    let mut origin: HashMap<String, PathBuf> = HashMap::new();
    for f in files {
        for r in parse_trec_run(&f)? {
            if let Some(prev) = origin.get(&r.system_id) {
                if prev != &f {
                    return Err(Error::Validation(format!(
                        "system {} appears in both {} and {}",
                        r.system_id,
                        prev.display(),
                        f.display()
                    )));
                }
            }
            if builtin.contains(r.system_id.as_str()) {
                return Err(Error::Validation(format!(
                    "imported system {} clashes with a built-in system",
                    r.system_id
                )));
            }
            origin.insert(r.system_id.clone(), f.clone());
            systems.entry(r.system_id.clone()).or_default().push(r);
        }
    }
    for (id, recs) in &systems {
        write_trec_run(recs, &layout.runs().join(format!("{id}.run")))?;
    }
    log::info!("import-runs: {} systems", systems.len());
    Ok(systems.into_keys().collect())
}

/// Every run file in the output directory, in file-name order.
pub fn load_runs(cfg: &PipelineConfig) -> Result<Vec<RunRecord>> {
    let dir = Layout::new(&cfg.out).runs();
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("run"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for f in files {
        out.extend(parse_trec_run(&f)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------- judge

#[derive(Debug, Default)]
pub struct JudgeSummary {
    pub pairs: usize,
    pub provider_calls: usize,
    pub agreement: Option<AgreementReport>,
    pub failures: Vec<Error>,
}

/// Writes backstories, then labels every top-k (topic, passage) pair.
pub fn judge(cfg: &PipelineConfig, provider: &dyn Provider) -> Result<JudgeSummary> {
    let layout = Layout::new(&cfg.out);
    let retries = cfg.provider_config.max_retries;
    let mut topics = load_topics(cfg)?;
    let stored = layout.judge("topics.jsonl");
    if stored.exists() {
        let prev: HashMap<String, Option<String>> = read_jsonl::<Topic>(&stored)?
            .into_iter()
            .map(|t| (t.topic_id, t.backstory))
            .collect();
        for t in topics.iter_mut().filter(|t| t.backstory.is_none()) {
            t.backstory = prev.get(&t.topic_id).cloned().flatten();
        }
    }
    let template = match &cfg.backstory_template {
        Some(p) => BackstoryTemplate::load(p)?,
        None => BackstoryTemplate::default(),
    };
    let missing: Vec<usize> = (0..topics.len())
        .filter(|&i| topics[i].backstory.is_none())
        .collect();
    let mut written = Vec::new();
    parallel_ordered(
        &missing,
        cfg.workers,
        |&i| generate_backstory(provider, &topics[i], &template, retries),
        |j, r| {
            written.push((missing[j], r?));
            Ok(())
        },
    )?;
    for (i, story) in written {
        topics[i].backstory = Some(story);
    }
    write_topics_jsonl(&topics, &stored)?;

    let passages: HashMap<String, Passage> = load_passages(cfg)?
        .into_iter()
        .map(|p| (p.passage_id.clone(), p))
        .collect();
    let topic_map: HashMap<&str, &Topic> =
        topics.iter().map(|t| (t.topic_id.as_str(), t)).collect();
    let runs = load_runs(cfg)?;
    let pairs = pairs_to_label(&runs, cfg.k)?;

    let label_template = match &cfg.label_template {
        Some(p) => LabelTemplate::load(p)?,
        None => LabelTemplate::default(),
    };
    let labeler = Labeler::new(provider, label_template, retries);
    let llm_path = layout.judge("llm_qrels.txt");
    let resuming = llm_path.exists();
    if resuming {
        labeler.preload(&parse_qrels(&llm_path)?);
    }
    let bucket = cfg
        .rate_limit
        .map(|r| TokenBucket::new(cfg.workers.max(1), r));
    let mut labels = Vec::new();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    parallel_ordered(
        &pairs,
        cfg.workers,
        |(tid, pid)| {
            let topic = topic_map
                .get(tid.as_str())
                .ok_or_else(|| Error::Validation(format!("run references unknown topic {tid}")))?;
            let passage = passages.get(pid).ok_or_else(|| {
                Error::Validation(format!("run references unknown passage {pid}"))
            })?;
            if let Some(b) = &bucket {
                b.acquire();
            }
            labeler.label(topic, passage)
        },
        |_, r| {
            match r {
                Ok((q, entry)) => {
                    labels.push(q);
                    entries.extend(entry);
                }
                Err(e) if e.is_provider_failure() => failures.push(e),
                Err(e) => return Err(e),
            }
            Ok(())
        },
    )?;
    labels.sort_by(|a, b| (&a.query_id, &a.passage_id).cmp(&(&b.query_id, &b.passage_id)));
    write_qrels(&labels, &llm_path)?;
    if resuming {
        let mut log_out = JsonlAppender::open(&layout.judge("label_log.jsonl"))?;
        for e in &entries {
            log_out.append(e)?;
        }
    } else {
        write_jsonl(&entries, &layout.judge("label_log.jsonl"))?;
    }

    let human = human_qrels(cfg)?;
    let grades = paired_grades(&human, &labels);
    let agreement = if grades.len() >= 2 {
        let report = AgreementReport::compute(&grades)?;
        write_csv(
            &layout.judge("label_agreement.csv"),
            AgreementReport::CSV_HEADER,
            &[&report],
        )?;
        Some(report)
    } else {
        log::info!("judge: fewer than two pairs judged by both sources, agreement skipped");
        None
    };
    for f in &failures {
        log::error!("judge: {f}");
    }
    Ok(JudgeSummary {
        pairs: pairs.len(),
        provider_calls: labeler.provider_calls(),
        agreement,
        failures,
    })
}

// ---------------------------------------------------------------- evaluate

/// Merged qrels for evaluation according to the configured policy.
pub fn evaluation_qrels(cfg: &PipelineConfig) -> Result<Vec<Qrel>> {
    let human = human_qrels(cfg)?;
    let llm_path = Layout::new(&cfg.out).judge("llm_qrels.txt");
    let llm = if llm_path.exists() {
        parse_qrels(&llm_path)?
    } else {
        Vec::new()
    };
    if llm.is_empty() {
        match cfg.merge {
            MergePolicy::Llm => {
                return Err(Error::Validation(
                    "merge policy llm needs model labels; run judge first".into(),
                ))
            }
            MergePolicy::HumanPreferred => {
                log::info!("evaluate: no model labels, using human judgments only")
            }
            MergePolicy::Human => {}
        }
    }
    let merged = merge_qrels(&human, &llm, cfg.merge);
    if merged.is_empty() {
        return Err(Error::Validation("no relevance judgments available".into()));
    }
    Ok(merged)
}

pub fn evaluate(cfg: &PipelineConfig) -> Result<EffectivenessMatrix> {
    let layout = Layout::new(&cfg.out);
    let qrels = evaluation_qrels(cfg)?;
    let expected: Vec<String> = queries(cfg)?.into_iter().map(|(q, _)| q).collect();
    let expected_set: BTreeSet<&str> = expected.iter().map(String::as_str).collect();
    let runs: Vec<RunRecord> = load_runs(cfg)?;
    let total = runs.len();
    let runs: Vec<RunRecord> = runs
        .into_iter()
        .filter(|r| expected_set.contains(r.query_id.as_str()))
        .collect();
    if runs.len() < total {
        log::info!(
            "evaluate: ignoring {} run lines for queries outside the variant set",
            total - runs.len()
        );
    }
    let mut matrix = build_matrix(&runs, &qrels, cfg.k, cfg.gain)?;

    let judged: BTreeSet<String> = qrels
        .iter()
        .map(|q| QueryKey::parse(&q.query_id).map(|k| k.topic_id))
        .collect::<Result<_>>()?;
    let systems: BTreeSet<&str> = runs.iter().map(|r| r.system_id.as_str()).collect();
    let mut missing = Vec::new();
    for sys in &systems {
        for qid in &expected {
            let key = QueryKey::parse(qid)?;
            if !judged.contains(&key.topic_id) {
                continue;
            }
            if matrix
                .get(&key.topic_id, sys, &key.profile_id, key.index)
                .is_none()
            {
                matrix.insert(&key.topic_id, sys, &key.profile_id, key.index, 0.0)?;
                missing.push(format!("{sys}/{qid}"));
            }
        }
    }
    if !missing.is_empty() {
        log::warn!(
            "evaluate: {} queries absent from runs scored 0: {}",
            missing.len(),
            missing.join(", ")
        );
    }
    matrix.check_unit_range()?;
    matrix.write_csv(&layout.eval("ndcg.csv"))?;
    write_qrels(&qrels, &layout.eval("qrels_merged.txt"))?;
    let cov = coverage(&runs, &human_qrels(cfg)?, cfg.k)?;
    write_csv(
        &layout.eval("coverage.csv"),
        CoverageReport::CSV_HEADER,
        &cov,
    )?;
    log::info!(
        "evaluate: {} cells over {} systems",
        matrix.len(),
        systems.len()
    );
    Ok(matrix)
}

// ---------------------------------------------------------------- analyze

/// Profiles present in the matrix grouped by method: the seed first, then the
/// configured profiles in file order, then any others alphabetically.
pub fn analysis_groups(
    cfg: &PipelineConfig,
    matrix: &EffectivenessMatrix,
) -> Result<Vec<(String, Vec<String>)>> {
    let present: BTreeSet<String> = matrix.profiles().into_iter().collect();
    let profiles = load_profiles(cfg)?;
    let mut groups: Vec<(String, Vec<String>)> = Vec::new();
    if present.contains(SEED_PROFILE) {
        groups.push((SEED_PROFILE.to_string(), vec![SEED_PROFILE.to_string()]));
    }
    let mut placed: BTreeSet<String> = [SEED_PROFILE.to_string()].into();
    for m in Method::ALL {
        let ids: Vec<String> = profiles
            .iter()
            .filter(|p| p.method == m && present.contains(&p.profile_id))
            .map(|p| p.profile_id.clone())
            .collect();
        if !ids.is_empty() {
            placed.extend(ids.iter().cloned());
            groups.push((m.as_str().to_string(), ids));
        }
    }
    let other: Vec<String> = present.difference(&placed).cloned().collect();
    if !other.is_empty() {
        groups.push(("other".to_string(), other));
    }
    Ok(groups)
}

#[derive(Debug, Serialize)]
struct MarginalRow<'a> {
    method: &'a str,
    profile: String,
    mean: f64,
    ci_low: f64,
    ci_high: f64,
    n: usize,
}

#[derive(Debug)]
pub struct AnalyzeSummary {
    pub profiles: usize,
    pub systems: usize,
}

pub fn analyze(cfg: &PipelineConfig) -> Result<AnalyzeSummary> {
    let layout = Layout::new(&cfg.out);
    let matrix = EffectivenessMatrix::read_csv(&layout.eval("ndcg.csv"), cfg.k)?;
    if matrix.is_empty() {
        return Err(Error::Validation("effectiveness matrix is empty".into()));
    }
    let groups = analysis_groups(cfg, &matrix)?;
    let order: Vec<String> = groups
        .iter()
        .flat_map(|(_, ps)| ps.iter().cloned())
        .collect();

    let analyses = matrix.profile_analyses(&order, cfg.alpha, cfg.ci)?;
    let mut tables: Vec<(String, AnovaTable)> = analyses
        .iter()
        .map(|a| (a.profile.clone(), a.anova.clone()))
        .collect();
    let mut marginal = Vec::new();
    for (method, ps) in &groups {
        if method != SEED_PROFILE {
            tables.push((format!("method:{method}"), matrix.method_anova(ps)?));
        }
        for mm in matrix.marginal_means(ps, cfg.alpha, cfg.ci)? {
            marginal.push(MarginalRow {
                method,
                profile: mm.profile,
                mean: mm.mean,
                ci_low: mm.ci_low,
                ci_high: mm.ci_high,
                n: mm.n,
            });
        }
    }
    write_anova_csv(&tables, &layout.analysis("anova.csv"))?;
    write_tau_csv(
        &matrix.ranking_correlations(&order, cfg.tau)?,
        &layout.analysis("tau_matrix.csv"),
    )?;
    write_agreement_csv(
        &EffectivenessMatrix::profile_agreement(&analyses)?,
        &layout.analysis("agreement.csv"),
    )?;
    let tukey: Vec<_> = analyses.iter().flat_map(|a| matrix.tukey_rows(a)).collect();
    write_tukey_csv(&tukey, &layout.analysis("tukey_pairs.csv"))?;
    write_csv(
        &layout.analysis("marginal_means.csv"),
        &["method", "profile", "mean", "ci_low", "ci_high", "n"],
        &marginal,
    )?;
    log::info!(
        "analyze: {} profiles, {} systems",
        order.len(),
        matrix.systems().len()
    );
    Ok(AnalyzeSummary {
        profiles: order.len(),
        systems: matrix.systems().len(),
    })
}
