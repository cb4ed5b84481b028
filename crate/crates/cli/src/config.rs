//! Plain-text `key = value` pipeline configuration.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use qvbench_core::evalstats::{check_alpha, CiKind, Gain, TauVariant};
use qvbench_core::genkit::ProviderConfig;
use qvbench_core::judge::MergePolicy;
use qvbench_core::model::Method;
use qvbench_core::retrieval::Bm25Params;
use qvbench_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProviderKind {
    #[default]
    Mock,
    Http,
}

impl FromStr for ProviderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mock" => Ok(ProviderKind::Mock),
            "http" => Ok(ProviderKind::Http),
            other => Err(Error::Validation(format!(
                "unknown provider {other:?} (expected mock or http)"
            ))),
        }
    }
}

/// One BM25 configuration run by the `search` stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Bm25System {
    pub system_id: String,
    pub params: Bm25Params,
}

impl Bm25System {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        Ok(Bm25System {
            system_id: format!("bm25-{k1}-{b}"),
            params: Bm25Params::new(k1, b)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub topics: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    /// Profile JSON file or directory; the bundled profiles when unset.
    pub profiles: Option<PathBuf>,
    /// Directory of TREC run files to import.
    pub runs: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub variant_template: Option<PathBuf>,
    pub backstory_template: Option<PathBuf>,
    pub label_template: Option<PathBuf>,
    pub out: PathBuf,
    pub methods: Vec<Method>,
    pub provider: ProviderKind,
    pub provider_config: ProviderConfig,
    pub workers: usize,
    /// Provider requests per second; unlimited when unset.
    pub rate_limit: Option<f64>,
    pub bm25: Vec<Bm25System>,
    pub depth: usize,
    pub k: usize,
    pub alpha: f64,
    pub gain: Gain,
    pub merge: MergePolicy,
    pub ci: CiKind,
    pub tau: TauVariant,
    pub sample_fraction: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            topics: None,
            corpus: None,
            profiles: None,
            runs: None,
            qrels: None,
            annotations: None,
            dictionary: None,
            variant_template: None,
            backstory_template: None,
            label_template: None,
            out: PathBuf::from("qvbench-out"),
            methods: Method::ALL.to_vec(),
            provider: ProviderKind::Mock,
            provider_config: ProviderConfig::default(),
            workers: 4,
            rate_limit: None,
            bm25: vec![
                Bm25System::new(0.9, 0.4).expect("valid"),
                Bm25System::new(1.2, 0.75).expect("valid"),
                Bm25System::new(2.0, 0.3).expect("valid"),
            ],
            depth: 100,
            k: 10,
            alpha: 0.05,
            gain: Gain::Linear,
            merge: MergePolicy::HumanPreferred,
            ci: CiKind::T,
            tau: TauVariant::B,
            sample_fraction: 0.1,
            seed: 42,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Validation(format!("bad value {value:?} for {key}")))
}

fn parse_methods(value: &str) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for m in value.split(',').map(str::trim).filter(|m| !m.is_empty()) {
        let m: Method = m.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::Validation(
            "methods must name at least one method".into(),
        ));
    }
    Ok(out)
}

/// `k1:b` pairs separated by commas.
fn parse_bm25(value: &str) -> Result<Vec<Bm25System>> {
    let mut out: Vec<Bm25System> = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k1, b) = item
            .split_once(':')
            .ok_or_else(|| Error::Validation(format!("bm25 entry {item:?} is not k1:b")))?;
        let sys = Bm25System::new(parse_num("bm25", k1.trim())?, parse_num("bm25", b.trim())?)?;
        if out.iter().any(|s| s.system_id == sys.system_id) {
            return Err(Error::Validation(format!("duplicate bm25 entry {item}")));
        }
        out.push(sys);
    }
    Ok(out)
}

impl PipelineConfig {
    /// Reads a config file. Relative paths in it resolve against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut cfg = PipelineConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                origin: path.display().to_string(),
                line: i + 1,
                message: "expected key = value".into(),
            })?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Parse {
                    origin: path.display().to_string(),
                    line: i + 1,
                    message: format!("duplicate key {key}"),
                });
            }
            cfg.set(key, value.trim(), Some(&base))
                .map_err(|e| Error::Parse {
                    origin: path.display().to_string(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
        }
        Ok(cfg)
    }

    /// Sets one key. Relative paths are joined onto `base` when given.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<()> {
        let path = |v: &str| -> PathBuf {
            let p = PathBuf::from(v);
            match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            }
        };
        match key {
            "topics" => self.topics = Some(path(value)),
            "corpus" => self.corpus = Some(path(value)),
            "profiles" => self.profiles = Some(path(value)),
            "runs" => self.runs = Some(path(value)),
            "qrels" => self.qrels = Some(path(value)),
            "annotations" => self.annotations = Some(path(value)),
            "dictionary" => self.dictionary = Some(path(value)),
            "variant_template" => self.variant_template = Some(path(value)),
            "backstory_template" => self.backstory_template = Some(path(value)),
            "label_template" => self.label_template = Some(path(value)),
            "out" => self.out = path(value),
            "methods" => self.methods = parse_methods(value)?,
            "provider" => self.provider = value.parse()?,
            "endpoint" => self.provider_config.endpoint = value.to_string(),
            "model" => self.provider_config.model_name = value.to_string(),
            "temperature" => self.provider_config.temperature = parse_num(key, value)?,
            "max_retries" => self.provider_config.max_retries = parse_num(key, value)?,
            "timeout_secs" => {
                self.provider_config.timeout = Duration::from_secs(parse_num(key, value)?)
            }
            "workers" => self.workers = parse_num(key, value)?,
            "rate_limit" => self.rate_limit = Some(parse_num(key, value)?),
            "bm25" => self.bm25 = parse_bm25(value)?,
            "depth" => self.depth = parse_num(key, value)?,
            "k" => self.k = parse_num(key, value)?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "gain" => self.gain = value.parse()?,
            "merge" => self.merge = value.parse()?,
            "ci" => self.ci = value.parse()?,
            "tau" => {
                self.tau = match value {
                    "a" => TauVariant::A,
                    "b" => TauVariant::B,
                    _ => {
                        return Err(Error::Validation(format!(
                            "tau must be a or b, got {value:?}"
                        )))
                    }
                }
            }
            "sample_fraction" => self.sample_fraction = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            other => return Err(Error::Validation(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn check(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Validation("k must be at least 1".into()));
        }
        check_alpha(self.alpha)?;
        if self.depth < self.k {
            return Err(Error::Validation(format!(
                "depth {} is below k {}",
                self.depth, self.k
            )));
        }
        if self.workers == 0 {
            return Err(Error::Validation("workers must be at least 1".into()));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::Validation(format!(
                "sample_fraction {} outside (0, 1]",
                self.sample_fraction
            )));
        }
        if let Some(r) = self.rate_limit {
            if r.is_nan() || r <= 0.0 {
                return Err(Error::Validation(format!(
                    "rate_limit {r} must be positive"
                )));
            }
        }
        if self.bm25.is_empty() {
            return Err(Error::Validation(
                "at least one bm25 configuration is required".into(),
            ));
        }
        self.provider_config.check()
    }

    pub fn require<'a>(&self, value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| Error::Validation(format!("{key} path is not configured")))
    }
}
