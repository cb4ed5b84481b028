use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::agreement::{profile_pair_agreement, ProfilePairAgreement};
use super::anova::{anova, AnovaTable, Factor, Observation};
use super::ndcg::{ndcg_at_k, Gain};
use super::tau::{kendall_tau, RankingCorrelation, TauVariant};
use super::tukey::{tukey_hsd, CiKind, TukeyResult};
use crate::error::{Error, Result};
use crate::model::{write_csv, Qrel, QueryKey, RunRecord};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub topic: String,
    pub system: String,
    pub profile: String,
    pub index: u8,
}

/// Per-query effectiveness over (topic, system, profile, variant index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessMatrix {
    pub k: usize,
    cells: BTreeMap<CellKey, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalMean {
    pub profile: String,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

impl MarginalMean {
    pub const CSV_HEADER: &'static [&'static str] = &["profile", "mean", "ci_low", "ci_high", "n"];
}

/// One row of `tukey_pairs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyPairRow {
    pub profile: String,
    pub system_a: String,
    pub system_b: String,
    pub diff: f64,
    pub hsd: f64,
    pub significant: bool,
}

impl TukeyPairRow {
    pub const CSV_HEADER: &'static [&'static str] = &[
        "profile",
        "system_a",
        "system_b",
        "diff",
        "hsd",
        "significant",
    ];
}

/// Per-profile analysis used by the agreement taxonomy.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileAnalysis {
    pub profile: String,
    pub anova: AnovaTable,
    pub tukey: TukeyResult,
}

impl EffectivenessMatrix {
    pub fn new(k: usize) -> Self {
        EffectivenessMatrix {
            k,
            cells: BTreeMap::new(),
        }
    }

    pub fn insert(
        &mut self,
        topic: &str,
        system: &str,
        profile: &str,
        index: u8,
        value: f64,
    ) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Validation(format!(
                "non-finite score for {topic}/{system}/{profile}/{index}"
            )));
        }
        let key = CellKey {
            topic: topic.into(),
            system: system.into(),
            profile: profile.into(),
            index,
        };
        if self.cells.insert(key, value).is_some() {
            return Err(Error::Validation(format!(
                "duplicate cell {topic}/{system}/{profile}/{index}"
            )));
        }
        Ok(())
    }

    pub fn get(&self, topic: &str, system: &str, profile: &str, index: u8) -> Option<f64> {
        self.cells
            .get(&CellKey {
                topic: topic.into(),
                system: system.into(),
                profile: profile.into(),
                index,
            })
            .copied()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CellKey, f64)> {
        self.cells.iter().map(|(k, &v)| (k, v))
    }

    pub fn topics(&self) -> Vec<String> {
        self.axis(|k| &k.topic)
    }

    pub fn systems(&self) -> Vec<String> {
        self.axis(|k| &k.system)
    }

    pub fn profiles(&self) -> Vec<String> {
        self.axis(|k| &k.profile)
    }

    fn axis(&self, f: impl Fn(&CellKey) -> &String) -> Vec<String> {
        self.cells
            .keys()
            .map(f)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .cloned()
            .collect()
    }

    /// Variant indices present for `profile`.
    pub fn indices(&self, profile: &str) -> Vec<u8> {
        self.cells
            .keys()
            .filter(|k| k.profile == profile)
            .map(|k| k.index)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// A copy with `c` added to every cell.
    pub fn shifted(&self, c: f64) -> Self {
        EffectivenessMatrix {
            k: self.k,
            cells: self.cells.iter().map(|(k, v)| (k.clone(), v + c)).collect(),
        }
    }

    /// Checks that every cell lies in `[0, 1]`.
    pub fn check_unit_range(&self) -> Result<()> {
        match self.cells.iter().find(|(_, &v)| !(0.0..=1.0).contains(&v)) {
            Some((k, v)) => Err(Error::Validation(format!(
                "cell {}/{}/{}/{} = {v} outside [0, 1]",
                k.topic, k.system, k.profile, k.index
            ))),
            None => Ok(()),
        }
    }

    /// Checks that `profiles` share one index set and that every (topic,
    /// system, profile, index) cell exists. Returns that index set.
    pub fn check_balanced(&self, profiles: &[String]) -> Result<Vec<u8>> {
        let Some(first) = profiles.first() else {
            return Err(Error::Validation("no profiles to analyse".into()));
        };
        let indices = self.indices(first);
        if indices.is_empty() {
            return Err(Error::Validation(format!("profile {first} has no cells")));
        }
        for p in profiles {
            let other = self.indices(p);
            if other != indices {
                return Err(Error::Imbalance(format!(
                    "profile {p} has variant indices {other:?}, profile {first} has {indices:?}"
                )));
            }
        }
        for t in self.topics() {
            for s in self.systems() {
                for p in profiles {
                    for &i in &indices {
                        if self.get(&t, &s, p, i).is_none() {
                            return Err(Error::Imbalance(format!(
                                "missing cell topic={t} system={s} profile={p} index={i}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(indices)
    }

    fn observations(
        &self,
        profiles: &[String],
        with_profile: bool,
    ) -> Result<(Vec<Factor>, Vec<Observation>)> {
        self.check_balanced(profiles)?;
        let topics = self.topics();
        let systems = self.systems();
        let t_idx: HashMap<&str, usize> = topics
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        let s_idx: HashMap<&str, usize> = systems
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let mut obs = Vec::new();
        for (pi, p) in profiles.iter().enumerate() {
            for (k, &v) in self.cells.iter().filter(|(k, _)| &k.profile == p) {
                let mut levels = vec![t_idx[k.topic.as_str()], s_idx[k.system.as_str()]];
                if with_profile {
                    levels.push(pi);
                }
                obs.push(Observation { levels, value: v });
            }
        }
        let mut factors = vec![Factor::new("topic", topics), Factor::new("system", systems)];
        if with_profile {
            factors.push(Factor::new("profile", profiles.to_vec()));
        }
        Ok((factors, obs))
    }

    /// Topic and system main effects within one profile; variant indices are
    /// replicates.
    pub fn profile_anova(&self, profile: &str) -> Result<AnovaTable> {
        let (factors, obs) = self.observations(&[profile.to_string()], false)?;
        anova(&factors, &obs, false)
    }

    /// Topic, system and profile with all interactions.
    pub fn method_anova(&self, profiles: &[String]) -> Result<AnovaTable> {
        let (factors, obs) = self.observations(profiles, true)?;
        anova(&factors, &obs, true)
    }

    /// Mean per system (sorted by system id) over topics and indices.
    pub fn system_means(&self, profile: &str) -> BTreeMap<String, f64> {
        let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for (k, &v) in self.cells.iter().filter(|(k, _)| k.profile == profile) {
            let e = acc.entry(k.system.clone()).or_default();
            e.0 += v;
            e.1 += 1;
        }
        acc.into_iter()
            .map(|(s, (sum, n))| (s, sum / n as f64))
            .collect()
    }

    /// Two-way ANOVA then Tukey's HSD over systems for one profile.
    pub fn profile_analysis(
        &self,
        profile: &str,
        alpha: f64,
        ci: CiKind,
    ) -> Result<ProfileAnalysis> {
        let table = self.profile_anova(profile)?;
        let means: Vec<f64> = self.system_means(profile).into_values().collect();
        let n = self.topics().len() * self.indices(profile).len();
        let tukey = tukey_hsd(&means, n, table.ms_error(), table.df_error(), alpha, ci)?;
        Ok(ProfileAnalysis {
            profile: profile.to_string(),
            anova: table,
            tukey,
        })
    }

    /// Runs [`Self::profile_analysis`] for each profile on scoped threads;
    /// output order follows `profiles`.
    pub fn profile_analyses(
        &self,
        profiles: &[String],
        alpha: f64,
        ci: CiKind,
    ) -> Result<Vec<ProfileAnalysis>> {
        std::thread::scope(|scope| {
            let handles: Vec<_> = profiles
                .iter()
                .map(|p| scope.spawn(move || self.profile_analysis(p, alpha, ci)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("profile analysis thread panicked"))
                .collect()
        })
    }

    /// Kendall's tau between system-mean rankings for every ordered pair of
    /// profiles, diagonal included.
    pub fn ranking_correlations(
        &self,
        profiles: &[String],
        variant: TauVariant,
    ) -> Result<Vec<RankingCorrelation>> {
        let means: Vec<BTreeMap<String, f64>> =
            profiles.iter().map(|p| self.system_means(p)).collect();
        let mut out = Vec::new();
        for (i, a) in profiles.iter().enumerate() {
            for (j, b) in profiles.iter().enumerate() {
                out.push(RankingCorrelation {
                    profile_a: a.clone(),
                    profile_b: b.clone(),
                    tau: kendall_tau(&means[i], &means[j], variant)?,
                });
            }
        }
        Ok(out)
    }

    /// Agreement taxonomy for every unordered pair of profiles, in the order
    /// given.
    pub fn profile_agreement(analyses: &[ProfileAnalysis]) -> Result<Vec<ProfilePairAgreement>> {
        let mut out = Vec::new();
        for (i, a) in analyses.iter().enumerate() {
            for b in &analyses[i + 1..] {
                out.push(profile_pair_agreement(
                    &a.profile, &a.tukey, &b.profile, &b.tukey,
                )?);
            }
        }
        Ok(out)
    }

    /// Marginal mean per profile with intervals from the three-way ANOVA error
    /// term.
    pub fn marginal_means(
        &self,
        profiles: &[String],
        alpha: f64,
        ci: CiKind,
    ) -> Result<Vec<MarginalMean>> {
        if profiles.is_empty() {
            return Err(Error::Validation("no profiles for marginal means".into()));
        }
        let table = self.method_anova(profiles)?;
        let n = self.len_for(profiles) / profiles.len();
        let means: Vec<f64> = profiles
            .iter()
            .map(|p| {
                let v: Vec<f64> = self
                    .cells
                    .iter()
                    .filter(|(k, _)| &k.profile == p)
                    .map(|(_, &v)| v)
                    .collect();
                v.iter().sum::<f64>() / v.len() as f64
            })
            .collect();
        let half = if profiles.len() >= 2 {
            let t = tukey_hsd(&means, n, table.ms_error(), table.df_error(), alpha, ci)?;
            t.ci.iter()
                .zip(&means)
                .map(|((lo, _), m)| m - lo)
                .collect::<Vec<_>>()
        } else {
            let se = (table.ms_error() / n as f64).sqrt();
            vec![super::special::t_quantile(1.0 - alpha / 2.0, table.df_error())? * se]
        };
        Ok(profiles
            .iter()
            .zip(means.iter().zip(half))
            .map(|(p, (&m, h))| MarginalMean {
                profile: p.clone(),
                mean: m,
                ci_low: m - h,
                ci_high: m + h,
                n,
            })
            .collect())
    }

    fn len_for(&self, profiles: &[String]) -> usize {
        self.cells
            .keys()
            .filter(|k| profiles.contains(&k.profile))
            .count()
    }

    pub const CSV_HEADER: &'static [&'static str] =
        &["topic", "system", "profile", "index", "ndcg"];

    /// Writes one row per cell, sorted by topic, system, profile and index.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<(&str, &str, &str, u8, f64)> = self
            .cells
            .iter()
            .map(|(k, &v)| {
                (
                    k.topic.as_str(),
                    k.system.as_str(),
                    k.profile.as_str(),
                    k.index,
                    v,
                )
            })
            .collect();
        write_csv(path, Self::CSV_HEADER, &rows)
    }

    pub fn read_csv(path: &Path, k: usize) -> Result<Self> {
        let origin = path.display().to_string();
        let file = std::fs::File::open(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut reader = csv::Reader::from_reader(file);
        let mut m = EffectivenessMatrix::new(k);
        for (i, row) in reader
            .deserialize::<(String, String, String, u8, f64)>()
            .enumerate()
        {
            let (t, s, p, idx, v) = row.map_err(|e| Error::parse(&origin, i + 2, e.to_string()))?;
            m.insert(&t, &s, &p, idx, v)?;
        }
        Ok(m)
    }

    pub fn tukey_rows(&self, analysis: &ProfileAnalysis) -> Vec<TukeyPairRow> {
        let systems = self.systems();
        analysis
            .tukey
            .pairs
            .iter()
            .map(|p| TukeyPairRow {
                profile: analysis.profile.clone(),
                system_a: systems[p.a].clone(),
                system_b: systems[p.b].clone(),
                diff: p.diff,
                hsd: analysis.tukey.hsd,
                significant: p.significant,
            })
            .collect()
    }
}

/// Builds NDCG@k cells from runs and qrels. Qrels are pooled per topic, so a
/// variant is judged against its seed's pool. Runs are ordered by score
/// descending, then rank, then passage id. Topics without any judgment are
/// skipped; passages without one count as grade 0.
pub fn build_matrix(
    runs: &[RunRecord],
    qrels: &[Qrel],
    k: usize,
    gain: Gain,
) -> Result<EffectivenessMatrix> {
    if k == 0 {
        return Err(Error::Contract("k must be at least 1".into()));
    }
    let mut pool: HashMap<String, HashMap<&str, u8>> = HashMap::new();
    for q in qrels {
        let topic = QueryKey::parse(&q.query_id)?.topic_id;
        let grades = pool.entry(topic).or_default();
        let g = grades.entry(q.passage_id.as_str()).or_insert(q.grade);
        *g = (*g).max(q.grade);
    }
    let mut groups: BTreeMap<(&str, &str), Vec<&RunRecord>> = BTreeMap::new();
    for r in runs {
        groups
            .entry((r.system_id.as_str(), r.query_id.as_str()))
            .or_default()
            .push(r);
    }
    let mut m = EffectivenessMatrix::new(k);
    let mut skipped = BTreeSet::new();
    for ((system, qid), mut recs) in groups {
        let key = QueryKey::parse(qid)?;
        let Some(grades) = pool.get(&key.topic_id) else {
            skipped.insert(key.topic_id);
            continue;
        };
        recs.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(a.rank.cmp(&b.rank))
                .then_with(|| a.passage_id.cmp(&b.passage_id))
        });
        let mut seen = HashSet::new();
        let ranked: Vec<u8> = recs
            .iter()
            .filter(|r| seen.insert(r.passage_id.as_str()))
            .map(|r| grades.get(r.passage_id.as_str()).copied().unwrap_or(0))
            .collect();
        let ideal: Vec<u8> = grades.values().copied().collect();
        m.insert(
            &key.topic_id,
            system,
            &key.profile_id,
            key.index,
            ndcg_at_k(&ranked, &ideal, k, gain),
        )?;
    }
    if !skipped.is_empty() {
        log::warn!(
            "{} topics have no judgments and were skipped: {:?}",
            skipped.len(),
            skipped
        );
    }
    Ok(m)
}
