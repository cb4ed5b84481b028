use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnnotationRecord, AnnotationTask, Method, Profile};

/// Answer meaning "both candidate profiles are equally likely"; it counts as
/// choosing the correct profile.
pub const EQUALLY_LIKELY: &str = "equally likely";

fn norm(answer: &str) -> String {
    answer.trim().to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GoldFilter {
    pub kept: BTreeSet<String>,
    pub rejected: BTreeSet<String>,
    /// All records (gold included) from kept annotators.
    pub records: Vec<AnnotationRecord>,
    /// (task, pair_id) of non-gold pairs left with fewer than two kept annotators.
    pub incomplete: Vec<(AnnotationTask, String)>,
}

/// Drops every record of any annotator who missed at least one gold question.
pub fn filter_by_gold(annotations: &[AnnotationRecord]) -> GoldFilter {
    let mut annotators = BTreeSet::new();
    let mut rejected = BTreeSet::new();
    for r in annotations {
        annotators.insert(r.annotator_id.clone());
        if r.is_gold {
            let expected = r.gold_answer.as_deref().map(norm);
            if expected.as_deref() != Some(norm(&r.answer).as_str()) {
                rejected.insert(r.annotator_id.clone());
            }
        }
    }
    let kept: BTreeSet<String> = annotators.difference(&rejected).cloned().collect();
    let records: Vec<AnnotationRecord> = annotations
        .iter()
        .filter(|r| kept.contains(&r.annotator_id))
        .cloned()
        .collect();

    let mut all_pairs: BTreeSet<(AnnotationTask, String)> = BTreeSet::new();
    let mut kept_per_pair: BTreeMap<(AnnotationTask, String), BTreeSet<&str>> = BTreeMap::new();
    for r in annotations.iter().filter(|r| !r.is_gold) {
        let key = (r.task, r.pair_id.clone());
        all_pairs.insert(key.clone());
        if kept.contains(&r.annotator_id) {
            kept_per_pair
                .entry(key)
                .or_default()
                .insert(&r.annotator_id);
        }
    }
    let incomplete = all_pairs
        .into_iter()
        .filter(|k| kept_per_pair.get(k).map_or(0, |s| s.len()) < 2)
        .collect();

    GoldFilter {
        kept,
        rejected,
        records,
        incomplete,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusReport {
    pub task: AnnotationTask,
    pub profile_id: String,
    pub n_pairs: usize,
    pub n_agree_correct: usize,
    pub accuracy: f64,
    pub n_disagreements: usize,
}

impl ConsensusReport {
    pub const CSV_HEADER: &'static [&'static str] = &[
        "task",
        "profile_id",
        "n_pairs",
        "n_agree_correct",
        "accuracy",
        "n_disagreements",
    ];

    fn new(
        task: AnnotationTask,
        profile_id: &str,
        n_pairs: usize,
        correct: usize,
        disagree: usize,
    ) -> Self {
        ConsensusReport {
            task,
            profile_id: profile_id.to_string(),
            n_pairs,
            n_agree_correct: correct,
            accuracy: if n_pairs == 0 {
                0.0
            } else {
                correct as f64 / n_pairs as f64
            },
            n_disagreements: disagree,
        }
    }
}

/// Non-gold pairs of one task and profile that carry exactly two annotators.
fn complete_pairs<'a>(
    records: &'a [AnnotationRecord],
    task: AnnotationTask,
    profile_id: &str,
) -> Vec<[&'a AnnotationRecord; 2]> {
    let mut by_pair: BTreeMap<&str, BTreeMap<&str, &AnnotationRecord>> = BTreeMap::new();
    for r in records {
        if r.is_gold || r.task != task || r.profile_id.as_deref() != Some(profile_id) {
            continue;
        }
        by_pair
            .entry(r.pair_id.as_str())
            .or_default()
            .insert(r.annotator_id.as_str(), r);
    }
    by_pair
        .into_values()
        .filter(|m| m.len() == 2)
        .map(|m| {
            let mut it = m.into_values();
            [it.next().unwrap(), it.next().unwrap()]
        })
        .collect()
}

fn says_similar(answer: &str) -> bool {
    matches!(norm(answer).as_str(), "similar" | "yes")
}

/// Share of complete pairs both annotators judged similar.
pub fn similarity_accuracy(annotations: &[AnnotationRecord], profile_id: &str) -> ConsensusReport {
    let pairs = complete_pairs(annotations, AnnotationTask::Similarity, profile_id);
    let mut correct = 0;
    let mut disagree = 0;
    for [a, b] in &pairs {
        match (says_similar(&a.answer), says_similar(&b.answer)) {
            (true, true) => correct += 1,
            (x, y) if x != y => disagree += 1,
            _ => {}
        }
    }
    ConsensusReport::new(
        AnnotationTask::Similarity,
        profile_id,
        pairs.len(),
        correct,
        disagree,
    )
}

/// The answer labels an alignment question may carry, and which one is correct.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentScheme {
    pub correct: String,
    pub allowed: BTreeSet<String>,
}

/// Counterpart group shown next to a user group (age, language, expertise, modality).
pub fn opposite_group(name: &str) -> Option<&'static str> {
    Some(match name.to_lowercase().as_str() {
        "child" => "senior",
        "senior" => "child",
        "non-native" => "native",
        "native" => "non-native",
        "novice" => "expert",
        "expert" => "novice",
        "mobile" => "voice",
        "voice" => "mobile",
        _ => return None,
    })
}

/// Persona questions offer any persona; group questions offer the opposite
/// group; textual transformations are yes/no.
pub fn alignment_scheme(profile: &Profile, all_profiles: &[Profile]) -> Result<AlignmentScheme> {
    let name = norm(&profile.name);
    let mut allowed = BTreeSet::new();
    let correct = match profile.method {
        Method::Persona => {
            allowed.extend(
                all_profiles
                    .iter()
                    .filter(|p| p.method == Method::Persona)
                    .map(|p| norm(&p.name)),
            );
            allowed.insert(name.clone());
            allowed.insert(EQUALLY_LIKELY.to_string());
            name
        }
        Method::Group => {
            let opposite = opposite_group(&name).ok_or_else(|| {
                Error::Validation(format!("group {} has no opposite group", profile.name))
            })?;
            allowed.insert(name.clone());
            allowed.insert(opposite.to_string());
            allowed.insert(EQUALLY_LIKELY.to_string());
            name
        }
        Method::Textual => {
            allowed.insert("yes".to_string());
            allowed.insert("no".to_string());
            "yes".to_string()
        }
        Method::Neutral => {
            return Err(Error::Contract(
                "neutral variants are not assessed for alignment".into(),
            ))
        }
    };
    Ok(AlignmentScheme { correct, allowed })
}

/// A pair is correct iff both answers, with "equally likely" mapped to the
/// correct profile, name the correct profile.
pub fn alignment_accuracy(
    annotations: &[AnnotationRecord],
    profile: &Profile,
    scheme: &AlignmentScheme,
) -> Result<ConsensusReport> {
    let pairs = complete_pairs(annotations, AnnotationTask::Alignment, &profile.profile_id);
    let map = |r: &AnnotationRecord| -> Result<String> {
        let a = norm(&r.answer);
        if !scheme.allowed.contains(&a) {
            return Err(Error::Validation(format!(
                "pair {}: unknown alignment answer {:?} from {}",
                r.pair_id, r.answer, r.annotator_id
            )));
        }
        Ok(if a == EQUALLY_LIKELY {
            scheme.correct.clone()
        } else {
            a
        })
    };
    let mut correct = 0;
    let mut disagree = 0;
    for [a, b] in &pairs {
        let (x, y) = (map(a)?, map(b)?);
        if x != y {
            disagree += 1;
        } else if x == scheme.correct {
            correct += 1;
        }
    }
    Ok(ConsensusReport::new(
        AnnotationTask::Alignment,
        &profile.profile_id,
        pairs.len(),
        correct,
        disagree,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(
        pair: &str,
        who: &str,
        task: AnnotationTask,
        profile: &str,
        answer: &str,
    ) -> AnnotationRecord {
        AnnotationRecord {
            pair_id: pair.into(),
            annotator_id: who.into(),
            task,
            profile_id: Some(profile.into()),
            seed_query: "seed".into(),
            variant: "variant".into(),
            answer: answer.into(),
            is_gold: false,
            gold_answer: None,
        }
    }

    fn gold(pair: &str, who: &str, answer: &str, expected: &str) -> AnnotationRecord {
        AnnotationRecord {
            pair_id: pair.into(),
            annotator_id: who.into(),
            task: AnnotationTask::Similarity,
            profile_id: None,
            seed_query: "what foods should you stay away from if you have asthma".into(),
            variant: "what types of food is good for fat loss?".into(),
            answer: answer.into(),
            is_gold: true,
            gold_answer: Some(expected.into()),
        }
    }

    fn persona(name: &str) -> Profile {
        Profile {
            profile_id: name.to_lowercase(),
            method: Method::Persona,
            name: name.into(),
            description: "d".into(),
        }
    }

    #[test]
    fn one_missed_gold_drops_annotator() {
        use AnnotationTask::Similarity as S;
        let mut recs = vec![
            rec("p1", "a", S, "emily", "similar"),
            rec("p1", "b", S, "emily", "similar"),
            rec("p2", "a", S, "emily", "similar"),
            rec("p2", "c", S, "emily", "similar"),
        ];
        for i in 0..5 {
            recs.push(gold(&format!("g{i}"), "a", "dissimilar", "dissimilar"));
            recs.push(gold(&format!("g{i}"), "c", "dissimilar", "dissimilar"));
            let b_answer = if i == 3 { "similar" } else { "dissimilar" };
            recs.push(gold(&format!("g{i}"), "b", b_answer, "dissimilar"));
        }
        let f = filter_by_gold(&recs);
        assert_eq!(f.rejected, BTreeSet::from(["b".to_string()]));
        assert_eq!(f.kept, BTreeSet::from(["a".to_string(), "c".to_string()]));
        assert!(f.records.iter().all(|r| r.annotator_id != "b"));
        assert_eq!(f.incomplete, vec![(S, "p1".to_string())]);

        let report = similarity_accuracy(&f.records, "emily");
        assert_eq!(report.n_pairs, 1);
        assert_eq!(report.accuracy, 1.0);

        // idempotent
        let again = filter_by_gold(&f.records);
        assert_eq!(again.kept, f.kept);
        assert_eq!(again.records, f.records);
    }

    #[test]
    fn all_golds_correct_keeps_everyone() {
        let recs = vec![
            gold("g", "a", "Dissimilar", "dissimilar"),
            gold("g", "b", "dissimilar ", "dissimilar"),
        ];
        let f = filter_by_gold(&recs);
        assert_eq!(f.kept.len(), 2);
        assert!(f.rejected.is_empty());
        assert_eq!(f.records.len(), 2);
    }

    #[test]
    fn similarity_split_counts_as_dissimilar() {
        use AnnotationTask::Similarity as S;
        let mut recs = Vec::new();
        for (i, (x, y)) in [
            ("similar", "similar"),
            ("similar", "dissimilar"),
            ("similar", "similar"),
            ("similar", "similar"),
        ]
        .iter()
        .enumerate()
        {
            recs.push(rec(&format!("p{i}"), "a", S, "anne", x));
            recs.push(rec(&format!("p{i}"), "b", S, "anne", y));
        }
        let r = similarity_accuracy(&recs, "anne");
        assert_eq!(r.n_pairs, 4);
        assert_eq!(r.n_agree_correct, 3);
        assert_eq!(r.n_disagreements, 1);
        assert_eq!(r.accuracy, 0.75);
    }

    #[test]
    fn similarity_all_agree() {
        use AnnotationTask::Similarity as S;
        let recs: Vec<_> = (0..10)
            .flat_map(|i| {
                [
                    rec(&format!("p{i}"), "a", S, "emily", "similar"),
                    rec(&format!("p{i}"), "b", S, "emily", "similar"),
                ]
            })
            .collect();
        assert_eq!(similarity_accuracy(&recs, "emily").accuracy, 1.0);
    }

    #[test]
    fn persona_alignment_rules() {
        use AnnotationTask::Alignment as A;
        let profiles = vec![persona("Emily"), persona("Ahmed"), persona("Noah")];
        let emily = &profiles[0];
        let scheme = alignment_scheme(emily, &profiles).unwrap();
        let recs = vec![
            // both correct
            rec("p1", "a", A, "emily", "Emily"),
            rec("p1", "b", A, "emily", "emily"),
            // correct + candidate
            rec("p2", "a", A, "emily", "Emily"),
            rec("p2", "b", A, "emily", "Noah"),
            // equally likely + correct
            rec("p3", "a", A, "emily", "equally likely"),
            rec("p3", "b", A, "emily", "Emily"),
            // both equally likely
            rec("p4", "a", A, "emily", "Equally likely"),
            rec("p4", "b", A, "emily", "equally likely"),
            // both agree on the wrong persona
            rec("p5", "a", A, "emily", "Ahmed"),
            rec("p5", "b", A, "emily", "Ahmed"),
        ];
        let r = alignment_accuracy(&recs, emily, &scheme).unwrap();
        assert_eq!(r.n_pairs, 5);
        assert_eq!(r.n_agree_correct, 3);
        assert_eq!(r.n_disagreements, 1);
        assert_eq!(r.accuracy, 0.6);
    }

    #[test]
    fn unknown_alignment_label_rejected() {
        use AnnotationTask::Alignment as A;
        let profiles = vec![persona("Emily"), persona("Ahmed")];
        let scheme = alignment_scheme(&profiles[0], &profiles).unwrap();
        let recs = vec![
            rec("p1", "a", A, "emily", "Emily"),
            rec("p1", "b", A, "emily", "Gandalf"),
        ];
        assert!(matches!(
            alignment_accuracy(&recs, &profiles[0], &scheme),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn group_scheme_uses_opposite() {
        let p = Profile {
            profile_id: "non-native".into(),
            method: Method::Group,
            name: "Non-native".into(),
            description: "d".into(),
        };
        let s = alignment_scheme(&p, &[]).unwrap();
        assert_eq!(s.correct, "non-native");
        assert!(s.allowed.contains("native"));
        assert!(s.allowed.contains(EQUALLY_LIKELY));
        assert!(!s.allowed.contains("child"));
    }
}
