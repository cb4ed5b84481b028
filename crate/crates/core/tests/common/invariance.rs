//! Location and ordering invariance checks. Each returns the list of
//! violations found, empty when the property holds.

#![allow(dead_code)]

use qvbench_core::evalstats::{build_matrix, CiKind, EffectivenessMatrix, Gain, TauVariant};
use qvbench_core::model::{Qrel, QrelSource, QueryKey, RunRecord};
use rand::seq::SliceRandom;
use rand::Rng;

/// A balanced random matrix with a seed profile and two variant profiles of
/// three indices each, values in [0, 1].
pub fn random_matrix<R: Rng>(rng: &mut R) -> EffectivenessMatrix {
    let topics = rng.random_range(3..6);
    let systems = rng.random_range(3..6);
    let mut m = EffectivenessMatrix::new(10);
    for t in 0..topics {
        for s in 0..systems {
            // System quality plus noise, so some Tukey pairs come out significant.
            let base = 0.15 * s as f64;
            m.insert(
                &format!("t{t}"),
                &format!("s{s}"),
                "seed",
                0,
                (base + rng.random_range(0.0..0.4)).min(1.0),
            )
            .unwrap();
            for p in ["p1", "p2"] {
                for i in 1..=3 {
                    let v = (base + rng.random_range(0.0..0.4)).min(1.0);
                    m.insert(&format!("t{t}"), &format!("s{s}"), p, i, v)
                        .unwrap();
                }
            }
        }
    }
    m
}

fn near(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= tol * (1.0 + x.abs()),
        (None, None) => true,
        _ => false,
    }
}

/// Adds `c` to every cell and compares F, omega squared, Tukey verdicts,
/// tau and agreement counts with the original.
pub fn shift_violations(m: &EffectivenessMatrix, c: f64) -> Vec<String> {
    const TOL: f64 = 1e-9;
    let shifted = m.shifted(c);
    let profiles = vec!["seed".to_string(), "p1".to_string(), "p2".to_string()];
    let mut out = Vec::new();
    let a = m.profile_analyses(&profiles, 0.05, CiKind::T).unwrap();
    let b = shifted
        .profile_analyses(&profiles, 0.05, CiKind::T)
        .unwrap();
    for (x, y) in a.iter().zip(&b) {
        for (rx, ry) in x.anova.rows.iter().zip(&y.anova.rows) {
            if !near(rx.f, ry.f, TOL) || !near(rx.omega_sq_p, ry.omega_sq_p, TOL) {
                out.push(format!(
                    "{} {}: F/omega changed under shift {c}",
                    x.profile, rx.source
                ));
            }
        }
        let verdicts = |r: &qvbench_core::evalstats::TukeyResult| {
            r.pairs.iter().map(|p| p.significant).collect::<Vec<_>>()
        };
        if verdicts(&x.tukey) != verdicts(&y.tukey) {
            out.push(format!(
                "{}: Tukey verdicts changed under shift {c}",
                x.profile
            ));
        }
    }
    let (ma, mb) = (
        m.method_anova(&profiles[1..]).unwrap(),
        shifted.method_anova(&profiles[1..]).unwrap(),
    );
    for (rx, ry) in ma.rows.iter().zip(&mb.rows) {
        if !near(rx.f, ry.f, TOL) || !near(rx.omega_sq_p, ry.omega_sq_p, TOL) {
            out.push(format!(
                "three-way {}: F/omega changed under shift {c}",
                rx.source
            ));
        }
    }
    for variant in [TauVariant::A, TauVariant::B] {
        let (ta, tb) = (
            m.ranking_correlations(&profiles, variant),
            shifted.ranking_correlations(&profiles, variant),
        );
        match (ta, tb) {
            (Ok(ta), Ok(tb)) => {
                for (x, y) in ta.iter().zip(&tb) {
                    if (x.tau - y.tau).abs() > TOL {
                        out.push(format!(
                            "tau {}/{} changed under shift {c}",
                            x.profile_a, x.profile_b
                        ));
                    }
                }
            }
            (Err(_), Err(_)) => {}
            _ => out.push(format!("tau defined on one side only under shift {c}")),
        }
    }
    let ga = EffectivenessMatrix::profile_agreement(&a).unwrap();
    let gb = EffectivenessMatrix::profile_agreement(&b).unwrap();
    for (x, y) in ga.iter().zip(&gb) {
        if x.counts != y.counts {
            out.push(format!(
                "agreement counts {}/{} changed under shift {c}",
                x.profile_a, x.profile_b
            ));
        }
    }
    out
}

/// Random runs and graded judgments over a few topics and systems, with
/// distinct scores per query.
pub fn random_runs<R: Rng>(rng: &mut R) -> (Vec<RunRecord>, Vec<Qrel>) {
    let mut runs = Vec::new();
    let mut qrels = Vec::new();
    let passages: Vec<String> = (0..15).map(|i| format!("d{i:02}")).collect();
    for t in 0..3 {
        let topic = format!("{}", 100 + t);
        for p in &passages {
            if !rng.random_bool(0.6) {
                continue;
            }
            qrels.push(Qrel {
                query_id: topic.clone(),
                passage_id: p.clone(),
                grade: rng.random_range(0..4),
                source: QrelSource::Human,
            });
        }
        let queries = [
            QueryKey::seed(&topic),
            QueryKey::new(&topic, "p1", 1),
            QueryKey::new(&topic, "p1", 2),
        ];
        for q in queries {
            for s in 0..3 {
                let mut docs = passages.clone();
                docs.shuffle(rng);
                let depth = rng.random_range(3..12);
                let mut scores: Vec<f64> =
                    (0..depth).map(|_| rng.random_range(0.0..50.0)).collect();
                scores.sort_by(|a, b| b.total_cmp(a));
                scores.dedup();
                for (r, (d, sc)) in docs.iter().zip(scores).enumerate() {
                    runs.push(RunRecord {
                        system_id: format!("s{s}"),
                        query_id: q.query_id(),
                        passage_id: d.clone(),
                        rank: r as u32 + 1,
                        score: sc,
                    });
                }
            }
        }
    }
    (runs, qrels)
}

/// Applies a positive affine map to every score and shuffles line order;
/// NDCG must not change.
pub fn rescaling_violations<R: Rng>(rng: &mut R) -> Vec<String> {
    let (runs, qrels) = random_runs(rng);
    let scale = rng.random_range(0.01..100.0);
    let offset = rng.random_range(-100.0..100.0);
    let mut rescaled: Vec<RunRecord> = runs
        .iter()
        .map(|r| RunRecord {
            score: r.score * scale + offset,
            ..r.clone()
        })
        .collect();
    rescaled.shuffle(rng);
    let mut out = Vec::new();
    for gain in [Gain::Linear, Gain::Exp] {
        let a = build_matrix(&runs, &qrels, 10, gain).unwrap();
        let b = build_matrix(&rescaled, &qrels, 10, gain).unwrap();
        if a.len() != b.len() {
            out.push(format!("cell count changed: {} vs {}", a.len(), b.len()));
        }
        for ((ka, va), (kb, vb)) in a.iter().zip(b.iter()) {
            if ka != kb || (va - vb).abs() > 1e-12 {
                out.push(format!(
                    "{ka:?}: {va} vs {vb} after rescaling by {scale} + {offset}"
                ));
            }
        }
    }
    out
}
