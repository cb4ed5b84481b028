//! Library statistics against the brute-force oracles on random instances.

mod common;

use std::collections::BTreeMap;

use common::oracles;
use proptest::prelude::*;
use qvbench_core::evalstats::{
    anova, kendall_tau, mann_whitney_u, ndcg_at_k, Factor, Gain, Observation, TauVariant,
};
use qvbench_core::judge::{cohen_kappa, krippendorff_alpha, mae};
use qvbench_core::textkit::{jaccard, stemmed_tokens};

const EXACT: f64 = 1e-9;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

const WORDS: &[&str] = &[
    "running",
    "runs",
    "ran",
    "walking",
    "walked",
    "cats",
    "cat",
    "dogs",
    "houses",
    "house",
    "connection",
    "connected",
    "happy",
    "happiness",
    "quick",
    "quickly",
    "the",
    "a",
    "of",
    "relational",
];

fn phrase() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 0..8).prop_map(|w| w.join(" "))
}

fn grade_pairs(min: usize) -> impl Strategy<Value = Vec<(u8, u8)>> {
    prop::collection::vec((0u8..4, 0u8..4), min..40)
}

/// Balanced design: level counts per factor, replicates, and a response per
/// observation in [0, 1].
fn design(
    factors: usize,
    reps: std::ops::Range<usize>,
) -> impl Strategy<Value = (Vec<usize>, usize, Vec<f64>)> {
    (prop::collection::vec(2usize..4, factors), reps).prop_flat_map(|(sizes, r)| {
        let n = sizes.iter().product::<usize>() * r;
        (Just(sizes), Just(r), prop::collection::vec(0.0f64..1.0, n))
    })
}

fn observations(
    sizes: &[usize],
    reps: usize,
    y: &[f64],
) -> (Vec<Factor>, Vec<Observation>, Vec<Vec<usize>>) {
    let factors: Vec<Factor> = sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| Factor::new(format!("f{i}"), (0..s).map(|l| format!("l{l}")).collect()))
        .collect();
    let mut levels = Vec::new();
    let cells: usize = sizes.iter().product();
    for c in 0..cells {
        let mut rem = c;
        let mut lv = vec![0; sizes.len()];
        for j in (0..sizes.len()).rev() {
            lv[j] = rem % sizes[j];
            rem /= sizes[j];
        }
        for _ in 0..reps {
            levels.push(lv.clone());
        }
    }
    let obs = levels
        .iter()
        .zip(y)
        .map(|(l, &value)| Observation {
            levels: l.clone(),
            value,
        })
        .collect();
    (factors, obs, levels)
}

fn check_anova(
    sizes: &[usize],
    reps: usize,
    y: &[f64],
    interactions: bool,
) -> Result<(), TestCaseError> {
    let (factors, obs, levels) = observations(sizes, reps, y);
    let m = sizes.len();
    let max_order = match (interactions, reps) {
        (false, _) => 1,
        (true, 1) => m - 1,
        (true, _) => m,
    };
    let terms = oracles::factorial_terms(m, max_order);
    let table = anova(&factors, &obs, interactions).unwrap();
    let (rows, rss, df_err) = oracles::anova(&levels, sizes, &terms, y);
    prop_assert_eq!(table.effects().len(), rows.len());
    prop_assert!(close(table.error_row().ss, rss, EXACT));
    prop_assert_eq!(table.df_error(), df_err as f64);
    for (got, want) in table.effects().iter().zip(&rows) {
        let name: Vec<String> = want.term.iter().map(|i| format!("f{i}")).collect();
        prop_assert_eq!(&got.source, &name.join(":"));
        prop_assert_eq!(got.df, want.df as f64);
        prop_assert!(
            close(got.ss, want.ss, EXACT),
            "{} ss {} vs {}",
            got.source,
            got.ss,
            want.ss
        );
        if want.f.is_nan() {
            prop_assert!(
                got.f.is_none() && got.p.is_none(),
                "{} exact fit must leave F and p undefined",
                got.source
            );
            continue;
        }
        prop_assert!(
            close(got.f.unwrap(), want.f, EXACT),
            "{} F {:?} vs {}",
            got.source,
            got.f,
            want.f
        );
        prop_assert!(
            (got.p.unwrap() - want.p).abs() <= EXACT,
            "{} p {:?} vs {}",
            got.source,
            got.p,
            want.p
        );
        prop_assert!((got.omega_sq_p.unwrap() - want.omega_sq_p).abs() <= EXACT);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jaccard_matches_set_oracle(a in phrase(), b in phrase()) {
        let want = oracles::jaccard(&stemmed_tokens(&a), &stemmed_tokens(&b));
        prop_assert!((jaccard(&a, &b) - want).abs() <= EXACT);
    }

    #[test]
    fn tau_matches_pair_counting(
        xs in prop::collection::vec(0u8..5, 2..12),
        seed in prop::collection::vec(0u8..5, 12),
    ) {
        let x: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
        let y: Vec<f64> = seed[..x.len()].iter().map(|&v| v as f64).collect();
        let name = |i: usize| format!("s{i:02}");
        let a: BTreeMap<String, f64> = x.iter().enumerate().map(|(i, &v)| (name(i), v)).collect();
        let b: BTreeMap<String, f64> = y.iter().enumerate().map(|(i, &v)| (name(i), v)).collect();
        for (variant, tau_b) in [(TauVariant::A, false), (TauVariant::B, true)] {
            let want = oracles::kendall_tau(&x, &y, tau_b);
            match kendall_tau(&a, &b, variant) {
                Ok(got) => prop_assert!((got - want).abs() <= EXACT, "{got} vs {want}"),
                Err(_) => prop_assert!(!want.is_finite()),
            }
        }
    }

    #[test]
    fn kappa_matches_confusion_matrix(pairs in grade_pairs(1)) {
        let got = cohen_kappa(&pairs).unwrap();
        prop_assert!((got - oracles::cohen_kappa(&pairs)).abs() <= EXACT);
    }

    #[test]
    fn alpha_matches_pairable_values(pairs in grade_pairs(2)) {
        let want = oracles::krippendorff_ordinal(&pairs);
        match krippendorff_alpha(&pairs) {
            Ok(got) => prop_assert!((got - want).abs() <= EXACT, "{got} vs {want}"),
            Err(_) => prop_assert!(!want.is_finite()),
        }
    }

    #[test]
    fn mae_matches(pairs in grade_pairs(1)) {
        for binary in [false, true] {
            prop_assert!((mae(&pairs, binary).unwrap() - oracles::mae(&pairs, binary)).abs() <= EXACT);
        }
    }

    #[test]
    fn ndcg_matches_permutation_ideal(
        pool in prop::collection::vec(0u8..4, 1..7),
        order in prop::collection::vec(any::<prop::sample::Index>(), 0..7),
        k in 1usize..8,
    ) {
        let ranked: Vec<u8> = order.iter().map(|i| pool[i.index(pool.len())]).collect();
        for (gain, exp) in [(Gain::Linear, false), (Gain::Exp, true)] {
            let got = ndcg_at_k(&ranked, &pool, k, gain);
            let want = oracles::ndcg(&ranked, &pool, k, exp);
            prop_assert!((got - want).abs() <= EXACT, "{got} vs {want}");
        }
    }

    #[test]
    fn mann_whitney_matches_pair_counting(
        a in prop::collection::vec(0u8..6, 1..12),
        b in prop::collection::vec(0u8..6, 1..12),
    ) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let got = mann_whitney_u(&a, &b, 0.05).unwrap();
        let (u, p) = oracles::mann_whitney(&a, &b);
        prop_assert!((got.u - u).abs() <= EXACT);
        prop_assert!((got.p - p).abs() <= 1e-9, "{} vs {p}", got.p);
    }

    #[test]
    fn two_way_with_interaction((sizes, reps, y) in design(2, 2..4)) {
        check_anova(&sizes, reps, &y, true)?;
    }

    #[test]
    fn two_way_main_effects((sizes, reps, y) in design(2, 1..4)) {
        check_anova(&sizes, reps, &y, false)?;
    }

    #[test]
    fn three_way_with_interactions((sizes, reps, y) in design(3, 2..3)) {
        check_anova(&sizes, reps, &y, true)?;
    }

    #[test]
    fn three_way_unreplicated((sizes, reps, y) in design(3, 1..2)) {
        check_anova(&sizes, reps, &y, true)?;
    }
}
