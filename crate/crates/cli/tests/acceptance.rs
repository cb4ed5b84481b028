//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the test
//! harness so the lines always reach stdout; exits non-zero on any FAIL.

#[path = "../../core/tests/common/invariance.rs"]
mod invariance;
#[path = "../../core/tests/common/oracles.rs"]
mod oracles;
#[path = "../../core/tests/common/validator_cases.rs"]
mod validator_cases;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use qvbench::config::PipelineConfig;
use qvbench::stages;
use qvbench_core::evalstats::special::t_quantile;
use qvbench_core::evalstats::{
    anova, kendall_tau, mann_whitney_u, ndcg_at_k, studentized_range_quantile, EffectivenessMatrix,
    Factor, Gain, Observation, TauVariant,
};
use qvbench_core::genkit::MockProvider;
use qvbench_core::judge::{cohen_kappa, krippendorff_alpha, mae, paired_grades, AgreementReport};
use qvbench_core::model::{parse_qrels, read_variants, Method, QrelSource};
use qvbench_core::textkit::{jaccard, stemmed_tokens};
use qvbench_core::validate::{validate_misspelling, validate_order, Dictionary};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Absolute tolerance for closed-form quantities.
const EXACT_TOL: f64 = 1e-9;
/// Absolute tolerance for quantities that go through a numerical quantile.
const QUANTILE_TOL: f64 = 1e-6;
const STATS_INSTANCES: usize = 64;
const VALIDATOR_CASES: usize = 1000;
const INVARIANCE_INSTANCES: usize = 50;
const TABLE_TOL: f64 = 1e-3;
const PUBLISHED_TOL: f64 = 0.01;
const RELEASED_DATA_ENV: &str = "QVBENCH_RELEASED_DATA";

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || {
        format!("{what}: got {got}, want {want} (tol {tol})")
    })
}

// ---------------------------------------------------------------- 1

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let topics: String = (0..53)
        .map(|i| {
            format!(
                "{}\tsynthetic seed query number {i} about gardening\n",
                3000 + i
            )
        })
        .collect();
    std::fs::write(dir.path().join("topics.tsv"), topics).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig {
        topics: Some(dir.path().join("topics.tsv")),
        out: dir.path().join("out"),
        ..Default::default()
    };
    let summary =
        stages::generate(&cfg, &MockProvider::new(cfg.seed)).map_err(|e| e.to_string())?;
    ensure(summary.failures.is_empty(), || {
        format!("{} generation failures", summary.failures.len())
    })?;
    let method_of: HashMap<String, Method> = stages::load_profiles(&cfg)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|p| (p.profile_id, p.method))
        .collect();
    let mut counts: BTreeMap<Method, usize> = BTreeMap::new();
    for v in read_variants(&cfg.out.join("variants.jsonl")).map_err(|e| e.to_string())? {
        *counts.entry(method_of[&v.profile_id]).or_default() += 1;
    }
    let want = [
        (Method::Persona, 954),
        (Method::Group, 1272),
        (Method::Textual, 636),
        (Method::Neutral, 159),
    ];
    for (m, n) in want {
        let got = counts.get(&m).copied().unwrap_or(0);
        ensure(got == n, || format!("{m}: {got} variants, want {n}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "persona 954, group 1272, textual 636, neutral 159 in {:.1}s",
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 2

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

fn phrase(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(0..8);
    (0..n)
        .map(|_| WORDS[rng.random_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

fn grade_pairs(rng: &mut ChaCha8Rng, min: usize) -> Vec<(u8, u8)> {
    let n = rng.random_range(min..40);
    (0..n)
        .map(|_| (rng.random_range(0..4), rng.random_range(0..4)))
        .collect()
}

fn small_ints(rng: &mut ChaCha8Rng, len: std::ops::Range<usize>, max: u8) -> Vec<f64> {
    let n = rng.random_range(len);
    (0..n).map(|_| rng.random_range(0..max) as f64).collect()
}

fn check_anova_instance(
    rng: &mut ChaCha8Rng,
    m: usize,
    reps: usize,
    interactions: bool,
) -> Result<(), String> {
    let sizes: Vec<usize> = (0..m).map(|_| rng.random_range(2..4)).collect();
    let factors: Vec<Factor> = sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| Factor::new(format!("f{i}"), (0..s).map(|l| format!("l{l}")).collect()))
        .collect();
    let mut levels = Vec::new();
    let cells: usize = sizes.iter().product();
    for c in 0..cells {
        let mut rem = c;
        let mut lv = vec![0; m];
        for j in (0..m).rev() {
            lv[j] = rem % sizes[j];
            rem /= sizes[j];
        }
        for _ in 0..reps {
            levels.push(lv.clone());
        }
    }
    let y: Vec<f64> = levels.iter().map(|_| rng.random_range(0.0..1.0)).collect();
    let obs: Vec<Observation> = levels
        .iter()
        .zip(&y)
        .map(|(l, &value)| Observation {
            levels: l.clone(),
            value,
        })
        .collect();
    let max_order = match (interactions, reps) {
        (false, _) => 1,
        (true, 1) => m - 1,
        (true, _) => m,
    };
    let terms = oracles::factorial_terms(m, max_order);
    let table = anova(&factors, &obs, interactions).map_err(|e| e.to_string())?;
    let (rows, rss, df_err) = oracles::anova(&levels, &sizes, &terms, &y);
    ensure(table.effects().len() == rows.len(), || {
        "source count differs".into()
    })?;
    within(table.error_row().ss, rss, EXACT_TOL, "SS error")?;
    ensure(table.df_error() == df_err as f64, || {
        "error df differs".into()
    })?;
    for (got, want) in table.effects().iter().zip(&rows) {
        let what = format!("{m}-way {}", got.source);
        ensure(got.df == want.df as f64, || format!("{what}: df"))?;
        within(got.ss, want.ss, EXACT_TOL, &format!("{what} SS"))?;
        if want.f.is_nan() {
            ensure(got.f.is_none() && got.p.is_none(), || {
                format!("{what}: exact fit must leave F undefined")
            })?;
            continue;
        }
        within(
            got.f.unwrap_or(f64::NAN),
            want.f,
            EXACT_TOL * (1.0 + want.f.abs()),
            &format!("{what} F"),
        )?;
        within(
            got.p.unwrap_or(f64::NAN),
            want.p,
            EXACT_TOL,
            &format!("{what} p"),
        )?;
        within(
            got.omega_sq_p.unwrap_or(f64::NAN),
            want.omega_sq_p,
            EXACT_TOL,
            &format!("{what} omega"),
        )?;
    }
    Ok(())
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..STATS_INSTANCES {
        let (a, b) = (phrase(&mut rng), phrase(&mut rng));
        within(
            jaccard(&a, &b),
            oracles::jaccard(&stemmed_tokens(&a), &stemmed_tokens(&b)),
            EXACT_TOL,
            "jaccard",
        )?;
    }
    let mut tau_checked = 0;
    while tau_checked < STATS_INSTANCES {
        let x = small_ints(&mut rng, 3..12, 5);
        let y: Vec<f64> = x.iter().map(|_| rng.random_range(0..5) as f64).collect();
        let name = |i: usize| format!("s{i:02}");
        let a: BTreeMap<String, f64> = x.iter().enumerate().map(|(i, &v)| (name(i), v)).collect();
        let b: BTreeMap<String, f64> = y.iter().enumerate().map(|(i, &v)| (name(i), v)).collect();
        let want_b = oracles::kendall_tau(&x, &y, true);
        if !want_b.is_finite() {
            continue;
        }
        within(
            kendall_tau(&a, &b, TauVariant::B).map_err(|e| e.to_string())?,
            want_b,
            EXACT_TOL,
            "tau-b",
        )?;
        within(
            kendall_tau(&a, &b, TauVariant::A).map_err(|e| e.to_string())?,
            oracles::kendall_tau(&x, &y, false),
            EXACT_TOL,
            "tau-a",
        )?;
        tau_checked += 1;
    }
    let mut alpha_checked = 0;
    for _ in 0..STATS_INSTANCES * 2 {
        let pairs = grade_pairs(&mut rng, 2);
        within(
            cohen_kappa(&pairs).map_err(|e| e.to_string())?,
            oracles::cohen_kappa(&pairs),
            EXACT_TOL,
            "kappa",
        )?;
        for binary in [false, true] {
            within(
                mae(&pairs, binary).map_err(|e| e.to_string())?,
                oracles::mae(&pairs, binary),
                EXACT_TOL,
                "MAE",
            )?;
        }
        let want = oracles::krippendorff_ordinal(&pairs);
        if want.is_finite() {
            within(
                krippendorff_alpha(&pairs).map_err(|e| e.to_string())?,
                want,
                EXACT_TOL,
                "alpha",
            )?;
            alpha_checked += 1;
        }
    }
    ensure(alpha_checked >= STATS_INSTANCES, || {
        format!("only {alpha_checked} alpha instances")
    })?;
    for _ in 0..STATS_INSTANCES {
        let pool: Vec<u8> = (0..rng.random_range(1..7))
            .map(|_| rng.random_range(0..4))
            .collect();
        let ranked: Vec<u8> = (0..rng.random_range(0..7))
            .map(|_| pool[rng.random_range(0..pool.len())])
            .collect();
        let k = rng.random_range(1..8);
        for (gain, exp) in [(Gain::Linear, false), (Gain::Exp, true)] {
            within(
                ndcg_at_k(&ranked, &pool, k, gain),
                oracles::ndcg(&ranked, &pool, k, exp),
                EXACT_TOL,
                "NDCG",
            )?;
        }
    }
    for _ in 0..STATS_INSTANCES {
        let a = small_ints(&mut rng, 1..12, 6);
        let b = small_ints(&mut rng, 1..12, 6);
        let got = mann_whitney_u(&a, &b, 0.05).map_err(|e| e.to_string())?;
        let (u, p) = oracles::mann_whitney(&a, &b);
        within(got.u, u, EXACT_TOL, "Mann-Whitney U")?;
        within(got.p, p, EXACT_TOL, "Mann-Whitney p")?;
    }
    for _ in 0..STATS_INSTANCES {
        let (r1, r2) = (rng.random_range(2..4), rng.random_range(1..4));
        check_anova_instance(&mut rng, 2, r1, true)?;
        check_anova_instance(&mut rng, 2, r2, false)?;
        check_anova_instance(&mut rng, 3, 2, true)?;
        check_anova_instance(&mut rng, 3, 1, true)?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(120), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{STATS_INSTANCES}+ instances each of jaccard, tau, kappa, alpha, MAE, NDCG, Mann-Whitney, 2-/3-way ANOVA in {:.1}s",
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    // Published studentized range critical values at alpha = 0.05.
    for (k, df, table) in [(3, 10.0, 3.877), (5, 20.0, 4.232), (10, 60.0, 4.646)] {
        let q = studentized_range_quantile(0.95, k, df).map_err(|e| e.to_string())?;
        within(q, table, TABLE_TOL, &format!("q(0.95; {k}, {df})"))?;
    }
    for df in [1.0, 2.0, 5.0, 10.0, 30.0, 120.0] {
        for p in [0.9, 0.95, 0.99] {
            let q = studentized_range_quantile(p, 2, df).map_err(|e| e.to_string())?;
            let t = t_quantile((1.0 + p) / 2.0, df).map_err(|e| e.to_string())?;
            within(
                q,
                std::f64::consts::SQRT_2 * t,
                QUANTILE_TOL,
                &format!("k=2 at p={p}, df={df}"),
            )?;
        }
    }
    Ok("table values within 1e-3; k=2 equals sqrt(2)*t within 1e-6".into())
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = Vec::new();
    for _ in 0..VALIDATOR_CASES {
        let tokens = validator_cases::token_list(&mut rng);
        let perm = validator_cases::shuffled(&mut rng, &tokens);
        let (s, v) = (tokens.join(" "), perm.join(" "));
        if validate_order(&s, &s) {
            violations.push(format!("order accepted identity {s:?}"));
        }
        if validate_order(&s, &v) != (perm != tokens) {
            violations.push(format!("order wrong on {s:?} -> {v:?}"));
        }
    }
    for _ in 0..VALIDATOR_CASES / 20 {
        let words = validator_cases::spread_dictionary(&mut rng, 40);
        let dict = Dictionary::from_words(&words);
        for _ in 0..20 {
            let seed = validator_cases::seed_query(&mut rng, &words);
            let typo = validator_cases::misspelled_variant(&mut rng, &seed);
            let clean = validator_cases::clean_variant(&mut rng, &seed, &words);
            let s = seed.join(" ");
            if !validate_misspelling(&s, &typo.join(" "), &dict) {
                violations.push(format!(
                    "misspelling rejected {:?} for {s:?}",
                    typo.join(" ")
                ));
            }
            if validate_misspelling(&s, &clean.join(" "), &dict) {
                violations.push(format!(
                    "misspelling accepted clean {:?} for {s:?}",
                    clean.join(" ")
                ));
            }
        }
    }
    ensure(violations.is_empty(), || {
        format!("{} violations, first: {}", violations.len(), violations[0])
    })?;
    Ok(format!(
        "{VALIDATOR_CASES} order cases and {VALIDATOR_CASES} misspelling cases, zero violations"
    ))
}

// ---------------------------------------------------------------- 5

fn run_pipeline(out: &Path) -> Result<Duration, String> {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_qvbench"))
        .arg("--config")
        .arg(workspace_root().join("data/toy/qvbench.conf"))
        .arg("--out")
        .arg(out)
        .arg("all")
        .env("RUST_LOG", "error")
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || {
        format!("pipeline exited with {status}")
    })?;
    Ok(start.elapsed())
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn csv_rows(path: &Path) -> Result<Vec<Vec<String>>, String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    reader
        .records()
        .map(|r| {
            r.map(|r| r.iter().map(str::to_string).collect())
                .map_err(|e| e.to_string())
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ta = run_pipeline(&a)?;
    let tb = run_pipeline(&b)?;
    for t in [ta, tb] {
        ensure(t < Duration::from_secs(60), || {
            format!("pipeline took {t:?}")
        })?;
    }
    let (fa, fb) = (files(&a), files(&b));
    ensure(fa == fb, || "output file sets differ".into())?;
    for f in &fa {
        let (x, y) = (std::fs::read(a.join(f)), std::fs::read(b.join(f)));
        ensure(
            x.map_err(|e| e.to_string())? == y.map_err(|e| e.to_string())?,
            || format!("{} differs between runs", f.display()),
        )?;
    }
    let tau = csv_rows(&a.join("analysis/tau_matrix.csv"))?;
    let diagonal: Vec<&Vec<String>> = tau.iter().filter(|r| r[0] == r[1]).collect();
    ensure(!diagonal.is_empty(), || "no diagonal tau entries".into())?;
    for r in diagonal {
        ensure(r[2].parse::<f64>() == Ok(1.0), || {
            format!("tau({}, {}) = {}", r[0], r[1], r[2])
        })?;
    }
    let agreement = csv_rows(&a.join("analysis/agreement.csv"))?;
    ensure(!agreement.is_empty(), || "agreement.csv is empty".into())?;
    for r in &agreement {
        let sum: f64 = r[3..9]
            .iter()
            .map(|v| v.parse::<f64>().unwrap_or(f64::NAN))
            .sum();
        within(
            sum,
            1.0,
            EXACT_TOL,
            &format!("agreement fractions {}/{}", r[0], r[1]),
        )?;
    }
    let matrix =
        EffectivenessMatrix::read_csv(&a.join("eval/ndcg.csv"), 10).map_err(|e| e.to_string())?;
    for p in matrix.profiles() {
        matrix.check_balanced(&[p]).map_err(|e| e.to_string())?;
    }
    Ok(format!(
        "{} files byte-identical; tau diagonal 1; agreement rows sum to 1; runs took {:.1}s and {:.1}s",
        fa.len(),
        ta.as_secs_f64(),
        tb.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..INVARIANCE_INSTANCES {
        let m = invariance::random_matrix(&mut rng);
        let c = rng.random_range(-5.0..5.0);
        let bad = invariance::shift_violations(&m, c);
        ensure(bad.is_empty(), || bad.join("; "))?;
        let bad = invariance::rescaling_violations(&mut rng);
        ensure(bad.is_empty(), || bad.join("; "))?;
    }
    Ok(format!(
        "{INVARIANCE_INSTANCES} shifted matrices and {INVARIANCE_INSTANCES} rescaled run sets unchanged"
    ))
}

// ---------------------------------------------------------------- 7

/// Expects `<dir>/dl21` and `<dir>/dl22`, each holding `human_qrels.txt` and
/// `llm_qrels.txt` in TREC qrels format.
fn criterion_7() -> Option<Outcome> {
    let dir = PathBuf::from(std::env::var_os(RELEASED_DATA_ENV)?);
    let targets = [
        ("dl21", [0.25, 0.50, 0.69, 0.58]),
        ("dl22", [0.20, 0.46, 0.55, 0.62]),
    ];
    let run = || -> Outcome {
        let mut summary = Vec::new();
        for (name, [mae_b, kappa, mae_g, alpha]) in targets {
            let human =
                parse_qrels(&dir.join(name).join("human_qrels.txt")).map_err(|e| e.to_string())?;
            let llm: Vec<_> = parse_qrels(&dir.join(name).join("llm_qrels.txt"))
                .map_err(|e| e.to_string())?
                .into_iter()
                .map(|mut q| {
                    q.source = QrelSource::Llm;
                    q
                })
                .collect();
            let report = AgreementReport::compute(&paired_grades(&human, &llm))
                .map_err(|e| e.to_string())?;
            within(
                report.mae_binary,
                mae_b,
                PUBLISHED_TOL,
                &format!("{name} binary MAE"),
            )?;
            within(
                report.kappa_binary,
                kappa,
                PUBLISHED_TOL,
                &format!("{name} kappa"),
            )?;
            within(
                report.mae_graded,
                mae_g,
                PUBLISHED_TOL,
                &format!("{name} graded MAE"),
            )?;
            within(
                report.alpha_graded,
                alpha,
                PUBLISHED_TOL,
                &format!("{name} alpha"),
            )?;
            summary.push(format!(
                "{name} {:.2}/{:.2}/{:.2}/{:.2}",
                report.mae_binary, report.kappa_binary, report.mae_graded, report.alpha_graded
            ));
        }
        Ok(summary.join(", "))
    };
    Some(run())
}

fn main() {
    let criteria: [Criterion; 6] = [
        ("count invariants", criterion_1),
        ("statistics oracle suite", criterion_2),
        ("Tukey machinery", criterion_3),
        ("validator properties", criterion_4),
        ("end-to-end determinism", criterion_5),
        ("location and ordering invariance", criterion_6),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why}", i + 1);
            }
        }
    }
    match criterion_7() {
        None => {
            println!("SKIP criterion 7: released-data reproduction: {RELEASED_DATA_ENV} not set")
        }
        Some(Ok(detail)) => println!("PASS criterion 7: released-data reproduction: {detail}"),
        Some(Err(why)) => {
            failed += 1;
            println!("FAIL criterion 7: released-data reproduction: {why}");
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
