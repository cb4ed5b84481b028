//! Brute-force reference implementations used to check the library.
//! Each one follows the textbook definition directly and shares no code
//! with the implementation under test.

#![allow(dead_code)]

use std::collections::HashMap;

use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal};

/// Jaccard index from two token lists by explicit set construction.
pub fn jaccard(a: &[String], b: &[String]) -> f64 {
    let mut sa: Vec<&String> = a.iter().collect();
    sa.sort();
    sa.dedup();
    let mut sb: Vec<&String> = b.iter().collect();
    sb.sort();
    sb.dedup();
    let inter = sa.iter().filter(|x| sb.contains(x)).count();
    let union = sa.len() + sb.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

fn tie_pairs(v: &[f64]) -> f64 {
    let mut counts: HashMap<u64, f64> = HashMap::new();
    for x in v {
        *counts.entry(x.to_bits()).or_default() += 1.0;
    }
    counts.values().map(|t| t * (t - 1.0) / 2.0).sum()
}

/// Kendall tau-a or tau-b by counting concordant and discordant pairs.
pub fn kendall_tau(x: &[f64], y: &[f64], tau_b: bool) -> f64 {
    let n = x.len();
    let (mut c, mut d) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let prod = (x[i] - x[j]) * (y[i] - y[j]);
            if prod > 0.0 {
                c += 0.5;
            } else if prod < 0.0 {
                d += 0.5;
            }
        }
    }
    let n0 = (n * (n - 1)) as f64 / 2.0;
    if tau_b {
        (c - d) / ((n0 - tie_pairs(x)) * (n0 - tie_pairs(y))).sqrt()
    } else {
        (c - d) / n0
    }
}

/// Cohen's kappa from the full confusion matrix.
pub fn cohen_kappa(pairs: &[(u8, u8)]) -> f64 {
    let mut cats: Vec<u8> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    cats.sort();
    cats.dedup();
    let n = pairs.len() as f64;
    let m = cats.len();
    let idx = |v: u8| cats.iter().position(|&c| c == v).unwrap();
    let mut table = vec![vec![0.0; m]; m];
    for &(a, b) in pairs {
        table[idx(a)][idx(b)] += 1.0;
    }
    let observed: f64 = (0..m).map(|i| table[i][i]).sum::<f64>() / n;
    let expected: f64 = (0..m)
        .map(|i| {
            let row: f64 = table[i].iter().sum();
            let col: f64 = (0..m).map(|r| table[r][i]).sum();
            row * col / (n * n)
        })
        .sum();
    if expected >= 1.0 {
        return 0.0;
    }
    (observed - expected) / (1.0 - expected)
}

/// Krippendorff's ordinal alpha for two coders from its pairable-values
/// definition: disagreement within units against disagreement over all pairs
/// of values.
pub fn krippendorff_ordinal(pairs: &[(u8, u8)]) -> f64 {
    let values: Vec<u8> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    let n = values.len() as f64;
    let freq = |g: u8| values.iter().filter(|&&v| v == g).count() as f64;
    let delta = |c: u8, k: u8| {
        let (lo, hi) = (c.min(k), c.max(k));
        let s: f64 = (lo..=hi).map(freq).sum();
        let d = s - (freq(c) + freq(k)) / 2.0;
        d * d
    };
    let d_o: f64 = pairs.iter().map(|&(a, b)| 2.0 * delta(a, b)).sum::<f64>() / n;
    let mut d_e = 0.0;
    for i in 0..values.len() {
        for j in 0..values.len() {
            if i != j {
                d_e += delta(values[i], values[j]);
            }
        }
    }
    d_e /= n * (n - 1.0);
    1.0 - d_o / d_e
}

pub fn mae(pairs: &[(u8, u8)], binary: bool) -> f64 {
    let f = |g: u8| if binary { (g >= 2) as i32 } else { g as i32 };
    pairs
        .iter()
        .map(|&(a, b)| (f(a) - f(b)).abs() as f64)
        .sum::<f64>()
        / pairs.len() as f64
}

fn permutations(items: &[u8]) -> Vec<Vec<u8>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

fn dcg(grades: &[u8], k: usize, exp: bool) -> f64 {
    let mut total = 0.0;
    for (i, &g) in grades.iter().enumerate() {
        if i >= k {
            break;
        }
        let gain = if exp {
            2f64.powi(g as i32) - 1.0
        } else {
            g as f64
        };
        total += gain / (i as f64 + 2.0).log2();
    }
    total
}

/// NDCG@k with the ideal DCG found by trying every ordering of the pool.
/// Keep pools small (at most 7 grades).
pub fn ndcg(ranked: &[u8], pool: &[u8], k: usize, exp: bool) -> f64 {
    let ideal = permutations(pool)
        .iter()
        .map(|p| dcg(p, k, exp))
        .fold(0.0, f64::max);
    if ideal == 0.0 {
        0.0
    } else {
        dcg(ranked, k, exp) / ideal
    }
}

/// Mann-Whitney U of `a` by pairwise counting, with the two-sided p-value of
/// the tie-corrected normal approximation with continuity correction.
pub fn mann_whitney(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut u = 0.0;
    for x in a {
        for y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let mut counts: HashMap<u64, f64> = HashMap::new();
    for x in a.iter().chain(b) {
        *counts.entry(x.to_bits()).or_default() += 1.0;
    }
    let ties: f64 = counts.values().map(|t| t * t * t - t).sum();
    let var = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return (u, 1.0);
    }
    let z = ((u - na * nb / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
    let p = 2.0 * (1.0 - Normal::new(0.0, 1.0).unwrap().cdf(z));
    (u, p.min(1.0))
}

/// One term of a factorial model: the factor indices it crosses.
pub type Term = Vec<usize>;

fn design(levels: &[Vec<usize>], n_levels: &[usize], terms: &[Term]) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0; levels.len()]];
    for term in terms {
        let cells: usize = term.iter().map(|&f| n_levels[f]).product();
        for cell in 0..cells {
            let col = levels
                .iter()
                .map(|obs| {
                    let mut code = 0;
                    for &f in term {
                        code = code * n_levels[f] + obs[f];
                    }
                    (code == cell) as u8 as f64
                })
                .collect();
            cols.push(col);
        }
    }
    cols
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthogonal projection of `y` onto the span of the indicator columns of
/// `terms` plus an intercept, by Gram-Schmidt with reorthogonalization.
/// Returns the fitted values and the rank.
fn fit(levels: &[Vec<usize>], n_levels: &[usize], terms: &[Term], y: &[f64]) -> (Vec<f64>, usize) {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for mut col in design(levels, n_levels, terms) {
        let norm0 = dot(&col, &col).sqrt();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &col);
                col.iter_mut().zip(q).for_each(|(v, qv)| *v -= c * qv);
            }
        }
        let norm = dot(&col, &col).sqrt();
        if norm > 1e-8 * norm0 {
            basis.push(col.iter().map(|v| v / norm).collect());
        }
    }
    let mut fitted = vec![0.0; y.len()];
    for q in &basis {
        let c = dot(q, y);
        fitted.iter_mut().zip(q).for_each(|(f, qv)| *f += c * qv);
    }
    (fitted, basis.len())
}

#[derive(Debug, Clone)]
pub struct OracleRow {
    pub term: Term,
    pub ss: f64,
    pub df: usize,
    pub f: f64,
    pub p: f64,
    pub omega_sq_p: f64,
}

/// Sequential sums of squares for `terms` (ordered by degree) from nested
/// least-squares fits, tested against the residual of the full model.
pub fn anova(
    levels: &[Vec<usize>],
    n_levels: &[usize],
    terms: &[Term],
    y: &[f64],
) -> (Vec<OracleRow>, f64, usize) {
    let sq_dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let mut prev = fit(levels, n_levels, &[], y);
    let mut raw = Vec::new();
    for i in 0..terms.len() {
        let cur = fit(levels, n_levels, &terms[..=i], y);
        // Nested projections: the increment is orthogonal to the smaller fit.
        raw.push((terms[i].clone(), sq_dist(&cur.0, &prev.0), cur.1 - prev.1));
        prev = cur;
    }
    let (fitted, rank) = prev;
    let rss = sq_dist(y, &fitted);
    let df_err = y.len() - rank;
    // An exact fit leaves F undefined.
    let sst: f64 = y
        .iter()
        .map(|v| (v - y.iter().sum::<f64>() / y.len() as f64).powi(2))
        .sum();
    let mse = if rss <= 1e-24 * (1.0 + sst) {
        0.0
    } else {
        rss / df_err as f64
    };
    let n = y.len() as f64;
    let rows = raw
        .into_iter()
        .map(|(term, ss, df)| {
            let f = if mse == 0.0 {
                f64::NAN
            } else {
                (ss / df as f64) / mse
            };
            let p = if f.is_nan() {
                f64::NAN
            } else if f <= 0.0 {
                1.0
            } else {
                FisherSnedecor::new(df as f64, df_err as f64).unwrap().sf(f)
            };
            let omega = (ss - df as f64 * mse) / (ss + (n - df as f64) * mse);
            OracleRow {
                term,
                ss,
                df,
                f,
                p,
                omega_sq_p: omega,
            }
        })
        .collect();
    (rows, rss, df_err)
}

/// All non-empty subsets of `0..m` up to `max_order` factors, by degree then
/// lexicographically.
pub fn factorial_terms(m: usize, max_order: usize) -> Vec<Term> {
    let mut terms: Vec<Term> = (1u32..(1 << m))
        .map(|mask| (0..m).filter(|i| mask & (1 << i) != 0).collect::<Vec<_>>())
        .filter(|t: &Vec<usize>| t.len() <= max_order)
        .collect();
    terms.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    terms
}
