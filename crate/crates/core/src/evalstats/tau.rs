use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which Kendall coefficient to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauVariant {
    /// `(C - D) / (n(n-1)/2)`
    A,
    /// Tie-adjusted: `(C - D) / sqrt((n0 - n1)(n0 - n2))`
    #[default]
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingCorrelation {
    pub profile_a: String,
    pub profile_b: String,
    pub tau: f64,
}

impl RankingCorrelation {
    pub const CSV_HEADER: &'static [&'static str] = &["profile_a", "profile_b", "tau"];
}

/// Kendall's tau between two scorings of the same systems. Either scores or
/// ranks may be passed, as long as both sides use the same kind.
pub fn kendall_tau(
    a: &BTreeMap<String, f64>,
    b: &BTreeMap<String, f64>,
    variant: TauVariant,
) -> Result<f64> {
    if a.len() != b.len() || a.keys().zip(b.keys()).any(|(x, y)| x != y) {
        let only_a: Vec<&str> = a
            .keys()
            .filter(|k| !b.contains_key(*k))
            .map(String::as_str)
            .collect();
        let only_b: Vec<&str> = b
            .keys()
            .filter(|k| !a.contains_key(*k))
            .map(String::as_str)
            .collect();
        return Err(Error::Validation(format!(
            "system sets differ: only in first {only_a:?}, only in second {only_b:?}"
        )));
    }
    let xs: Vec<f64> = a.values().copied().collect();
    let ys: Vec<f64> = b.values().copied().collect();
    let n = xs.len();
    if n < 2 {
        return Err(Error::Validation(
            "Kendall's tau needs at least two systems".into(),
        ));
    }
    let (mut s, mut ties_a, mut ties_b) = (0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = xs[i].total_cmp(&xs[j]) as i64;
            let dy = ys[i].total_cmp(&ys[j]) as i64;
            s += dx * dy;
            ties_a += (dx == 0) as i64;
            ties_b += (dy == 0) as i64;
        }
    }
    let n0 = (n * (n - 1) / 2) as f64;
    let den = match variant {
        TauVariant::A => n0,
        TauVariant::B => ((n0 - ties_a as f64) * (n0 - ties_b as f64)).sqrt(),
    };
    if den == 0.0 {
        return Err(Error::Validation(
            "Kendall's tau undefined: a ranking is constant".into(),
        ));
    }
    Ok(s as f64 / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: &[f64]) -> BTreeMap<String, f64> {
        v.iter()
            .enumerate()
            .map(|(i, &x)| (format!("s{i:02}"), x))
            .collect()
    }

    #[test]
    fn identical_and_reversed() {
        let a = scores(&(0..15).map(f64::from).collect::<Vec<_>>());
        let r = scores(&(0..15).rev().map(f64::from).collect::<Vec<_>>());
        assert_eq!(kendall_tau(&a, &a, TauVariant::B).unwrap(), 1.0);
        assert_eq!(kendall_tau(&a, &r, TauVariant::B).unwrap(), -1.0);
        assert_eq!(kendall_tau(&a, &r, TauVariant::A).unwrap(), -1.0);
    }

    #[test]
    fn one_swap() {
        let a = scores(&[1.0, 2.0, 3.0, 4.0]);
        let b = scores(&[1.0, 3.0, 2.0, 4.0]);
        assert!((kendall_tau(&a, &b, TauVariant::B).unwrap() - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn ties_differ_between_variants() {
        let a = scores(&[1.0, 1.0, 2.0, 3.0]);
        let b = scores(&[1.0, 2.0, 3.0, 4.0]);
        let ta = kendall_tau(&a, &b, TauVariant::A).unwrap();
        let tb = kendall_tau(&a, &b, TauVariant::B).unwrap();
        assert!((ta - 5.0 / 6.0).abs() < 1e-12);
        assert!((tb - 5.0 / 30f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mismatched_systems_rejected() {
        let a = scores(&[1.0, 2.0]);
        let mut b = a.clone();
        b.insert("extra".into(), 0.0);
        assert!(kendall_tau(&a, &b, TauVariant::B).is_err());
        assert!(kendall_tau(&scores(&[1.0, 1.0]), &scores(&[1.0, 2.0]), TauVariant::B).is_err());
    }
}
