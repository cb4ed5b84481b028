use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest grade on the 4-point relevance scale.
pub const MAX_GRADE: u8 = 3;

/// 0 and 1 map to 0; 2 and 3 map to 1.
pub fn binarize(grade: u8) -> Result<u8> {
    match grade {
        0 | 1 => Ok(0),
        2 | 3 => Ok(1),
        g => Err(Error::Validation(format!("grade {g} outside 0..=3"))),
    }
}

fn check_grades(pairs: &[(u8, u8)]) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::Validation("no label pairs".into()));
    }
    if let Some(&(a, b)) = pairs.iter().find(|(a, b)| *a > MAX_GRADE || *b > MAX_GRADE) {
        return Err(Error::Validation(format!(
            "grade pair ({a}, {b}) outside 0..=3"
        )));
    }
    Ok(())
}

/// Mean absolute difference, after binarizing both sides when `binary` is set.
pub fn mae(pairs: &[(u8, u8)], binary: bool) -> Result<f64> {
    check_grades(pairs)?;
    let mut total = 0u64;
    for &(a, b) in pairs {
        let (a, b) = if binary {
            (binarize(a)?, binarize(b)?)
        } else {
            (a, b)
        };
        total += a.abs_diff(b) as u64;
    }
    Ok(total as f64 / pairs.len() as f64)
}

/// Cohen's kappa over whatever categories occur. Returns 0 when chance
/// agreement is 1 (both raters constant on the same category).
pub fn cohen_kappa(pairs: &[(u8, u8)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Validation("no label pairs".into()));
    }
    let n = pairs.len() as f64;
    let mut rows = [0u64; 256];
    let mut cols = [0u64; 256];
    let mut agree = 0u64;
    for &(a, b) in pairs {
        rows[a as usize] += 1;
        cols[b as usize] += 1;
        agree += (a == b) as u64;
    }
    let p_o = agree as f64 / n;
    let p_e: f64 = rows
        .iter()
        .zip(&cols)
        .map(|(&r, &c)| (r as f64 / n) * (c as f64 / n))
        .sum();
    if p_e >= 1.0 {
        return Ok(0.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Krippendorff's alpha for two raters with the ordinal difference function,
/// computed from the coincidence matrix over levels `0..=MAX_GRADE`.
pub fn krippendorff_alpha(pairs: &[(u8, u8)]) -> Result<f64> {
    check_grades(pairs)?;
    if pairs.len() < 2 {
        return Err(Error::Validation(
            "Krippendorff's alpha needs at least 2 items".into(),
        ));
    }
    const L: usize = MAX_GRADE as usize + 1;
    let mut o = [[0f64; L]; L];
    for &(a, b) in pairs {
        o[a as usize][b as usize] += 1.0;
        o[b as usize][a as usize] += 1.0;
    }
    let n_c: Vec<f64> = o.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = n_c.iter().sum();
    let delta2 = |c: usize, k: usize| -> f64 {
        let (lo, hi) = (c.min(k), c.max(k));
        let between: f64 = n_c[lo..=hi].iter().sum();
        let d = between - (n_c[c] + n_c[k]) / 2.0;
        d * d
    };
    let mut d_o = 0.0;
    let mut d_e = 0.0;
    for c in 0..L {
        for k in 0..L {
            let d = delta2(c, k);
            d_o += o[c][k] * d;
            d_e += n_c[c] * n_c[k] * d;
        }
    }
    d_o /= n;
    d_e /= n * (n - 1.0);
    if d_e == 0.0 {
        return Err(Error::Validation(
            "Krippendorff's alpha undefined: all labels take a single value".into(),
        ));
    }
    Ok(1.0 - d_o / d_e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub n: usize,
    pub mae_binary: f64,
    pub kappa_binary: f64,
    pub mae_graded: f64,
    pub alpha_graded: f64,
}

impl AgreementReport {
    pub const CSV_HEADER: &'static [&'static str] = &[
        "n",
        "mae_binary",
        "kappa_binary",
        "mae_graded",
        "alpha_graded",
    ];

    /// `pairs` are (human, model) grades on the 4-point scale.
    pub fn compute(pairs: &[(u8, u8)]) -> Result<Self> {
        let binary: Vec<(u8, u8)> = pairs
            .iter()
            .map(|&(a, b)| Ok((binarize(a)?, binarize(b)?)))
            .collect::<Result<_>>()?;
        Ok(AgreementReport {
            n: pairs.len(),
            mae_binary: mae(pairs, true)?,
            kappa_binary: cohen_kappa(&binary)?,
            mae_graded: mae(pairs, false)?,
            alpha_graded: krippendorff_alpha(pairs)?,
        })
    }
}
