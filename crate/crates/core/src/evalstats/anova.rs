//! Fixed-effects ANOVA for complete balanced designs.

use serde::{Deserialize, Serialize};

use super::special::f_sf;
use crate::error::{Error, Result};

/// Effect-size band for partial omega squared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectBand {
    Small,
    Medium,
    Large,
}

impl EffectBand {
    pub fn classify(omega: f64) -> Self {
        if omega >= 0.14 {
            EffectBand::Large
        } else if omega <= 0.06 {
            EffectBand::Small
        } else {
            EffectBand::Medium
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EffectBand::Small => "small",
            EffectBand::Medium => "medium",
            EffectBand::Large => "large",
        }
    }
}

/// `(SS - df*MSE) / (SS + (N - df)*MSE)`.
pub fn omega_squared_partial(ss_effect: f64, df_effect: f64, ms_error: f64, n: f64) -> Result<f64> {
    if !(n > df_effect) || ms_error < 0.0 {
        return Err(Error::Contract(format!(
            "omega squared needs N > df and MS_error >= 0, got N={n} df={df_effect} MSE={ms_error}"
        )));
    }
    let den = ss_effect + (n - df_effect) * ms_error;
    if !(den > 0.0) {
        return Err(Error::Numeric(format!(
            "omega squared denominator {den} is not positive"
        )));
    }
    Ok((ss_effect - df_effect * ms_error) / den)
}

/// A named factor and its level labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub name: String,
    pub levels: Vec<String>,
}

impl Factor {
    pub fn new(name: impl Into<String>, levels: Vec<String>) -> Self {
        Factor {
            name: name.into(),
            levels,
        }
    }
}

/// One response with its level index for every factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub levels: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub source: String,
    pub ss: f64,
    pub df: f64,
    pub ms: f64,
    pub f: Option<f64>,
    pub p: Option<f64>,
    pub omega_sq_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    /// Effect rows in order, then the error row.
    pub rows: Vec<AnovaRow>,
    pub ss_total: f64,
    pub df_total: f64,
    pub n: usize,
}

impl AnovaTable {
    pub const CSV_HEADER: &'static [&'static str] =
        &["source", "SS", "df", "MS", "F", "p", "omega_sq_p"];

    pub fn row(&self, source: &str) -> Option<&AnovaRow> {
        self.rows.iter().find(|r| r.source == source)
    }

    pub fn error_row(&self) -> &AnovaRow {
        self.rows.last().expect("table has an error row")
    }

    pub fn ms_error(&self) -> f64 {
        self.error_row().ms
    }

    pub fn df_error(&self) -> f64 {
        self.error_row().df
    }

    pub fn effects(&self) -> &[AnovaRow] {
        &self.rows[..self.rows.len() - 1]
    }
}

/// Name of the error row.
pub const ERROR_SOURCE: &str = "error";

/// Balanced ANOVA. Every cell of the full factor cross must hold the same
/// number of observations. With `with_interactions` all interactions are
/// fitted, except that the highest-order one is pooled into error when cells
/// hold a single observation. Otherwise only main effects are fitted.
pub fn anova(
    factors: &[Factor],
    observations: &[Observation],
    with_interactions: bool,
) -> Result<AnovaTable> {
    if factors.is_empty() {
        return Err(Error::Contract("ANOVA needs at least one factor".into()));
    }
    let m = factors.len();
    if m > 16 {
        return Err(Error::Contract("too many factors".into()));
    }
    for f in factors {
        if f.levels.is_empty() {
            return Err(Error::Contract(format!("factor {} has no levels", f.name)));
        }
    }
    let sizes: Vec<usize> = factors.iter().map(|f| f.levels.len()).collect();
    let n_cells: usize = sizes.iter().product();

    let cell_index = |levels: &[usize], mask: u32| -> usize {
        let mut idx = 0;
        for j in 0..m {
            if mask & (1 << j) != 0 {
                idx = idx * sizes[j] + levels[j];
            }
        }
        idx
    };
    let full: u32 = (1u32 << m) - 1;

    let mut counts = vec![0usize; n_cells];
    for o in observations {
        if o.levels.len() != m {
            return Err(Error::Contract(format!(
                "observation has {} levels, expected {m}",
                o.levels.len()
            )));
        }
        if let Some(j) = (0..m).find(|&j| o.levels[j] >= sizes[j]) {
            return Err(Error::Contract(format!(
                "level index out of range for factor {}",
                factors[j].name
            )));
        }
        if !o.value.is_finite() {
            return Err(Error::Validation("non-finite response".into()));
        }
        counts[cell_index(&o.levels, full)] += 1;
    }
    let reps = counts.iter().copied().max().unwrap_or(0);
    if reps == 0 {
        return Err(Error::Validation("no observations".into()));
    }
    if let Some(bad) = counts.iter().position(|&c| c != reps) {
        let mut rem = bad;
        let mut labels = vec![String::new(); m];
        for j in (0..m).rev() {
            labels[j] = format!("{}={}", factors[j].name, factors[j].levels[rem % sizes[j]]);
            rem /= sizes[j];
        }
        return Err(Error::Imbalance(format!(
            "cell {} has {} observations, expected {reps}",
            labels.join(", "),
            counts[bad]
        )));
    }

    let n = observations.len();
    let grand = observations.iter().map(|o| o.value).sum::<f64>() / n as f64;

    // Sources involving a single-level factor have no degrees of freedom.
    let varying: u32 = (0..m)
        .filter(|&j| sizes[j] > 1)
        .fold(0, |acc, j| acc | (1 << j));
    let mut sources: Vec<u32> = (1..=full)
        .filter(|&s| s & !varying == 0)
        .filter(|&s| {
            if with_interactions {
                !(reps == 1 && s == varying && varying.count_ones() > 1)
            } else {
                s.count_ones() == 1
            }
        })
        .collect();
    sources.sort_by_key(|&s| {
        (
            s.count_ones(),
            (0..m).filter(|j| s & (1 << j) != 0).collect::<Vec<_>>(),
        )
    });

    // Centered marginal means for every subset of factors.
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(1 << m);
    for mask in 0..=full {
        let cells: usize = (0..m)
            .filter(|j| mask & (1 << j) != 0)
            .map(|j| sizes[j])
            .product();
        let mut sum = vec![0.0; cells];
        let mut cnt = vec![0usize; cells];
        for o in observations {
            let i = cell_index(&o.levels, mask);
            sum[i] += o.value - grand;
            cnt[i] += 1;
        }
        means.push(sum.iter().zip(&cnt).map(|(s, &c)| s / c as f64).collect());
    }

    // Effects by inclusion-exclusion over sub-margins, evaluated at each
    // observation's levels.
    let effect_at = |mask: u32, levels: &[usize]| -> f64 {
        let mut e = 0.0;
        let mut sub = mask;
        loop {
            let sign = if (mask.count_ones() - sub.count_ones()).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            if sub != 0 {
                e += sign * means[sub as usize][cell_index(levels, sub)];
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & mask;
        }
        e
    };

    let ss_total: f64 = observations.iter().map(|o| (o.value - grand).powi(2)).sum();
    let mut ss = vec![0.0; sources.len()];
    let mut ss_error = 0.0;
    for o in observations {
        let mut fitted = 0.0;
        for (k, &s) in sources.iter().enumerate() {
            let e = effect_at(s, &o.levels);
            ss[k] += e * e;
            fitted += e;
        }
        ss_error += (o.value - grand - fitted).powi(2);
    }

    let df_of = |mask: u32| -> f64 {
        (0..m)
            .filter(|j| mask & (1 << j) != 0)
            .map(|j| (sizes[j] - 1) as f64)
            .product()
    };
    let df_total = (n - 1) as f64;
    let df_error = df_total - sources.iter().map(|&s| df_of(s)).sum::<f64>();
    if df_error < 1.0 {
        return Err(Error::Validation("zero error degrees of freedom".into()));
    }
    let ms_error = ss_error / df_error;
    // Residuals at rounding level count as an exact fit.
    let exact_fit = ms_error <= 1e-24 * (1.0 + ss_total);

    let mut rows = Vec::with_capacity(sources.len() + 1);
    for (k, &s) in sources.iter().enumerate() {
        let name = (0..m)
            .filter(|j| s & (1 << j) != 0)
            .map(|j| factors[j].name.as_str())
            .collect::<Vec<_>>()
            .join(":");
        let df = df_of(s);
        let ms = ss[k] / df;
        let (f, p) = if exact_fit {
            (None, None)
        } else {
            let f = ms / ms_error;
            (Some(f), Some(f_sf(f, df, df_error)))
        };
        let omega =
            omega_squared_partial(ss[k], df, if exact_fit { 0.0 } else { ms_error }, n as f64).ok();
        rows.push(AnovaRow {
            source: name,
            ss: ss[k],
            df,
            ms,
            f,
            p,
            omega_sq_p: omega,
        });
    }
    rows.push(AnovaRow {
        source: ERROR_SOURCE.into(),
        ss: ss_error,
        df: df_error,
        ms: ms_error,
        f: None,
        p: None,
        omega_sq_p: None,
    });
    Ok(AnovaTable {
        rows,
        ss_total,
        df_total,
        n,
    })
}
