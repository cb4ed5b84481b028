//! Effectiveness metrics and the statistical analysis layer: NDCG@k,
//! Kendall's tau, balanced ANOVA with partial omega squared, Tukey's HSD,
//! Mann-Whitney U and the AA/AD/MA/MD/PA/PD agreement taxonomy.

mod agreement;
mod anova;
mod matrix;
mod mwu;
mod ndcg;
pub mod special;
mod tau;
mod tukey;

use std::path::Path;

pub use agreement::{classify_pair, profile_pair_agreement, PairClass, ProfilePairAgreement};
pub use anova::{
    anova, omega_squared_partial, AnovaRow, AnovaTable, EffectBand, Factor, Observation,
    ERROR_SOURCE,
};
pub use matrix::{
    build_matrix, CellKey, EffectivenessMatrix, MarginalMean, ProfileAnalysis, TukeyPairRow,
};
pub use mwu::{mann_whitney_u, midranks, MannWhitney};
pub use ndcg::{ndcg_at_k, Gain};
pub use tau::{kendall_tau, RankingCorrelation, TauVariant};
pub use tukey::{
    studentized_range_cdf, studentized_range_quantile, tukey_hsd, CiKind, TukeyPair, TukeyResult,
};

use crate::error::{Error, Result};
use crate::model::write_csv;

/// Shortest round-trip form, switching to exponent notation below 1e-6.
fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-6 {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), num)
}

/// Writes ANOVA tables as `anova.csv`, with a leading `scope` column naming
/// the profile or method each table belongs to.
pub fn write_anova_csv(tables: &[(String, AnovaTable)], path: &Path) -> Result<()> {
    let mut header = vec!["scope"];
    header.extend_from_slice(AnovaTable::CSV_HEADER);
    let rows: Vec<Vec<String>> = tables
        .iter()
        .flat_map(|(scope, t)| {
            t.rows.iter().map(move |r| {
                vec![
                    scope.clone(),
                    r.source.clone(),
                    num(r.ss),
                    r.df.to_string(),
                    num(r.ms),
                    opt(r.f),
                    opt(r.p),
                    opt(r.omega_sq_p),
                ]
            })
        })
        .collect();
    write_csv(path, &header, &rows)
}

pub fn write_tau_csv(rows: &[RankingCorrelation], path: &Path) -> Result<()> {
    write_csv(path, RankingCorrelation::CSV_HEADER, rows)
}

pub fn write_agreement_csv(rows: &[ProfilePairAgreement], path: &Path) -> Result<()> {
    let records: Vec<Vec<String>> = rows.iter().map(ProfilePairAgreement::csv_record).collect();
    write_csv(path, ProfilePairAgreement::CSV_HEADER, &records)
}

pub fn write_marginal_means_csv(rows: &[MarginalMean], path: &Path) -> Result<()> {
    write_csv(path, MarginalMean::CSV_HEADER, rows)
}

pub fn write_tukey_csv(rows: &[TukeyPairRow], path: &Path) -> Result<()> {
    write_csv(path, TukeyPairRow::CSV_HEADER, rows)
}

/// Fails with a numeric error unless `alpha` lies in (0, 0.5).
pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "alpha must lie in (0, 0.5), got {alpha}"
        )))
    }
}
