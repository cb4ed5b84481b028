use serde::{Deserialize, Serialize};

use super::tukey::{TukeyPair, TukeyResult};
use crate::error::{Error, Result};

/// Cross-profile verdict for one system pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PairClass {
    /// Both significant, same winner.
    AA,
    /// Both significant, opposite winners.
    AD,
    /// One significant, same direction.
    MA,
    /// One significant, opposite direction.
    MD,
    /// Neither significant, same direction.
    PA,
    /// Neither significant, opposite direction.
    PD,
}

impl PairClass {
    pub const ALL: [PairClass; 6] = [
        PairClass::AA,
        PairClass::AD,
        PairClass::MA,
        PairClass::MD,
        PairClass::PA,
        PairClass::PD,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PairClass::AA => "AA",
            PairClass::AD => "AD",
            PairClass::MA => "MA",
            PairClass::MD => "MD",
            PairClass::PA => "PA",
            PairClass::PD => "PD",
        }
    }
}

/// Classifies one system pair seen under two profiles. The flag is set when a
/// zero mean difference forced the "same direction" tie-break.
pub fn classify_pair(x: &TukeyPair, y: &TukeyPair) -> (PairClass, bool) {
    let tie = x.diff == 0.0 || y.diff == 0.0;
    let same = tie || (x.diff > 0.0) == (y.diff > 0.0);
    let class = match (x.significant as u8 + y.significant as u8, same) {
        (2, true) => PairClass::AA,
        (2, false) => PairClass::AD,
        (1, true) => PairClass::MA,
        (1, false) => PairClass::MD,
        (_, true) => PairClass::PA,
        (_, false) => PairClass::PD,
    };
    (class, tie)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePairAgreement {
    pub profile_a: String,
    pub profile_b: String,
    pub n_pairs: usize,
    /// Indexed like [`PairClass::ALL`].
    pub counts: [usize; 6],
    pub ties: usize,
}

impl ProfilePairAgreement {
    pub const CSV_HEADER: &'static [&'static str] = &[
        "profile_a",
        "profile_b",
        "n_pairs",
        "AA",
        "AD",
        "MA",
        "MD",
        "PA",
        "PD",
        "n_AA",
        "n_AD",
        "n_MA",
        "n_MD",
        "n_PA",
        "n_PD",
        "ties",
    ];

    pub fn count(&self, class: PairClass) -> usize {
        self.counts[class as usize]
    }

    pub fn fraction(&self, class: PairClass) -> f64 {
        self.count(class) as f64 / self.n_pairs as f64
    }

    pub fn fractions(&self) -> [f64; 6] {
        PairClass::ALL.map(|c| self.fraction(c))
    }

    /// One flat CSV record matching [`Self::CSV_HEADER`].
    pub fn csv_record(&self) -> Vec<String> {
        let mut r = vec![
            self.profile_a.clone(),
            self.profile_b.clone(),
            self.n_pairs.to_string(),
        ];
        r.extend(self.fractions().iter().map(|f| f.to_string()));
        r.extend(self.counts.iter().map(|c| c.to_string()));
        r.push(self.ties.to_string());
        r
    }
}

/// Cross-classifies every system pair from two per-profile Tukey results over
/// the same systems in the same order.
pub fn profile_pair_agreement(
    profile_a: &str,
    a: &TukeyResult,
    profile_b: &str,
    b: &TukeyResult,
) -> Result<ProfilePairAgreement> {
    if a.pairs.len() != b.pairs.len() || a.means.len() != b.means.len() {
        return Err(Error::Contract(format!(
            "profiles {profile_a} and {profile_b} cover different systems"
        )));
    }
    let mut counts = [0usize; 6];
    let mut ties = 0;
    for (x, y) in a.pairs.iter().zip(&b.pairs) {
        if (x.a, x.b) != (y.a, y.b) {
            return Err(Error::Contract("system pairs out of order".into()));
        }
        let (class, tie) = classify_pair(x, y);
        if tie {
            log::debug!(
                "equal means for systems {} and {} under {profile_a} or {profile_b}",
                x.a,
                x.b
            );
        }
        counts[class as usize] += 1;
        ties += tie as usize;
    }
    if ties > 0 {
        log::info!("{ties} system pairs with equal means counted as same direction ({profile_a} vs {profile_b})");
    }
    Ok(ProfilePairAgreement {
        profile_a: profile_a.to_string(),
        profile_b: profile_b.to_string(),
        n_pairs: a.pairs.len(),
        counts,
        ties,
    })
}
