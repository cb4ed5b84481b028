use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gain applied to a relevance grade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gain {
    /// `g = rel`
    #[default]
    Linear,
    /// `g = 2^rel - 1`
    Exp,
}

impl Gain {
    pub fn apply(self, grade: u8) -> f64 {
        match self {
            Gain::Linear => grade as f64,
            Gain::Exp => (1u64 << grade) as f64 - 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gain::Linear => "linear",
            Gain::Exp => "exp",
        }
    }
}

impl std::str::FromStr for Gain {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Gain::Linear),
            "exp" | "exponential" => Ok(Gain::Exp),
            _ => Err(Error::Validation(format!(
                "unknown gain {s:?}, expected linear or exp"
            ))),
        }
    }
}

fn dcg(grades: impl Iterator<Item = u8>, k: usize, gain: Gain) -> f64 {
    grades
        .take(k)
        .enumerate()
        .map(|(i, g)| gain.apply(g) / ((i + 2) as f64).log2())
        .sum()
}

/// NDCG@k of `ranked` grades (rank order) against the full pool of judged
/// grades for the query. Returns 0 when the ideal DCG is 0.
pub fn ndcg_at_k(ranked: &[u8], ideal: &[u8], k: usize, gain: Gain) -> f64 {
    let mut sorted = ideal.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(sorted.into_iter(), k, gain);
    if idcg == 0.0 {
        return 0.0;
    }
    dcg(ranked.iter().copied(), k, gain) / idcg
}
