//! Studentized range distribution and Tukey's HSD.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::special::{ln_gamma, normal_cdf, normal_pdf, t_quantile};
use crate::error::{Error, Result};

// 16-point Gauss-Legendre nodes and weights on [-1, 1] (positive half).
const GL_X: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_8,
    0.755_404_408_355_003,
    0.865_631_202_387_831_8,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];
const GL_W: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_5,
    0.149_595_988_816_576_7,
    0.124_628_971_255_533_9,
    0.095_158_511_682_492_79,
    0.062_253_523_938_647_89,
    0.027_152_459_411_754_09,
];

/// Integrates `f` over `[a, b]` split into `panels` equal panels.
fn gauss_legendre(a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let mid = a + (i as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for (x, w) in GL_X.iter().zip(&GL_W) {
            s += w * (f(mid - half * x) + f(mid + half * x));
        }
        total += s * half;
    }
    total
}

const Z_LIMIT: f64 = 8.5;
const Z_PANELS: usize = 9;

/// Inner quadrature nodes with their weights premultiplied by `phi(z)`, and `Phi(z)`.
fn inner_nodes() -> &'static [(f64, f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let h = 2.0 * Z_LIMIT / Z_PANELS as f64;
        let mut v = Vec::with_capacity(Z_PANELS * 16);
        for i in 0..Z_PANELS {
            let mid = -Z_LIMIT + (i as f64 + 0.5) * h;
            for (x, w) in GL_X.iter().zip(&GL_W) {
                for z in [mid - 0.5 * h * x, mid + 0.5 * h * x] {
                    v.push((z, 0.5 * h * w * normal_pdf(z), normal_cdf(z)));
                }
            }
        }
        v
    })
}

/// `P(range of k standard normals < w)`.
fn range_cdf_normal(w: f64, k: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let k1 = (k - 1) as i32;
    let v: f64 = inner_nodes()
        .iter()
        .map(|&(z, wt, cdf)| wt * (cdf - normal_cdf(z - w)).max(0.0).powi(k1))
        .sum();
    (k as f64 * v).clamp(0.0, 1.0)
}

/// Log density of `s = sqrt(chi2_df / df)`.
fn ln_scale_density(s: f64, df: f64) -> f64 {
    0.5 * df * df.ln() - ln_gamma(0.5 * df) - (0.5 * df - 1.0) * std::f64::consts::LN_2
        + (df - 1.0) * s.ln()
        - 0.5 * df * s * s
}

/// Support of the scale density outside which it is below `e^-40` of its peak.
fn scale_support(df: f64) -> (f64, f64) {
    let mode = ((df - 1.0) / df).max(0.0).sqrt();
    let peak = if mode > 0.0 {
        ln_scale_density(mode, df)
    } else {
        ln_scale_density(1e-12, df)
    };
    let step = 0.25 / (2.0 * df).sqrt().max(0.25);
    let mut hi = mode.max(step);
    while ln_scale_density(hi, df) > peak - 40.0 {
        hi += step;
    }
    let mut lo = mode;
    while lo > 0.0 && ln_scale_density(lo, df) > peak - 40.0 {
        lo -= step;
    }
    (lo.max(0.0), hi)
}

const OUTER_PANELS: usize = 12;
const OUTER_TOL: f64 = 1e-14;
const OUTER_DEPTH: u32 = 12;

/// Adaptive bisection of one 16-point panel until the two halves agree with
/// the whole to `tol` or to rounding error.
fn adaptive(
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    f: &mut impl FnMut(f64) -> f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = gauss_legendre(a, m, 1, &mut *f);
    let right = gauss_legendre(m, b, 1, &mut *f);
    let diff = (left + right - whole).abs();
    if depth == 0 || diff <= tol || diff <= 8.0 * f64::EPSILON * whole.abs() {
        return left + right;
    }
    adaptive(a, m, left, tol, depth - 1, f) + adaptive(m, b, right, tol, depth - 1, f)
}

/// Above this many degrees of freedom the scale is treated as exactly 1.
const DF_INFINITE: f64 = 1e7;

fn check_args(k: usize, df: f64) -> Result<()> {
    if k < 2 || !(df >= 1.0) {
        return Err(Error::Contract(format!(
            "studentized range needs k >= 2 and df >= 1, got k={k} df={df}"
        )));
    }
    Ok(())
}

/// CDF of the studentized range for `k` groups and `df` error degrees of freedom.
pub fn studentized_range_cdf(q: f64, k: usize, df: f64) -> Result<f64> {
    check_args(k, df)?;
    if q <= 0.0 {
        return Ok(0.0);
    }
    if df >= DF_INFINITE {
        return Ok(range_cdf_normal(q, k));
    }
    let (lo, hi) = scale_support(df);
    let mut f = |s: f64| ln_scale_density(s, df).exp() * range_cdf_normal(q * s, k);
    let h = (hi - lo) / OUTER_PANELS as f64;
    let mut v = 0.0;
    for i in 0..OUTER_PANELS {
        let (a, b) = (lo + i as f64 * h, lo + (i + 1) as f64 * h);
        let whole = gauss_legendre(a, b, 1, &mut f);
        v += adaptive(a, b, whole, OUTER_TOL, OUTER_DEPTH, &mut f);
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Inverse of [`studentized_range_cdf`], found by Brent's method on a bracket.
pub fn studentized_range_quantile(p: f64, k: usize, df: f64) -> Result<f64> {
    check_args(k, df)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Contract(format!(
            "studentized range quantile needs p in (0,1), got {p}"
        )));
    }
    type Key = (u64, usize, u64);
    static CACHE: OnceLock<Mutex<HashMap<Key, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (p.to_bits(), k, df.to_bits());
    if let Some(&q) = cache.lock().expect("quantile cache").get(&key) {
        return Ok(q);
    }
    let q = solve_quantile(p, k, df)?;
    cache.lock().expect("quantile cache").insert(key, q);
    Ok(q)
}

fn solve_quantile(p: f64, k: usize, df: f64) -> Result<f64> {
    let g = |q: f64| studentized_range_cdf(q, k, df).map(|c| c - p);
    let mut a = 0.0;
    let mut fa = -p;
    let mut b = 2.0;
    let mut fb = g(b)?;
    while fb < 0.0 {
        a = b;
        fa = fb;
        b *= 2.0;
        if b > 1e6 {
            return Err(Error::Numeric(format!(
                "no bracket for studentized range quantile p={p} k={k} df={df}"
            )));
        }
        fb = g(b)?;
    }
    brent(g, a, fa, b, fb, 1e-9).map_err(|e| {
        Error::Numeric(format!(
            "studentized range quantile p={p} k={k} df={df}: {e}"
        ))
    })
}

fn brent(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
    tol: f64,
) -> Result<f64> {
    if fa * fb > 0.0 {
        return Err(Error::Numeric("root not bracketed".into()));
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut bisected = true;
    for _ in 0..200 {
        if fb == 0.0 || (b - a).abs() < tol {
            return Ok(b);
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let out_of_range = !((s > lo.min(b)) && (s < lo.max(b)));
        if out_of_range
            || (bisected && (s - b).abs() >= (b - c).abs() / 2.0)
            || (!bisected && (s - b).abs() >= (c - d).abs() / 2.0)
            || (bisected && (b - c).abs() < tol)
            || (!bisected && (c - d).abs() < tol)
        {
            s = 0.5 * (a + b);
            bisected = true;
        } else {
            bisected = false;
        }
        let fs = f(s)?;
        d = c;
        c = b;
        fc = fb;
        if fa * fs < 0.0 {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Err(Error::Numeric(format!(
        "Brent did not converge, bracket [{a}, {b}]"
    )))
}

/// How per-group confidence intervals are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CiKind {
    /// mean ± t(1-α/2, df)·sqrt(MSE/n)
    #[default]
    T,
    /// mean ± HSD/2, so non-overlapping intervals mean a significant pair
    Tukey,
}

impl std::str::FromStr for CiKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t" => Ok(CiKind::T),
            "tukey" => Ok(CiKind::Tukey),
            _ => Err(Error::Validation(format!(
                "unknown CI kind {s:?}, expected t or tukey"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyPair {
    pub a: usize,
    pub b: usize,
    /// `mean[a] - mean[b]`
    pub diff: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyResult {
    pub means: Vec<f64>,
    pub n: usize,
    pub q_crit: f64,
    pub hsd: f64,
    /// All pairs `a < b` in index order.
    pub pairs: Vec<TukeyPair>,
    pub ci: Vec<(f64, f64)>,
}

impl TukeyResult {
    pub fn pair(&self, a: usize, b: usize) -> Option<&TukeyPair> {
        self.pairs.iter().find(|p| p.a == a && p.b == b)
    }
}

/// Tukey's HSD over groups of equal size `n`.
pub fn tukey_hsd(
    means: &[f64],
    n: usize,
    ms_error: f64,
    df_error: f64,
    alpha: f64,
    ci: CiKind,
) -> Result<TukeyResult> {
    if !(df_error >= 1.0) {
        return Err(Error::Validation(format!(
            "Tukey HSD needs df_error >= 1, got {df_error}"
        )));
    }
    if means.len() < 2 || n == 0 {
        return Err(Error::Contract(
            "Tukey HSD needs at least two non-empty groups".into(),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) || ms_error < 0.0 {
        return Err(Error::Contract(format!(
            "bad alpha {alpha} or MS_error {ms_error}"
        )));
    }
    let se = (ms_error / n as f64).sqrt();
    let q_crit = studentized_range_quantile(1.0 - alpha, means.len(), df_error)?;
    let hsd = q_crit * se;
    let half = match ci {
        CiKind::T => t_quantile(1.0 - alpha / 2.0, df_error)? * se,
        CiKind::Tukey => hsd / 2.0,
    };
    let mut pairs = Vec::new();
    for a in 0..means.len() {
        for b in a + 1..means.len() {
            let diff = means[a] - means[b];
            pairs.push(TukeyPair {
                a,
                b,
                diff,
                significant: diff.abs() > hsd,
            });
        }
    }
    Ok(TukeyResult {
        means: means.to_vec(),
        n,
        q_crit,
        hsd,
        pairs,
        ci: means.iter().map(|m| (m - half, m + half)).collect(),
    })
}
