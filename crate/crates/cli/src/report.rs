//! Summary tables and SVG charts built from the effectiveness matrix and the
//! marginal means.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use qvbench_core::evalstats::EffectivenessMatrix;
use qvbench_core::model::write_csv;
use qvbench_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::stages::{analysis_groups, Layout};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemMean {
    pub profile: String,
    pub system: String,
    pub mean: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, Deserialize)]
struct MarginalRow {
    method: String,
    profile: String,
    mean: f64,
    ci_low: f64,
    ci_high: f64,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Mean nDCG per (profile, system) with the rank of the system inside the
/// profile (1 = best; ties broken by system id).
pub fn system_means(matrix: &EffectivenessMatrix, profiles: &[String]) -> Vec<SystemMean> {
    let mut out = Vec::new();
    for p in profiles {
        let mut means: Vec<(String, f64)> = matrix.system_means(p).into_iter().collect();
        means.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        for (i, (system, mean)) in means.into_iter().enumerate() {
            out.push(SystemMean {
                profile: p.clone(),
                system,
                mean,
                rank: i + 1,
            });
        }
    }
    out
}

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn y_axis(s: &mut String, lo: f64, hi: f64, label: &str) {
    let (top, bottom) = (MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{top}" x2="{MARGIN}" y2="{bottom}" stroke="black"/>"#
    );
    for i in 0..=4 {
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let y = bottom - (bottom - top) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"##,
            WIDTH - MARGIN,
            MARGIN - 4.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(label)
    );
}

/// Line chart of system means with one x position per profile and one line
/// per system.
pub fn rankings_svg(means: &[SystemMean], profiles: &[String]) -> String {
    let mut s = svg_open("Mean nDCG per system across profiles");
    let hi = means
        .iter()
        .map(|m| m.mean)
        .fold(0.0_f64, f64::max)
        .max(1e-9);
    y_axis(&mut s, 0.0, hi, "mean nDCG");
    let n = profiles.len().max(1);
    let step = (WIDTH - 2.0 * MARGIN) / n as f64;
    let x = |i: usize| MARGIN + step * (i as f64 + 0.5);
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * v / hi;
    for (i, p) in profiles.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" transform="rotate(-40 {:.1} {:.1})">{}</text>"#,
            x(i),
            HEIGHT - MARGIN + 14.0,
            x(i),
            HEIGHT - MARGIN + 14.0,
            escape(p)
        );
    }
    let mut by_system: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for m in means {
        by_system
            .entry(&m.system)
            .or_default()
            .insert(&m.profile, m.mean);
    }
    for (j, (system, values)) in by_system.iter().enumerate() {
        let colour = PALETTE[j % PALETTE.len()];
        let points: Vec<String> = profiles
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                values
                    .get(p.as_str())
                    .map(|&v| format!("{:.1},{:.1}", x(i), y(v)))
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{colour}">{}</text>"#,
            WIDTH - MARGIN + 4.0,
            MARGIN + 14.0 * j as f64,
            escape(system)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Bar chart of profile marginal means with confidence interval whiskers,
/// coloured by method.
fn marginal_svg(rows: &[MarginalRow]) -> String {
    let mut s = svg_open("Marginal mean nDCG per profile");
    let hi = rows
        .iter()
        .map(|r| r.ci_high.max(r.mean))
        .fold(0.0_f64, f64::max)
        .max(1e-9);
    y_axis(&mut s, 0.0, hi, "mean nDCG");
    let n = rows.len().max(1);
    let step = (WIDTH - 2.0 * MARGIN) / n as f64;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * v.clamp(0.0, hi) / hi;
    let mut methods: Vec<&str> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let m = match methods.iter().position(|m| *m == r.method) {
            Some(m) => m,
            None => {
                methods.push(&r.method);
                methods.len() - 1
            }
        };
        let colour = PALETTE[m % PALETTE.len()];
        let x0 = MARGIN + step * i as f64 + step * 0.15;
        let cx = MARGIN + step * (i as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{colour}"/>"#,
            y(r.mean),
            step * 0.7,
            HEIGHT - MARGIN - y(r.mean)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#,
            y(r.ci_low),
            y(r.ci_high)
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="end" transform="rotate(-40 {cx:.1} {:.1})">{}</text>"#,
            HEIGHT - MARGIN + 14.0,
            HEIGHT - MARGIN + 14.0,
            escape(&r.profile)
        );
    }
    for (j, m) in methods.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{}">{}</text>"#,
            WIDTH - MARGIN + 4.0,
            MARGIN + 14.0 * j as f64,
            PALETTE[j % PALETTE.len()],
            escape(m)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn read_marginal(path: &Path) -> Result<Vec<MarginalRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut reader = csv::Reader::from_reader(file);
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::Validation(format!("{}: {e}", path.display()))))
        .collect()
}

pub fn report(cfg: &PipelineConfig) -> Result<usize> {
    let layout = Layout::new(&cfg.out);
    let matrix = EffectivenessMatrix::read_csv(&layout.eval("ndcg.csv"), cfg.k)?;
    let profiles: Vec<String> = analysis_groups(cfg, &matrix)?
        .into_iter()
        .flat_map(|(_, p)| p)
        .collect();
    let means = system_means(&matrix, &profiles);
    write_csv(
        &layout.report("system_means.csv"),
        &["profile", "system", "mean", "rank"],
        &means,
    )?;
    write_file(
        &layout.report("system_rankings.svg"),
        &rankings_svg(&means, &profiles),
    )?;
    let marginal_path = layout.analysis("marginal_means.csv");
    if marginal_path.exists() {
        write_file(
            &layout.report("marginal_means.svg"),
            &marginal_svg(&read_marginal(&marginal_path)?),
        )?;
    } else {
        log::warn!("report: no marginal means, run analyze first; bar chart skipped");
    }
    log::info!("report: {} profiles", profiles.len());
    Ok(means.len())
}
