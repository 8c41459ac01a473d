//! Results files, Markdown tables, CSV exports and SVG charts.
//!
//! A results file is CSV with a `#` preamble:
//!
//! ```text
//! # egress-sim results
//! # schema=1
//! # fingerprint=<hex sha-256>
//! layout,student_count,runtime,seeds,off_casualty_pct,...
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiment::{CellResult, ExperimentReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub layout: String,
    pub student_count: usize,
    pub runtime: u32,
    pub seeds: usize,
    pub off_casualty_pct: f64,
    pub off_evacuation_pct: f64,
    pub on_casualty_pct: f64,
    pub on_evacuation_pct: f64,
    pub casualty_change: f64,
    pub evacuation_efficiency_change: f64,
    pub off_casualty_sd: f64,
    pub off_evacuation_sd: f64,
    pub on_casualty_sd: f64,
    pub on_evacuation_sd: f64,
}

impl From<&CellResult> for CellSummary {
    fn from(c: &CellResult) -> Self {
        CellSummary {
            layout: c.layout.clone(),
            student_count: c.student_count,
            runtime: c.runtime,
            seeds: c.seeds(),
            off_casualty_pct: c.off_casualty.mean,
            off_evacuation_pct: c.off_evacuation.mean,
            on_casualty_pct: c.on_casualty.mean,
            on_evacuation_pct: c.on_evacuation.mean,
            casualty_change: c.casualty_change,
            evacuation_efficiency_change: c.evacuation_efficiency_change,
            off_casualty_sd: c.off_casualty.sd,
            off_evacuation_sd: c.off_evacuation.sd,
            on_casualty_sd: c.on_casualty.sd,
            on_evacuation_sd: c.on_evacuation.sd,
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("results file has no `# schema=` line")]
    MissingSchema,
    #[error("results schema {found} is not supported (expected {SCHEMA_VERSION})")]
    SchemaMismatch { found: String },
    #[error("results file: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultsFile {
    pub fingerprint: String,
    pub rows: Vec<CellSummary>,
}

// -0.0 prints as "-0.00"; adding 0.0 turns it into +0.0
fn clean(v: f64) -> f64 {
    v + 0.0
}

fn fixed(v: f64, places: usize) -> String {
    format!("{:.*}", places, clean(v))
}

impl ResultsFile {
    pub fn from_report(report: &ExperimentReport) -> Self {
        ResultsFile {
            fingerprint: report.fingerprint.clone(),
            rows: report.cells.iter().map(CellSummary::from).collect(),
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# egress-sim results");
        let _ = writeln!(out, "# schema={SCHEMA_VERSION}");
        let _ = writeln!(out, "# fingerprint={}", self.fingerprint);
        out.push_str(&rows_csv(&self.rows, 6));
        out
    }

    pub fn parse(text: &str) -> Result<Self, ReportError> {
        let mut schema = None;
        let mut fingerprint = String::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let body = line.trim_start_matches('#').trim();
            if let Some(v) = body.strip_prefix("schema=") {
                schema = Some(v.trim().to_string());
            } else if let Some(v) = body.strip_prefix("fingerprint=") {
                fingerprint = v.trim().to_string();
            }
        }
        match schema {
            None => return Err(ReportError::MissingSchema),
            Some(s) if s != SCHEMA_VERSION.to_string() => {
                return Err(ReportError::SchemaMismatch { found: s })
            }
            Some(_) => {}
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let rows = reader
            .deserialize()
            .collect::<Result<Vec<CellSummary>, _>>()?;
        Ok(ResultsFile { fingerprint, rows })
    }
}

const COLUMNS: [&str; 14] = [
    "layout",
    "student_count",
    "runtime",
    "seeds",
    "off_casualty_pct",
    "off_evacuation_pct",
    "on_casualty_pct",
    "on_evacuation_pct",
    "casualty_change",
    "evacuation_efficiency_change",
    "off_casualty_sd",
    "off_evacuation_sd",
    "on_casualty_sd",
    "on_evacuation_sd",
];

fn rows_csv(rows: &[CellSummary], places: usize) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS).expect("in-memory write");
    for r in rows {
        let mut rec = vec![
            r.layout.clone(),
            r.student_count.to_string(),
            r.runtime.to_string(),
            r.seeds.to_string(),
        ];
        rec.extend(
            [
                r.off_casualty_pct,
                r.off_evacuation_pct,
                r.on_casualty_pct,
                r.on_evacuation_pct,
                r.casualty_change,
                r.evacuation_efficiency_change,
                r.off_casualty_sd,
                r.off_evacuation_sd,
                r.on_casualty_sd,
                r.on_evacuation_sd,
            ]
            .map(|v| fixed(v, places)),
        );
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// Plain CSV of the cell summaries with two decimals. A file with no cells
/// yields only the header line.
pub fn render_csv(results: &ResultsFile) -> String {
    rows_csv(&results.rows, 2)
}

fn groups(rows: &[CellSummary]) -> Vec<(String, u32, Vec<&CellSummary>)> {
    let mut out: Vec<(String, u32, Vec<&CellSummary>)> = Vec::new();
    for r in rows {
        match out
            .iter_mut()
            .find(|(l, t, _)| *l == r.layout && *t == r.runtime)
        {
            Some((_, _, v)) => v.push(r),
            None => out.push((r.layout.clone(), r.runtime, vec![r])),
        }
    }
    out
}

fn runtime_label(seconds: u32) -> String {
    if seconds.is_multiple_of(60) {
        format!("{} minutes", seconds / 60)
    } else {
        format!("{seconds} s")
    }
}

pub fn markdown_row(r: &CellSummary) -> String {
    format!(
        "| {} Students | {} | {} | {} | {} | {} | {} |",
        r.student_count,
        fixed(r.off_casualty_pct, 2),
        fixed(r.off_evacuation_pct, 2),
        fixed(r.on_casualty_pct, 2),
        fixed(r.on_evacuation_pct, 2),
        fixed(r.casualty_change, 2),
        fixed(r.evacuation_efficiency_change, 2),
    )
}

/// One table per (layout, runtime), in the order they first appear.
pub fn render_markdown(results: &ResultsFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Simulation results\n");
    let _ = writeln!(
        out,
        "Result 1 is without gunshot detection, Result 2 with it. Changes are Result 2 minus Result 1 in percentage points.\n"
    );
    if !results.fingerprint.is_empty() {
        let _ = writeln!(out, "Fingerprint: `{}`\n", results.fingerprint);
    }
    for (layout, runtime, rows) in groups(&results.rows) {
        let _ = writeln!(out, "## {layout}, {}\n", runtime_label(runtime));
        let _ = writeln!(
            out,
            "| Students | Result 1 Casualties (%) | Result 1 Evacuation (%) | Result 2 Casualties (%) | Result 2 Evacuation (%) | Casualty Change | Evacuation Efficiency Change |"
        );
        let _ = writeln!(out, "|---|---:|---:|---:|---:|---:|---:|");
        for r in rows {
            let _ = writeln!(out, "{}", markdown_row(r));
        }
        let _ = writeln!(out);
    }
    if !results.rows.is_empty() {
        let summary = summarize_direction(&results.rows);
        let all = &summary.overall;
        let _ = writeln!(out, "## Summary\n");
        let _ = writeln!(
            out,
            "Casualties fell in {} of {} cells and evacuation rose in {} of {} cells.\n",
            all.casualty_decreased, all.cells, all.evacuation_increased, all.cells
        );
        let _ = writeln!(
            out,
            "| Layout | Mean Casualty Change | Mean Evacuation Efficiency Change |"
        );
        let _ = writeln!(out, "|---|---:|---:|");
        for l in &summary.per_layout {
            let _ = writeln!(
                out,
                "| {} | {} | {} |",
                l.layout,
                fixed(l.mean_casualty_change, 2),
                fixed(l.mean_evacuation_change, 2)
            );
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayoutDirection {
    pub layout: String,
    pub cells: usize,
    pub casualty_decreased: usize,
    pub evacuation_increased: usize,
    pub mean_casualty_change: f64,
    pub mean_evacuation_change: f64,
}

impl LayoutDirection {
    fn of(layout: &str, rows: &[&CellSummary]) -> Self {
        let n = rows.len() as f64;
        LayoutDirection {
            layout: layout.to_string(),
            cells: rows.len(),
            casualty_decreased: rows.iter().filter(|r| r.casualty_change < 0.0).count(),
            evacuation_increased: rows
                .iter()
                .filter(|r| r.evacuation_efficiency_change > 0.0)
                .count(),
            mean_casualty_change: rows.iter().map(|r| r.casualty_change).sum::<f64>() / n,
            mean_evacuation_change: rows
                .iter()
                .map(|r| r.evacuation_efficiency_change)
                .sum::<f64>()
                / n,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSummary {
    pub overall: LayoutDirection,
    /// In first-seen order.
    pub per_layout: Vec<LayoutDirection>,
}

/// Counts of improving cells and mean deltas, overall and per layout.
pub fn summarize_direction(rows: &[CellSummary]) -> DirectionSummary {
    let mut layouts: Vec<&str> = Vec::new();
    for r in rows {
        if !layouts.contains(&r.layout.as_str()) {
            layouts.push(&r.layout);
        }
    }
    let per_layout = layouts
        .into_iter()
        .map(|l| {
            LayoutDirection::of(
                l,
                &rows.iter().filter(|r| r.layout == l).collect::<Vec<_>>(),
            )
        })
        .collect();
    DirectionSummary {
        overall: LayoutDirection::of("all", &rows.iter().collect::<Vec<_>>()),
        per_layout,
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const OFF_COLOR: &str = "#9e9e9e";
const ON_COLOR: &str = "#1f77b4";

/// Grouped bar charts: for each layout, casualties and evacuation per
/// (runtime, students) with the detector off and on. Self-contained SVG.
pub fn render_svg(results: &ResultsFile) -> String {
    let bar = 7.0;
    let group_gap = 6.0;
    let chart_h = 160.0;
    let top = 40.0;
    let left = 40.0;
    let panel_gap = 70.0;

    let mut layouts: Vec<&str> = Vec::new();
    for r in &results.rows {
        if !layouts.contains(&r.layout.as_str()) {
            layouts.push(&r.layout);
        }
    }
    let max_groups = layouts
        .iter()
        .map(|l| results.rows.iter().filter(|r| r.layout == *l).count())
        .max()
        .unwrap_or(0);
    let chart_w = (max_groups as f64 * (2.0 * bar + group_gap)).max(120.0);
    let width = left + 2.0 * chart_w + 80.0;
    let height = top + layouts.len() as f64 * (chart_h + panel_gap) + 20.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="10" width="10" height="10" fill="{OFF_COLOR}"/><text x="{}" y="19">detector off</text>"#,
        left + 14.0
    );
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="10" width="10" height="10" fill="{ON_COLOR}"/><text x="{}" y="19">detector on</text>"#,
        left + 100.0,
        left + 114.0
    );

    for (i, layout) in layouts.iter().enumerate() {
        let mut rows: Vec<&CellSummary> = results
            .rows
            .iter()
            .filter(|r| r.layout == *layout)
            .collect();
        rows.sort_by_key(|r| (r.runtime, r.student_count));
        let y0 = top + i as f64 * (chart_h + panel_gap) + 14.0;
        let base = y0 + chart_h;
        for (k, (title, off, on)) in [
            (
                "casualties (%)",
                rows.iter().map(|r| r.off_casualty_pct).collect::<Vec<_>>(),
                rows.iter().map(|r| r.on_casualty_pct).collect::<Vec<_>>(),
            ),
            (
                "evacuation (%)",
                rows.iter().map(|r| r.off_evacuation_pct).collect(),
                rows.iter().map(|r| r.on_evacuation_pct).collect(),
            ),
        ]
        .into_iter()
        .enumerate()
        {
            let x0 = left + k as f64 * (chart_w + 40.0);
            let _ = writeln!(
                s,
                r#"<text x="{x0}" y="{:.1}" font-weight="bold">{} {title}</text>"#,
                y0 - 4.0,
                escape(layout)
            );
            let _ = writeln!(
                s,
                r#"<line x1="{x0}" y1="{base:.1}" x2="{:.1}" y2="{base:.1}" stroke="black"/>"#,
                x0 + chart_w
            );
            let _ = writeln!(
                s,
                r#"<line x1="{x0}" y1="{y0:.1}" x2="{x0}" y2="{base:.1}" stroke="black"/>"#
            );
            for tick in [0.0, 50.0, 100.0] {
                let y = base - chart_h * tick / 100.0;
                let _ = writeln!(
                    s,
                    r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{tick:.0}</text>"#,
                    x0 - 3.0,
                    y + 3.0
                );
            }
            for (g, r) in rows.iter().enumerate() {
                let gx = x0 + 3.0 + g as f64 * (2.0 * bar + group_gap);
                for (j, (value, color)) in [(off[g], OFF_COLOR), (on[g], ON_COLOR)]
                    .into_iter()
                    .enumerate()
                {
                    let h = chart_h * value.clamp(0.0, 100.0) / 100.0;
                    let _ = writeln!(
                        s,
                        r#"<rect x="{:.1}" y="{:.1}" width="{bar}" height="{h:.1}" fill="{color}"><title>{} students, {} s: {:.2}</title></rect>"#,
                        gx + j as f64 * bar,
                        base - h,
                        r.student_count,
                        r.runtime,
                        clean(value)
                    );
                }
                let _ = writeln!(
                    s,
                    r#"<text x="{:.1}" y="{:.1}" font-size="7" text-anchor="middle">{}</text>"#,
                    gx + bar,
                    base + 9.0,
                    r.student_count
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(layout: &str, n: usize, runtime: u32, cas: f64) -> CellSummary {
        CellSummary {
            layout: layout.into(),
            student_count: n,
            runtime,
            seeds: 3,
            off_casualty_pct: cas,
            off_evacuation_pct: 10.0,
            on_casualty_pct: cas - 5.0,
            on_evacuation_pct: 40.0,
            casualty_change: -5.0,
            evacuation_efficiency_change: 30.0,
            off_casualty_sd: 0.0,
            off_evacuation_sd: 0.0,
            on_casualty_sd: 0.0,
            on_evacuation_sd: 0.0,
        }
    }

    #[test]
    fn results_round_trip() {
        let file = ResultsFile {
            fingerprint: "abc".into(),
            rows: vec![row("a", 50, 360, 12.5), row("a", 100, 360, 7.25)],
        };
        let back = ResultsFile::parse(&file.to_csv_string()).unwrap();
        assert_eq!(back, file);
    }

    #[test]
    fn schema_is_checked() {
        let text = ResultsFile {
            fingerprint: String::new(),
            rows: vec![],
        }
        .to_csv_string();
        assert!(ResultsFile::parse(&text).unwrap().rows.is_empty());
        let bumped = text.replace("schema=1", "schema=2");
        assert!(matches!(
            ResultsFile::parse(&bumped),
            Err(ReportError::SchemaMismatch { found }) if found == "2"
        ));
        let stripped: String = text
            .lines()
            .filter(|l| !l.contains("schema"))
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(matches!(
            ResultsFile::parse(&stripped),
            Err(ReportError::MissingSchema)
        ));
    }

    #[test]
    fn empty_results_render_header_only() {
        let empty = ResultsFile {
            fingerprint: String::new(),
            rows: vec![],
        };
        assert_eq!(render_csv(&empty), format!("{}\n", COLUMNS.join(",")));
        assert!(render_svg(&empty).starts_with("<svg"));
    }

    #[test]
    fn negative_zero_is_printed_as_zero() {
        let mut r = row("a", 50, 360, 5.0);
        r.casualty_change = -0.0;
        assert!(markdown_row(&r).contains("| 0.00 |"));
    }

    #[test]
    fn markdown_groups_by_layout_and_runtime() {
        let file = ResultsFile {
            fingerprint: String::new(),
            rows: vec![
                row("a", 50, 360, 20.0),
                row("a", 50, 420, 20.0),
                row("a", 100, 360, 20.0),
            ],
        };
        let md = render_markdown(&file);
        assert_eq!(md.matches("## a, 6 minutes").count(), 1);
        assert_eq!(md.matches("## a, 7 minutes").count(), 1);
        assert!(md.contains("Casualties fell in 3 of 3 cells"));
    }

    #[test]
    fn svg_escapes_names() {
        let file = ResultsFile {
            fingerprint: String::new(),
            rows: vec![row("a<b", 50, 360, 20.0)],
        };
        let svg = render_svg(&file);
        assert!(svg.contains("a&lt;b"));
        assert!(!svg.contains("href"));
    }
}
