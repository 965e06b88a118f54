//! Annexe tables compiled into the binary, cell proliferation record (CPR)
//! ingestion, and every on-disk format the tools emit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::ops::RangeInclusive;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ComparisonReport, Mesh, SectionProfile, StageParameters, SECTION_LENGTH_UM};

const TABLE1: &str = include_str!("../assets/table1.csv");
const TABLE2: &str = include_str!("../assets/table2.csv");
const TABLE3: &str = include_str!("../assets/table3.csv");
const TABLE4: &str = include_str!("../assets/table4.csv");
const TABLE5: &str = include_str!("../assets/table5.csv");

/// One of the five embedded annexe tables. The first column is always the
/// section index; the rest are numeric columns addressed by header name.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub id: u8,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Fixture {
    fn parse(id: u8, text: &str) -> Self {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let headers = reader.headers().expect("embedded header").iter().map(String::from).collect();
        let rows = reader
            .records()
            .map(|r| {
                r.expect("embedded row")
                    .iter()
                    .map(|v| v.parse::<f64>().expect("embedded number"))
                    .collect()
            })
            .collect();
        Fixture { id, headers, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn sections(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r[0] as usize).collect()
    }

    pub fn column(&self, name: &str) -> Result<SectionProfile> {
        let idx = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Contract(format!("table {} has no column '{name}'", self.id)))?;
        Ok(SectionProfile {
            label: format!("table {} {name}", self.id),
            start: self.rows.first().map_or(0, |r| r[0] as usize),
            values: self.rows.iter().map(|r| r[idx]).collect(),
        })
    }

    pub fn row(&self, section: usize) -> Option<&[f64]> {
        self.rows.iter().find(|r| r[0] as usize == section).map(|r| &r[1..])
    }
}

/// Returns annexe table `id` (1–5) verbatim.
pub fn fixture(id: u8) -> Result<Fixture> {
    let text = match id {
        1 => TABLE1,
        2 => TABLE2,
        3 => TABLE3,
        4 => TABLE4,
        5 => TABLE5,
        _ => return Err(Error::Contract(format!("no annexe table {id}; expected 1..=5"))),
    };
    Ok(Fixture::parse(id, text))
}

/// E2 counts: interphase ("intermitotic") and mitotic cells in 16 sections.
pub struct Table1(Fixture);

impl Table1 {
    pub fn interphase(&self) -> SectionProfile {
        self.0.column("intermitotic").unwrap().relabeled("E2 interphase")
    }

    pub fn mitotic(&self) -> SectionProfile {
        self.0.column("mitotic").unwrap().relabeled("E2 mitotic")
    }

    pub fn as_cpr(&self) -> Vec<CprRecord> {
        self.0
            .rows
            .iter()
            .map(|r| CprRecord {
                window_index: r[0] as u32,
                mitotic_count: r[2] as u32,
                total_count: (r[1] + r[2]) as u32,
                window_length: SECTION_LENGTH_UM,
            })
            .collect()
    }
}

pub fn table1() -> Table1 {
    Table1(fixture(1).unwrap())
}

/// Why a Table 4 row cannot be trusted as printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Table4Anomaly {
    /// The s-interval restarts at 2.4 ≤ s < 4.8 instead of 2.4(j−1) ≤ s < 2.4j.
    IntervalMisprint,
    /// Initial and model values repeat those of rows 8–12 rather than
    /// continuing the E4 profile.
    RepeatedRows,
    /// Model values sit well below β(j) times the printed initial values.
    OffProfile,
}

const TABLE4_ANOMALIES: [(RangeInclusive<usize>, Table4Anomaly); 3] = [
    (8..=12, Table4Anomaly::IntervalMisprint),
    (32..=36, Table4Anomaly::RepeatedRows),
    (49..=54, Table4Anomaly::OffProfile),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table4Row {
    pub section: usize,
    pub s_low: f64,
    pub s_high: f64,
    pub initial: f64,
    pub model: f64,
    pub experimental: f64,
    pub anomaly: Option<Table4Anomaly>,
}

pub fn table4_rows() -> Vec<Table4Row> {
    fixture(4)
        .unwrap()
        .rows
        .iter()
        .map(|r| {
            let section = r[0] as usize;
            Table4Row {
                section,
                s_low: r[1],
                s_high: r[2],
                initial: r[3],
                model: r[4],
                experimental: r[5],
                anomaly: TABLE4_ANOMALIES
                    .iter()
                    .find(|(range, _)| range.contains(&section))
                    .map(|(_, kind)| *kind),
            }
        })
        .collect()
}

/// Rows whose model values cannot be reproduced from the surrounding
/// data; excluded when comparing against Table 4's model column.
pub fn table4_value_anomalies() -> Vec<usize> {
    table4_rows()
        .into_iter()
        .filter(|r| matches!(r.anomaly, Some(Table4Anomaly::RepeatedRows | Table4Anomaly::OffProfile)))
        .map(|r| r.section)
        .collect()
}

/// One 25 µm window of a cell proliferation record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CprRecord {
    pub window_index: u32,
    pub mitotic_count: u32,
    pub total_count: u32,
    pub window_length: f64,
}

impl CprRecord {
    pub fn interphase_count(&self) -> u32 {
        self.total_count - self.mitotic_count
    }
}

#[derive(Deserialize)]
struct CprRow {
    window: u32,
    mitotic: u32,
    total: u32,
}

/// Parses a `window,mitotic,total` CSV and returns the records sorted by
/// window.
pub fn load_cpr<R: Read>(reader: R) -> Result<Vec<CprRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
    if headers.iter().collect::<Vec<_>>() != ["window", "mitotic", "total"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header 'window,mitotic,total', got '{}'", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut records = Vec::new();
    for (n, row) in reader.deserialize::<CprRow>().enumerate() {
        let line = n + 2;
        let row = row.map_err(|e| Error::Parse { line, message: e.to_string() })?;
        if row.mitotic > row.total {
            return Err(Error::Validation(format!(
                "line {line}: mitotic count {} exceeds total {}",
                row.mitotic, row.total
            )));
        }
        records.push(CprRecord {
            window_index: row.window,
            mitotic_count: row.mitotic,
            total_count: row.total,
            window_length: SECTION_LENGTH_UM,
        });
    }
    records.sort_by_key(|r| r.window_index);
    if let Some(w) = records.windows(2).find(|w| w[0].window_index == w[1].window_index) {
        return Err(Error::Validation(format!("window {} appears twice", w[0].window_index)));
    }
    if records.is_empty() {
        return Err(Error::Validation("record has no windows".into()));
    }
    Ok(records)
}

pub fn load_cpr_path(path: &Path) -> Result<Vec<CprRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_cpr(file)
}

pub fn cpr_to_csv(records: &[CprRecord]) -> String {
    let mut out = String::from("window,mitotic,total\n");
    for r in records {
        let _ = writeln!(out, "{},{},{}", r.window_index, r.mitotic_count, r.total_count);
    }
    out
}

/// Interphase and mitotic section profiles of a record.
pub fn cpr_profiles(records: &[CprRecord]) -> (SectionProfile, SectionProfile) {
    let start = records.first().map_or(1, |r| r.window_index as usize);
    let interphase = records.iter().map(|r| r.interphase_count() as f64).collect();
    let mitotic = records.iter().map(|r| r.mitotic_count as f64).collect();
    (
        SectionProfile { label: "interphase".into(), start, values: interphase },
        SectionProfile { label: "mitotic".into(), start, values: mitotic },
    )
}

/// Six significant digits, no exponent, trailing zeros trimmed.
pub fn format_number(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() { "0".into() } else { v.to_string() };
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.truncate(s.trim_end_matches('0').trim_end_matches('.').len());
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn profile_csv(profile: &SectionProfile) -> String {
    let mut out = String::from("section,value\n");
    for (s, v) in profile.indexed() {
        let _ = writeln!(out, "{s},{}", format_number(v));
    }
    out
}

pub fn write_profile_csv(profile: &SectionProfile, path: &Path) -> Result<()> {
    write_file(path, &profile_csv(profile))
}

pub fn read_profile_csv(path: &Path, label: &str) -> Result<SectionProfile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut start = None;
    let mut values = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let parse = |i: usize| rec.get(i).unwrap_or("").parse::<f64>().map_err(|e| Error::Parse { line, message: e.to_string() });
        let section = parse(0)? as usize;
        start.get_or_insert(section);
        values.push(parse(1)?);
    }
    SectionProfile::new(label, start.unwrap_or(1), values)
}

pub fn comparison_csv(report: &ComparisonReport) -> String {
    let mut out = String::from("section,model,reference,delta\n");
    for d in &report.per_section_delta {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            d.index,
            format_number(d.model),
            format_number(d.reference),
            format_number(d.delta)
        );
    }
    out
}

pub fn write_comparison_csv(report: &ComparisonReport, path: &Path) -> Result<()> {
    write_file(path, &comparison_csv(report))
}

/// Everything needed to re-run a command and get the same bytes out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub stage: Option<String>,
    pub parameters: Option<StageParameters>,
    pub mesh: Option<Mesh>,
    pub seeding: Option<String>,
    pub diffusion_mode: Option<String>,
    /// Modelling choices in effect, keyed by name.
    pub settings: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    /// Taken from `SOURCE_DATE_EPOCH` when set; wall-clock time would break
    /// byte-identical reruns.
    pub timestamp: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            tool: "tectum".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            stage: None,
            parameters: None,
            mesh: None,
            seeding: None,
            diffusion_mode: None,
            settings: BTreeMap::new(),
            outputs: Vec::new(),
            timestamp: std::env::var("SOURCE_DATE_EPOCH").ok(),
        }
    }
}

pub fn write_manifest_json(manifest: &RunManifest, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    write_file(path, &text)
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn nice_ceiling(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let base = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * base)
        .find(|&c| c >= v)
        .unwrap_or(10.0 * base)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Line chart of section profiles: section index against cell count.
pub fn render_profile_svg(profiles: &[SectionProfile], title: &str) -> Result<String> {
    if profiles.is_empty() || profiles.iter().any(|p| p.is_empty()) {
        return Err(Error::Contract("cannot plot an empty profile".into()));
    }
    let (left, right, top, bottom) = (60.0, 20.0, 40.0, 50.0);
    let plot_w = WIDTH - left - right;
    let plot_h = HEIGHT - top - bottom;
    let x_min = profiles.iter().map(|p| p.start).min().unwrap() as f64;
    let x_max = profiles.iter().map(|p| p.start + p.len() - 1).max().unwrap() as f64;
    let x_span = (x_max - x_min).max(1.0);
    let y_max = nice_ceiling(profiles.iter().flat_map(|p| p.values.iter().copied()).fold(0.0, f64::max));
    let px = |s: f64| left + (s - x_min) / x_span * plot_w;
    let py = |v: f64| top + plot_h - v / y_max * plot_h;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="800" height="400" viewBox="0 0 800 400" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="800" height="400" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="400" y="22" text-anchor="middle" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        svg,
        r#"<path d="M{left:.2} {top:.2} V{:.2} H{:.2}" fill="none" stroke="black"/>"#,
        top + plot_h,
        left + plot_w
    );
    for k in 0..=5 {
        let v = y_max * k as f64 / 5.0;
        let y = py(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{left:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 4.0,
            left - 6.0,
            y + 4.0,
            format_number(v)
        );
    }
    for k in 0..=5 {
        let s = x_min + x_span * k as f64 / 5.0;
        let x = px(s);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            top + plot_h,
            top + plot_h + 4.0,
            top + plot_h + 18.0,
            format_number(s.round())
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="392" text-anchor="middle">section</text>"#,
        left + plot_w / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">cells</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    for (n, p) in profiles.iter().enumerate() {
        let colour = PALETTE[n % PALETTE.len()];
        let points: Vec<String> = p
            .indexed()
            .map(|(s, v)| format!("{:.2},{:.2}", px(s as f64), py(v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 10.0 + 16.0 * n as f64;
        let lx = left + plot_w - 190.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&p.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn write_profile_svg(profiles: &[SectionProfile], title: &str, path: &Path) -> Result<()> {
    let svg = render_profile_svg(profiles, title)?;
    write_file(path, &svg)
}
