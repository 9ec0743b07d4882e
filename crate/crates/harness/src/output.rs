//! Versioned CSV tables and SVG plots derived from them.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

/// Version string written in every CSV header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One trial row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// Formatted values, one per column.
    pub values: Vec<String>,
    /// Set when a numeric check failed or the trial errored.
    pub flagged: bool,
}

/// Result table of one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Experiment name.
    pub experiment: String,
    /// Column names, without the trailing `flag` column.
    pub columns: Vec<String>,
    /// Rows in trial order.
    pub rows: Vec<Row>,
    /// Summary entries `(key, value)`.
    pub summary: Vec<(String, String)>,
    /// Columns `(x, y)` for the optional plot.
    pub plot: Option<(String, String)>,
    /// Set when a summary-level check failed.
    pub summary_flagged: bool,
}

impl Table {
    /// Empty table.
    pub fn new(experiment: &str, columns: &[&str]) -> Self {
        Self {
            experiment: experiment.to_owned(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Vec::new(),
            plot: None,
            summary_flagged: false,
        }
    }

    /// Appends a row.
    pub fn push(&mut self, values: Vec<String>, flagged: bool) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(Row { values, flagged });
    }

    /// Appends a summary entry.
    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_owned(), value.to_string()));
    }

    /// True when any row or the summary is flagged.
    pub fn flagged(&self) -> bool {
        self.summary_flagged || self.rows.iter().any(|r| r.flagged)
    }

    /// CSV text: a version comment, the header, the rows, then summary rows
    /// `summary,<key>,<value>`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        let mut header: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        header.push("flag");
        w.write_record(&header).expect("in-memory write");
        for r in &self.rows {
            let mut rec: Vec<&str> = r.values.iter().map(String::as_str).collect();
            rec.push(if r.flagged { "1" } else { "0" });
            w.write_record(&rec).expect("in-memory write");
        }
        for (k, v) in &self.summary {
            w.write_record(["summary", k, v]).expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("flush")).expect("utf8");
        format!("# bilin-tf v{VERSION} {}\n{body}", self.experiment)
    }
}

/// Formats a float with the shortest round-trip representation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_file(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())
}

/// Points `(x, y)` of two columns read back from CSV text; comment lines,
/// summary rows and unparsable cells are skipped.
pub fn read_points(csv_text: &str, x: &str, y: &str) -> Result<Vec<(f64, f64)>, String> {
    let body: String = csv_text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(body.as_bytes());
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| format!("no column {name}"));
    let (ix, iy) = (col(x)?, col(y)?);
    let mut pts = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        if rec.get(0) == Some("summary") {
            continue;
        }
        if let (Some(Ok(a)), Some(Ok(b))) = (rec.get(ix).map(str::parse::<f64>), rec.get(iy).map(str::parse::<f64>)) {
            if a.is_finite() && b.is_finite() {
                pts.push((a, b));
            }
        }
    }
    Ok(pts)
}

/// Scatter plot of `y` against `x` as an SVG document.
pub fn svg_scatter(points: &[(f64, f64)], x: &str, y: &str, title: &str) -> String {
    let (w, h, m) = (640.0, 400.0, 50.0);
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let lo = points.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let sx = |v: f64| m + (v - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |v: f64| h - m - (v - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#, w / 2.0);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} V{} H{}" fill="none" stroke="black"/>"#,
        h - m,
        w - m
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{x}</text>"#, w / 2.0, h - 12.0);
    let _ = writeln!(s, r#"<text x="14" y="{}" font-size="12" transform="rotate(-90 14 {})">{y}</text>"#, h / 2.0, h / 2.0);
    for (v, px) in [(x0, sx(x0)), (x1, sx(x1))] {
        let _ = writeln!(s, r#"<text x="{px}" y="{}" text-anchor="middle" font-size="10">{v:.3e}</text>"#, h - m + 14.0);
    }
    for (v, py) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(s, r#"<text x="{}" y="{py}" text-anchor="end" font-size="10">{v:.3e}</text>"#, m - 4.0);
    }
    for &(a, b) in points {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="steelblue"/>"#, sx(a), sy(b));
    }
    s.push_str("</svg>\n");
    s
}
